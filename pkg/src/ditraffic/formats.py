"""On-disk formats: dataset CSV, request logs, DI matrix CSV, generator profiles.

Dataset CSV is long format, one row per (event, device)::

    event_id,device_id,slot_1,...,slot_L

with 0/1 cells, LF line endings, rows sorted by numeric event id then
device id.
"""

from __future__ import annotations

import csv
import io
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from .datagen import GeneratorConfig
from .types import ConfigError, DatasetError, DiMatrix, EventDataset, align_events


def dataset_to_csv(dataset: EventDataset) -> str:
    L = dataset.slots_per_event
    cube = dataset.cube
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["event_id", "device_id"] + [f"slot_{s}" for s in range(1, L + 1)])
    order = sorted(range(len(dataset.device_ids)), key=lambda m: dataset.device_ids[m])
    for e in range(dataset.num_events):
        for m in order:
            w.writerow([e, dataset.device_ids[m], *cube[m, e].tolist()])
    return buf.getvalue()


def write_dataset(dataset: EventDataset, path: str | Path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8", newline="")


def read_dataset(path: str | Path) -> EventDataset:
    """Parse a dataset CSV; errors name the offending line."""
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_dataset(fh, str(path))


def parse_dataset(fh, name: str = "<stream>") -> EventDataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError(f"{name}: empty file") from None
    if header[:2] != ["event_id", "device_id"] or header[2:] != [f"slot_{s}" for s in range(1, len(header) - 1)]:
        raise DatasetError(f"{name}:1: bad header {header!r}")
    L = len(header) - 2
    if L < 1:
        raise DatasetError(f"{name}:1: no slot columns")
    rows: dict[tuple[int, str], list[int]] = {}
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != L + 2:
            raise DatasetError(f"{name}:{line}: expected {L + 2} fields, got {len(row)}")
        try:
            event = int(row[0])
        except ValueError:
            raise DatasetError(f"{name}:{line}: event_id {row[0]!r} is not an integer") from None
        if row[2:] and any(c not in ("0", "1") for c in row[2:]):
            raise DatasetError(f"{name}:{line}: slot values must be 0 or 1")
        key = (event, row[1])
        if key in rows:
            raise DatasetError(f"{name}:{line}: duplicate row for event {event}, device {row[1]!r}")
        rows[key] = [int(c) for c in row[2:]]
    if not rows:
        raise DatasetError(f"{name}: no data rows")
    events = sorted({e for e, _ in rows})
    devices = sorted({d for _, d in rows})
    missing = [(e, d) for e in events for d in devices if (e, d) not in rows]
    if missing:
        e, d = missing[0]
        raise DatasetError(f"{name}: no row for event {e}, device {d!r} ({len(missing)} missing rows)")
    cube = np.array([[rows[(e, d)] for e in events] for d in devices], dtype=np.uint8)
    return EventDataset.from_array(devices, cube)


def read_request_log(path: str | Path, slots_per_event: int | None = None) -> EventDataset:
    """Align a raw request log with columns ``event_id,device_id,time``.

    Devices are every id that appears in the log; an event with no request
    from a device leaves that device silent.
    """
    events: dict[str, dict[str, list[int]]] = defaultdict(lambda: defaultdict(list))
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"event_id", "device_id", "time"} <= set(reader.fieldnames):
            raise DatasetError(f"{path}:1: header must contain event_id, device_id, time")
        for row in reader:
            try:
                t = int(row["time"])
            except (TypeError, ValueError):
                raise DatasetError(f"{path}:{reader.line_num}: time {row['time']!r} is not an integer") from None
            events[row["event_id"]][row["device_id"]].append(t)

    def event_key(e):
        return (0, int(e), e) if e.lstrip("-").isdigit() else (1, 0, e)

    ordered = [events[e] for e in sorted(events, key=event_key)]
    return align_events(ordered, slots_per_event=slots_per_event)


def di_matrix_to_csv(mat: DiMatrix) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "i", "di_bits"])
    for (k, i), v in sorted(mat.values.items()):
        w.writerow([k, i, repr(v)])
    return buf.getvalue()


def di_matrix_filename(mat: DiMatrix, ext: str = "csv") -> str:
    return f"di_{mat.source_id}_to_{mat.target_id}.{ext}"


def read_profiles(path: str | Path) -> GeneratorConfig:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return GeneratorConfig.from_dict(d)


def write_heatmap(mat: DiMatrix, path: str | Path) -> None:
    """Render rows = lag, columns = slot."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    grid = mat.to_grid()
    L = mat.slots_per_event
    fig, ax = plt.subplots(figsize=(5, 4))
    im = ax.imshow(grid, origin="upper", cmap="viridis", vmin=0.0)
    ax.set_xticks(range(L - 1), [str(k) for k in range(1, L)])
    ax.set_yticks(range(L - 1), [str(i) for i in range(L - 1)])
    ax.set_xlabel("slot k")
    ax.set_ylabel("lag i")
    ax.set_title(f"I({mat.source_id} -> {mat.target_id}) [bits]")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
