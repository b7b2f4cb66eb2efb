"""Data model for event-aligned binary transmission histories and DI results.

Slots are 1-based throughout the public API (slot 1 is the event trigger);
arrays are 0-based internally, so slot ``s`` lives in column ``s - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_ARITY = 6
PROB_SUM_TOL = 1e-12
DI_MAX_BITS = 2.0
DI_TOL = 1e-9


class DatasetError(ValueError):
    """Raised when an event dataset is malformed or inconsistent."""


class ConfigError(ValueError):
    """Raised for invalid generator or run configuration."""


class ModelFormatError(ValueError):
    """Raised when a serialized model cannot be decoded."""


def _as_bit_array(bits) -> np.ndarray:
    try:
        arr = np.array(bits, dtype=np.int64)
    except ValueError:
        # Ragged rows: keep them so validation can report the problem.
        rows = [np.array(r, dtype=np.int64).ravel() for r in bits]
        arr = np.empty(len(rows), dtype=object)
        arr[:] = rows
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ActivityTrace:
    """One device's scheduling-request history, one row per event."""

    device_id: str
    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", _as_bit_array(self.bits))

    @property
    def is_rectangular(self) -> bool:
        return self.bits.dtype != object and self.bits.ndim == 2

    @property
    def num_events(self) -> int:
        return int(self.bits.shape[0])

    @property
    def slots_per_event(self) -> int:
        if self.is_rectangular:
            return int(self.bits.shape[1])
        return max((len(r) for r in self.bits), default=0)

    def __eq__(self, other):
        if not isinstance(other, ActivityTrace):
            return NotImplemented
        return (
            self.device_id == other.device_id
            and self.is_rectangular
            and other.is_rectangular
            and np.array_equal(self.bits, other.bits)
        )

    __hash__ = None


def pad_trace(rows: Iterable[Sequence[int]], slots_per_event: int) -> np.ndarray:
    """Right-pad each event row with zeros to ``slots_per_event`` slots."""
    rows = [list(r) for r in rows]
    out = np.zeros((len(rows), slots_per_event), dtype=np.int64)
    for e, r in enumerate(rows):
        if len(r) > slots_per_event:
            raise DatasetError(f"event {e} has {len(r)} slots, more than {slots_per_event}")
        out[e, : len(r)] = r
    return out


@dataclass(frozen=True, eq=False)
class EventDataset:
    """Aligned collection of traces sharing event indexing and event length."""

    devices: tuple[ActivityTrace, ...]

    def __post_init__(self):
        object.__setattr__(self, "devices", tuple(self.devices))

    @classmethod
    def from_array(cls, device_ids: Sequence[str], cube) -> "EventDataset":
        """Build from an ``(M, E, L)`` array of 0/1 values."""
        cube = np.asarray(cube)
        if cube.ndim != 3 or cube.shape[0] != len(device_ids):
            raise DatasetError(f"expected array of shape ({len(device_ids)}, E, L), got {cube.shape}")
        return cls(tuple(ActivityTrace(str(d), cube[m]) for m, d in enumerate(device_ids)))

    @property
    def device_ids(self) -> tuple[str, ...]:
        return tuple(t.device_id for t in self.devices)

    @property
    def num_events(self) -> int:
        return self.devices[0].num_events if self.devices else 0

    @property
    def slots_per_event(self) -> int:
        return self.devices[0].slots_per_event if self.devices else 0

    def index(self, device_id: str) -> int:
        try:
            return self.device_ids.index(device_id)
        except ValueError:
            raise DatasetError(f"unknown device {device_id!r}") from None

    def trace(self, device_id: str) -> ActivityTrace:
        return self.devices[self.index(device_id)]

    def require_valid(self) -> "EventDataset":
        problems = validate_dataset(self)
        if problems:
            raise DatasetError("; ".join(problems[:5]) + (" ..." if len(problems) > 5 else ""))
        return self

    @cached_property
    def cube(self) -> np.ndarray:
        """Validated ``(M, E, L)`` uint8 array of all traces."""
        self.require_valid()
        arr = np.stack([t.bits for t in self.devices]).astype(np.uint8)
        arr.setflags(write=False)
        return arr

    def select_events(self, idx) -> "EventDataset":
        """Sub-dataset restricted to the given event indices or slice."""
        return EventDataset.from_array(self.device_ids, self.cube[:, idx, :])

    def __eq__(self, other):
        if not isinstance(other, EventDataset):
            return NotImplemented
        return len(self.devices) == len(other.devices) and all(
            a == b for a, b in zip(self.devices, other.devices)
        )

    __hash__ = None


def validate_dataset(dataset: EventDataset) -> list[str]:
    """Return every violated dataset invariant as a message; empty means valid."""
    problems: list[str] = []
    if not dataset.devices:
        return ["dataset has no devices"]
    seen: set[str] = set()
    for t in dataset.devices:
        if t.device_id in seen:
            problems.append(f"duplicate device id {t.device_id!r}")
        seen.add(t.device_id)

    ref = dataset.devices[0]
    num_events = ref.num_events
    slots = ref.slots_per_event
    if slots < 1:
        problems.append("slots per event must be positive")
    if num_events < 1:
        problems.append("dataset has no events")

    for t in dataset.devices:
        if t.num_events != num_events:
            problems.append(
                f"event count mismatch: device {t.device_id!r} has {t.num_events} events, expected {num_events}"
            )
        if not t.is_rectangular:
            lengths = sorted({len(r) for r in t.bits})
            problems.append(f"ragged rows for device {t.device_id!r}: row lengths {lengths}")
            bad = [(e, s, int(row[s])) for e, row in enumerate(t.bits) for s in np.flatnonzero(row > 1)]
            bad += [(e, s, int(row[s])) for e, row in enumerate(t.bits) for s in np.flatnonzero(row < 0)]
        else:
            if t.slots_per_event != slots:
                problems.append(
                    f"slot count mismatch: device {t.device_id!r} has {t.slots_per_event} slots, expected {slots}"
                )
            bad = [(e, s, int(t.bits[e, s])) for e, s in np.argwhere((t.bits != 0) & (t.bits != 1))]
        for e, s, v in sorted(bad):
            problems.append(f"non-binary entry at ({t.device_id}, event {e}, slot {s + 1}): {v}")
    return problems


def align_events(
    events: Sequence[Mapping[str, Iterable[int]]],
    device_ids: Sequence[str] | None = None,
    slots_per_event: int | None = None,
) -> EventDataset:
    """Align raw per-event request times into an :class:`EventDataset`.

    Each event maps device id to the (integer) times of its scheduling
    requests. Times are shifted so the earliest request of the event, over
    all devices, lands in slot 1. Events are then padded with silent slots
    to the longest aligned event, or to ``slots_per_event`` when given.
    Repeated requests in one slot collapse to a single 1.
    """
    if device_ids is None:
        device_ids = sorted({d for ev in events for d in ev})
    device_ids = list(device_ids)
    aligned: list[dict[str, list[int]]] = []
    longest = 0
    for ev in events:
        times = {d: sorted(set(int(t) for t in ev.get(d, ()))) for d in device_ids}
        unknown = set(ev) - set(device_ids)
        if unknown:
            raise DatasetError(f"event references unknown devices {sorted(unknown)}")
        all_times = [t for ts in times.values() for t in ts]
        origin = min(all_times) if all_times else 0
        slots = {d: [t - origin for t in ts] for d, ts in times.items()}
        aligned.append(slots)
        if all_times:
            longest = max(longest, max(all_times) - origin + 1)
    L = longest if slots_per_event is None else slots_per_event
    if L < longest:
        raise DatasetError(f"aligned events span {longest} slots, more than {L}")
    if L < 1:
        raise DatasetError("no scheduling requests in any event")
    cube = np.zeros((len(device_ids), len(aligned), L), dtype=np.uint8)
    for e, slots in enumerate(aligned):
        for m, d in enumerate(device_ids):
            cube[m, e, slots[d]] = 1
    return EventDataset.from_array(device_ids, cube)


@dataclass(frozen=True)
class JointDistribution:
    """Probability table over ``arity`` binary variables.

    ``probs[mask]`` is the probability of the outcome whose bit ``j`` is the
    value of variable ``j``.
    """

    probs: np.ndarray
    support_count: int = 0

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64).ravel()
        n = p.size.bit_length() - 1
        if p.size < 2 or 2**n != p.size or n > MAX_ARITY:
            raise ValueError(f"table size {p.size} is not 2**n for 1 <= n <= {MAX_ARITY}")
        if np.any(p < -PROB_SUM_TOL) or np.any(p > 1 + PROB_SUM_TOL):
            raise ValueError("probabilities must lie in [0, 1]")
        p = np.clip(p, 0.0, 1.0)
        if abs(p.sum() - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities sum to {p.sum()!r}, not 1")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @property
    def arity(self) -> int:
        return self.probs.size.bit_length() - 1

    def __eq__(self, other):
        if not isinstance(other, JointDistribution):
            return NotImplemented
        return self.support_count == other.support_count and np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True)
class DiMatrix:
    """DI values for one ordered device pair keyed by ``(slot k, lag i)``.

    Lag 0 is the aligned window; a heatmap whose rows are numbered
    from 1 shows lag ``i - 1`` in row ``i``.
    """

    source_id: str
    target_id: str
    slots_per_event: int
    values: Mapping[tuple[int, int], float]

    def __post_init__(self):
        L = self.slots_per_event
        clean: dict[tuple[int, int], float] = {}
        for (k, i), v in sorted(self.values.items()):
            if not (1 <= k <= L - 1 and 0 <= i <= L - k - 1):
                raise ValueError(f"cell (k={k}, i={i}) outside scan bounds for L={L}")
            v = float(v)
            if not (-DI_TOL <= v <= DI_MAX_BITS + DI_TOL):
                raise ValueError(f"DI {v!r} at (k={k}, i={i}) outside [0, 2] bits")
            clean[(k, i)] = min(max(v, 0.0), DI_MAX_BITS)
        object.__setattr__(self, "values", MappingProxyType(clean))

    def to_grid(self) -> np.ndarray:
        """Array with rows = lag ``i`` (0..L-2) and columns = slot ``k`` (1..L-1).

        Cells outside the scan bounds are NaN.
        """
        L = self.slots_per_event
        grid = np.full((L - 1, L - 1), np.nan)
        for (k, i), v in self.values.items():
            grid[i, k - 1] = v
        return grid

    def max(self) -> float:
        return max(self.values.values(), default=0.0)

    def total(self) -> float:
        return float(sum(self.values.values()))

    def argmax(self) -> tuple[int, int]:
        """``(k, i)`` of the largest value; earliest slot, then smallest lag, on ties."""
        return max(self.values, key=lambda ki: (self.values[ki], -ki[0], -ki[1]))

    def peak_lag(self) -> int:
        return self.argmax()[1]

    def __eq__(self, other):
        if not isinstance(other, DiMatrix):
            return NotImplemented
        return (
            (self.source_id, self.target_id, self.slots_per_event)
            == (other.source_id, other.target_id, other.slots_per_event)
            and dict(self.values) == dict(other.values)
        )


@dataclass(frozen=True, order=True)
class CausalityEntry:
    target_id: str
    k: int
    i: int
    di_bits: float


def entry_sort_key(entry: CausalityEntry):
    """Descending DI, then smaller lag, then target id, then slot."""
    return (-entry.di_bits, entry.i, entry.target_id, entry.k)


@dataclass(frozen=True)
class CausalitySet:
    """The learned set of (target, slot, lag, DI) entries for one source device."""

    source_id: str
    entries: tuple[CausalityEntry, ...] = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(self.entries)
        if list(entries) != sorted(entries, key=entry_sort_key):
            raise ValueError("causality entries must be sorted by descending DI")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_entries(cls, source_id: str, entries: Iterable[CausalityEntry]) -> "CausalitySet":
        return cls(source_id, tuple(sorted(entries, key=entry_sort_key)))

    def above(self, threshold_bits: float) -> "CausalitySet":
        return CausalitySet(self.source_id, tuple(e for e in self.entries if e.di_bits > threshold_bits))

    def targets(self) -> list[str]:
        return sorted({e.target_id for e in self.entries})

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class Prediction:
    target_id: str
    predicted_slot: int
    confidence: float

    @property
    def normalized_confidence(self) -> float:
        return self.confidence / DI_MAX_BITS
