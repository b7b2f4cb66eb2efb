"""Causality-set learning and trigger-time traffic prediction.

Training scans the window DI for every ordered device pair and keeps each
(target, slot, lag) cell whose DI exceeds a threshold. At prediction time a
transmission by one device at slot ``k`` is looked up in that device's
causality set to list which devices should transmit, when, and with what DI.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

import numpy as np

from .di import di_matrix
from .types import (
    DI_MAX_BITS,
    CausalityEntry,
    CausalitySet,
    DatasetError,
    DiMatrix,
    EventDataset,
    ModelFormatError,
    Prediction,
    entry_sort_key,
)

MODEL_VERSION = 1
DEFAULT_THRESHOLD_BITS = 0.05
DEFAULT_MIN_EVENTS = 50


def dataset_digest(dataset: EventDataset) -> str:
    h = hashlib.sha256()
    h.update(json.dumps(list(dataset.device_ids)).encode())
    h.update(np.ascontiguousarray(dataset.cube).tobytes())
    h.update(str(dataset.cube.shape).encode())
    return h.hexdigest()


@dataclass(frozen=True)
class PredictorModel:
    causality_sets: Mapping[str, CausalitySet]
    threshold_bits: float
    slots_per_event: int
    metadata: Mapping = field(default_factory=dict)

    def __post_init__(self):
        sets = {d: self.causality_sets[d] for d in sorted(self.causality_sets)}
        for src, cs in sets.items():
            if cs.source_id != src:
                raise ValueError(f"causality set for {src!r} is labelled {cs.source_id!r}")
            for e in cs.entries:
                if not e.di_bits > self.threshold_bits:
                    raise ValueError(f"entry {e} does not exceed threshold {self.threshold_bits}")
                if e.target_id not in sets or e.target_id == src:
                    raise ValueError(f"entry {e} targets a device outside the model")
        object.__setattr__(self, "causality_sets", MappingProxyType(sets))
        object.__setattr__(self, "metadata", MappingProxyType(dict(self.metadata)))

    @property
    def device_ids(self) -> tuple[str, ...]:
        return tuple(self.causality_sets)

    def __eq__(self, other):
        if not isinstance(other, PredictorModel):
            return NotImplemented
        return (
            dict(self.causality_sets) == dict(other.causality_sets)
            and self.threshold_bits == other.threshold_bits
            and self.slots_per_event == other.slots_per_event
            and dict(self.metadata) == dict(other.metadata)
        )


def compute_di_matrices(
    dataset: EventDataset, alpha: float = 0.0, workers: int = 1
) -> dict[tuple[str, str], DiMatrix]:
    """DI matrix for every ordered device pair, keyed by (source, target)."""
    pairs = [(s, t) for s in dataset.device_ids for t in dataset.device_ids if s != t]
    dataset.cube  # validate once before any threads touch it
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            mats = list(pool.map(lambda p: di_matrix(dataset, *p, alpha=alpha), pairs))
    else:
        mats = [di_matrix(dataset, s, t, alpha=alpha) for s, t in pairs]
    return dict(zip(pairs, mats))


def build_model(
    matrices: Mapping[tuple[str, str], DiMatrix],
    device_ids,
    slots_per_event: int,
    threshold_bits: float = DEFAULT_THRESHOLD_BITS,
    metadata: Mapping | None = None,
) -> PredictorModel:
    if threshold_bits < 0:
        raise ValueError("threshold must be non-negative")
    sets = {}
    for src in device_ids:
        entries = [
            CausalityEntry(dst, k, i, v)
            for (s, dst), mat in matrices.items()
            if s == src
            for (k, i), v in mat.values.items()
            if v > threshold_bits
        ]
        sets[src] = CausalitySet.from_entries(src, entries)
    return PredictorModel(sets, float(threshold_bits), slots_per_event, metadata or {})


def train(
    dataset: EventDataset,
    threshold_bits: float = DEFAULT_THRESHOLD_BITS,
    alpha: float = 0.0,
    min_events: int = DEFAULT_MIN_EVENTS,
    workers: int = 1,
    metadata: Mapping | None = None,
) -> PredictorModel:
    """Learn causality sets from ``dataset``.

    Refuses datasets with fewer than ``min_events`` events; pass
    ``min_events=1`` to train on small exact-enumeration fixtures.
    """
    dataset.require_valid()
    if dataset.slots_per_event < 2:
        raise DatasetError("need at least 2 slots per event")
    if dataset.num_events < min_events:
        raise DatasetError(f"insufficient events: {dataset.num_events} < {min_events}")
    matrices = compute_di_matrices(dataset, alpha=alpha, workers=workers)
    meta = {
        "training_events": dataset.num_events,
        "dataset_sha256": dataset_digest(dataset),
        "smoothing_alpha": alpha,
    }
    meta.update(metadata or {})
    return build_model(matrices, dataset.device_ids, dataset.slots_per_event, threshold_bits, meta)


def predict(model: PredictorModel, trigger_device: str, trigger_slot: int) -> list[Prediction]:
    """Ranked predictions after ``trigger_device`` transmits at ``trigger_slot``.

    Uses the causality entries learned for that slot, or for the nearest
    earlier slot that has any. Each entry with lag ``i`` predicts a
    transmission at ``trigger_slot + i``; slots past the event end are
    dropped.
    """
    if trigger_device not in model.causality_sets:
        raise KeyError(f"unknown device {trigger_device!r}")
    L = model.slots_per_event
    if not 1 <= trigger_slot <= L:
        raise ValueError(f"slot {trigger_slot} outside 1..{L}")
    entries = model.causality_sets[trigger_device].entries
    slots = [e.k for e in entries if e.k <= trigger_slot]
    if not slots:
        return []
    k = max(slots)
    chosen = sorted((e for e in entries if e.k == k), key=entry_sort_key)
    return [
        Prediction(e.target_id, trigger_slot + e.i, e.di_bits)
        for e in chosen
        if trigger_slot + e.i <= L
    ]


@dataclass(frozen=True)
class DeviceScore:
    true_positives: int = 0
    false_positives: int = 0
    false_negatives: int = 0

    @property
    def precision_undefined(self) -> bool:
        return self.true_positives + self.false_positives == 0

    @property
    def recall_undefined(self) -> bool:
        return self.true_positives + self.false_negatives == 0

    @property
    def precision(self) -> float:
        if self.precision_undefined:
            return 1.0
        return self.true_positives / (self.true_positives + self.false_positives)

    @property
    def recall(self) -> float:
        if self.recall_undefined:
            return 1.0
        return self.true_positives / (self.true_positives + self.false_negatives)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0 else 2 * p * r / (p + r)

    def to_dict(self) -> dict:
        return {
            "true_positives": self.true_positives,
            "false_positives": self.false_positives,
            "false_negatives": self.false_negatives,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "precision_undefined": self.precision_undefined,
            "recall_undefined": self.recall_undefined,
        }


@dataclass(frozen=True)
class EvaluationReport:
    """Per-device scores of predicted vs realized transmissions on held-out events.

    Undefined precision or recall (a zero denominator) is reported as 1.0
    and flagged.
    """

    per_device: Mapping[str, DeviceScore]
    overall: DeviceScore
    events_scored: int
    confidence_floor: float
    mean_confidence_true_positive: float | None
    mean_confidence_false_positive: float | None

    def to_dict(self) -> dict:
        return {
            "events_scored": self.events_scored,
            "confidence_floor": self.confidence_floor,
            "overall": self.overall.to_dict(),
            "per_device": {d: s.to_dict() for d, s in sorted(self.per_device.items())},
            "mean_normalized_confidence": {
                "true_positive": self.mean_confidence_true_positive,
                "false_positive": self.mean_confidence_false_positive,
            },
        }


def _trigger(event_bits: np.ndarray, device_ids) -> tuple[str, int] | None:
    """Earliest transmitting device and its 1-based slot; ties go to the smallest id."""
    active = event_bits.any(axis=0)
    if not active.any():
        return None
    slot = int(np.argmax(active))
    dev = min(d for m, d in enumerate(device_ids) if event_bits[m, slot])
    return dev, slot + 1


def evaluate(model: PredictorModel, holdout: EventDataset, confidence_floor: float = 0.0) -> EvaluationReport:
    """Score trigger-time predictions on each held-out event.

    The earliest transmitting device of an event is its trigger. A target is
    predicted when it has a prediction whose normalized confidence is at
    least ``confidence_floor``. A DI cell describes the two-slot target
    window starting at the predicted slot, so the prediction is a hit if
    the target transmits in any predicted window. Hits are true positives,
    misses false positives, and targets that transmitted without a hit
    false negatives. Events with no transmission are skipped.
    """
    holdout.require_valid()
    if holdout.slots_per_event != model.slots_per_event or set(holdout.device_ids) != set(model.device_ids):
        raise DatasetError(
            f"schema mismatch: holdout has L={holdout.slots_per_event} and devices "
            f"{sorted(holdout.device_ids)}, model has L={model.slots_per_event} and devices "
            f"{list(model.device_ids)}"
        )
    ids = holdout.device_ids
    cube = holdout.cube
    counts = {d: [0, 0, 0] for d in ids}
    tp_conf: list[float] = []
    fp_conf: list[float] = []
    scored = 0
    cache: dict[tuple[str, int], dict[str, tuple[list[int], float]]] = {}
    for e in range(holdout.num_events):
        bits = cube[:, e, :]
        trig = _trigger(bits, ids)
        if trig is None:
            continue
        scored += 1
        if trig not in cache:
            by_target: dict[str, tuple[list[int], float]] = {}
            for p in predict(model, *trig):
                if p.normalized_confidence >= confidence_floor:
                    slots, conf = by_target.get(p.target_id, ([], 0.0))
                    by_target[p.target_id] = (slots + [p.predicted_slot], max(conf, p.normalized_confidence))
            cache[trig] = by_target
        predicted = cache[trig]
        for m, d in enumerate(ids):
            if d == trig[0]:
                continue
            realized = bool(bits[m].any())
            hit = False
            if d in predicted:
                slots, conf = predicted[d]
                hit = any(bits[m, s - 1 : s + 1].any() for s in slots)
                counts[d][0 if hit else 1] += 1
                (tp_conf if hit else fp_conf).append(conf)
            if realized and not hit:
                counts[d][2] += 1
    per_device = {d: DeviceScore(*c) for d, c in counts.items()}
    overall = DeviceScore(*(sum(c[j] for c in counts.values()) for j in range(3)))
    return EvaluationReport(
        per_device,
        overall,
        scored,
        confidence_floor,
        float(np.mean(tp_conf)) if tp_conf else None,
        float(np.mean(fp_conf)) if fp_conf else None,
    )


def model_to_dict(model: PredictorModel) -> dict:
    return {
        "version": MODEL_VERSION,
        "slots_per_event": model.slots_per_event,
        "threshold_bits": model.threshold_bits,
        "causality_sets": {
            src: [{"target": e.target_id, "k": e.k, "i": e.i, "di_bits": e.di_bits} for e in cs.entries]
            for src, cs in model.causality_sets.items()
        },
        "metadata": dict(model.metadata),
    }


def save_model(model: PredictorModel) -> bytes:
    return (json.dumps(model_to_dict(model), sort_keys=True, indent=2) + "\n").encode("utf-8")


def load_model(payload: bytes | str) -> PredictorModel:
    try:
        d = json.loads(payload)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"malformed model: {exc}") from exc
    if not isinstance(d, dict):
        raise ModelFormatError("malformed model: top level is not an object")
    if d.get("version") != MODEL_VERSION:
        raise ModelFormatError(f"unsupported model version {d.get('version')!r}, expected {MODEL_VERSION}")
    try:
        sets = {
            src: CausalitySet(
                src,
                tuple(CausalityEntry(str(e["target"]), int(e["k"]), int(e["i"]), float(e["di_bits"])) for e in entries),
            )
            for src, entries in d["causality_sets"].items()
        }
        threshold = float(d["threshold_bits"])
        L = int(d["slots_per_event"])
        model = PredictorModel(sets, threshold, L, d.get("metadata", {}))
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ModelFormatError(f"malformed model: {exc}") from exc
    for cs in model.causality_sets.values():
        for e in cs.entries:
            if not (1 <= e.k <= L - 1 and 0 <= e.i <= L - e.k - 1) or not 0 <= e.di_bits <= DI_MAX_BITS:
                raise ModelFormatError(f"malformed model: entry {e} out of range")
    if math.isnan(threshold) or threshold < 0:
        raise ModelFormatError("malformed model: negative threshold")
    return model
