"""Empirical multivariate Bernoulli estimation over (device, slot) variables.

Each event is one sample; a selector list of length ``n`` picks ``n`` binary
coordinates of that sample and the estimate is a ``2**n`` table indexed by
outcome bitmask.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .types import MAX_ARITY, EventDataset, JointDistribution


@dataclass(frozen=True)
class VariableSelector:
    device_id: str
    slot: int


def _outcome_masks(dataset: EventDataset, selectors: Sequence[VariableSelector]) -> np.ndarray:
    cube = dataset.cube
    L = dataset.slots_per_event
    masks = np.zeros(dataset.num_events, dtype=np.int64)
    for j, sel in enumerate(selectors):
        if not 1 <= sel.slot <= L:
            raise ValueError(f"slot {sel.slot} outside 1..{L} for device {sel.device_id!r}")
        m = dataset.index(sel.device_id)
        masks |= cube[m, :, sel.slot - 1].astype(np.int64) << j
    return masks


def estimate_joint(
    dataset: EventDataset,
    selectors: Sequence[VariableSelector],
    alpha: float = 0.0,
) -> JointDistribution:
    """Plug-in estimate of the joint law of the selected variables.

    ``alpha`` adds a pseudo-count to each of the ``2**n`` cells; the
    default of 0 is the unsmoothed maximum-likelihood estimate.
    """
    n = len(selectors)
    if not 1 <= n <= MAX_ARITY:
        raise ValueError(f"need between 1 and {MAX_ARITY} selectors, got {n}")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    E = dataset.num_events
    if E == 0:
        raise ValueError("dataset has no events")
    counts = np.bincount(_outcome_masks(dataset, selectors), minlength=2**n).astype(np.float64)
    probs = (counts + alpha) / (E + alpha * 2**n)
    return JointDistribution(probs, support_count=E)


def marginalize(dist: JointDistribution, keep: Sequence[int]) -> JointDistribution:
    """Sum out every variable not in ``keep``.

    Variable ``t`` of the result is variable ``keep[t]`` of ``dist``, so an
    ordered ``keep`` also permutes.
    """
    keep = list(keep)
    n = dist.arity
    if not keep:
        raise ValueError("keep must name at least one variable")
    if len(set(keep)) != len(keep) or any(not 0 <= v < n for v in keep):
        raise ValueError(f"keep {keep} is not a subset of 0..{n - 1}")
    # C-order reshape puts variable j on axis n-1-j.
    table = dist.probs.reshape((2,) * n)
    drop = tuple(n - 1 - v for v in range(n) if v not in keep)
    reduced = table.sum(axis=drop) if drop else table
    remaining = [v for v in reversed(range(n)) if v in keep]  # axis order of `reduced`
    axes = [remaining.index(v) for v in reversed(keep)]
    out = np.transpose(reduced, axes).ravel()
    return JointDistribution(out, support_count=dist.support_count)
