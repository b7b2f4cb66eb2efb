"""Entropy and directed-information kernels.

The production kernel is the five-entropy closed form for the DI between
two length-2 windows::

    I(X_k X_{k+1} -> Y_k Y_{k+1})
        = H(X_k) - H(X_k Y_k) + H(X_k X_{k+1} Y_k) + H(Y_k Y_{k+1})
          - H(X_k X_{k+1} Y_k Y_{k+1})

which is I(X_k; Y_k) + I(X_k X_{k+1}; Y_{k+1} | Y_k) with H(Y_k) cancelled.
:func:`full_di_oracle` computes the general sum over i of
I(X^i; Y_i | Y^{i-1}) by enumeration and serves as the check on it.

All quantities are in bits.
"""

from __future__ import annotations

import itertools
import math
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .prob import VariableSelector, estimate_joint, marginalize
from .types import DI_MAX_BITS, DI_TOL, DiMatrix, EventDataset, JointDistribution

ENTROPIES_PER_CELL = 5

# Variable positions inside the 4-variable window table.
SRC_NOW, SRC_NEXT, DST_NOW, DST_NEXT = 0, 1, 2, 3
_ENTROPY_TERMS = (
    (SRC_NOW,),
    (SRC_NOW, DST_NOW),
    (SRC_NOW, SRC_NEXT, DST_NOW),
    (DST_NOW, DST_NEXT),
    (SRC_NOW, SRC_NEXT, DST_NOW, DST_NEXT),
)
_SIGNS = (1.0, -1.0, 1.0, 1.0, -1.0)


class EntropyCounter:
    """Thread-safe tally of entropy evaluations."""

    def __init__(self):
        self._lock = threading.Lock()
        self._count = 0

    def add(self, n: int = 1) -> None:
        with self._lock:
            self._count += n

    @property
    def count(self) -> int:
        with self._lock:
            return self._count

    def reset(self) -> None:
        with self._lock:
            self._count = 0


def entropy(dist: JointDistribution, counter: EntropyCounter | None = None) -> float:
    """Shannon entropy in bits, with 0 log 0 taken as 0."""
    if counter is not None:
        counter.add()
    p = dist.probs[dist.probs > 0]
    return float(max(-np.sum(p * np.log2(p)), 0.0))


@dataclass(frozen=True)
class PairwiseDiResult:
    """Closed-form window DI with the entropies it was built from.

    ``component_entropies`` holds, in order, H(X_k), H(X_k Y_k),
    H(X_k X_{k+1} Y_k), H(Y_k Y_{k+1}) and H(X_k X_{k+1} Y_k Y_{k+1}).
    ``raw_di_bits`` is the value before clamping to [0, 2].
    """

    di_bits: float
    raw_di_bits: float
    component_entropies: tuple[float, float, float, float, float]
    joint: JointDistribution

    def mutual_information_terms(self) -> tuple[float, float]:
        """(I(X_k; Y_k), I(X_k X_{k+1}; Y_{k+1} | Y_k)) in bits."""
        h_x, h_xy, h_xxy, h_yy, h_all = self.component_entropies
        h_y = entropy(marginalize(self.joint, [DST_NOW]))
        return h_x + h_y - h_xy, h_xxy + h_yy - h_y - h_all


def pairwise_di_from_joint(
    joint: JointDistribution, counter: EntropyCounter | None = None
) -> PairwiseDiResult:
    """Closed-form window DI from a table over (X_k, X_{k+1}, Y_k, Y_{k+1})."""
    if joint.arity != 4:
        raise ValueError(f"window DI needs a 4-variable table, got arity {joint.arity}")
    hs = tuple(entropy(marginalize(joint, list(term)), counter) for term in _ENTROPY_TERMS)
    raw = float(sum(s * h for s, h in zip(_SIGNS, hs)))
    if not -DI_TOL <= raw <= DI_MAX_BITS + DI_TOL:
        raise ArithmeticError(f"window DI {raw!r} violates the [0, 2] bit bound")
    return PairwiseDiResult(min(max(raw, 0.0), DI_MAX_BITS), raw, hs, joint)


def window_selectors(source: str, target: str, k: int, i: int) -> list[VariableSelector]:
    return [
        VariableSelector(source, k),
        VariableSelector(source, k + 1),
        VariableSelector(target, k + i),
        VariableSelector(target, k + i + 1),
    ]


def _check_cell(dataset: EventDataset, source: str, target: str, k: int, i: int) -> None:
    L = dataset.slots_per_event
    if source == target:
        raise ValueError("source and target must differ")
    dataset.index(source)
    dataset.index(target)
    if not 1 <= k <= L - 1:
        raise ValueError(f"slot k={k} outside 1..{L - 1}")
    if not 0 <= i <= L - k - 1:
        raise ValueError(f"lag i={i} outside 0..{L - k - 1} for k={k}")


def pairwise_di(
    dataset: EventDataset,
    source: str,
    target: str,
    k: int,
    i: int,
    alpha: float = 0.0,
    counter: EntropyCounter | None = None,
) -> PairwiseDiResult:
    """DI from the source window at slots (k, k+1) to the target window at (k+i, k+i+1)."""
    _check_cell(dataset, source, target, k, i)
    joint = estimate_joint(dataset, window_selectors(source, target, k, i), alpha=alpha)
    return pairwise_di_from_joint(joint, counter)


def scan_cells(L: int) -> list[tuple[int, int]]:
    """All (k, i) with 1 <= k <= L-1 and 0 <= i <= L-k-1."""
    return [(k, i) for k in range(1, L) for i in range(L - k)]


def di_matrix(
    dataset: EventDataset,
    source: str,
    target: str,
    alpha: float = 0.0,
    counter: EntropyCounter | None = None,
    workers: int = 1,
) -> DiMatrix:
    """Window DI from ``source`` to ``target`` over every (slot, lag) cell."""
    L = dataset.slots_per_event
    if L < 2:
        raise ValueError("need at least 2 slots per event")
    if source == target:
        raise ValueError("source and target must differ")
    dataset.index(source)
    dataset.index(target)
    cells = scan_cells(L)

    def one(cell):
        return pairwise_di(dataset, source, target, *cell, alpha=alpha, counter=counter).di_bits

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(one, cells))
    else:
        vals = [one(c) for c in cells]
    return DiMatrix(source, target, L, dict(zip(cells, vals)))


def entropy_eval_count(L: int) -> int:
    """Entropy evaluations actually performed by one :func:`di_matrix` call at length ``L``.

    Measured by running the scan on a one-event silent dataset under a
    fresh counter; equals ``5 * L * (L - 1) / 2``. Compare with
    :func:`stated_entropy_eval_count`.
    """
    if L < 2:
        raise ValueError("need L >= 2")
    counter = EntropyCounter()
    dataset = EventDataset.from_array(["src", "dst"], np.zeros((2, 1, L), dtype=np.uint8))
    di_matrix(dataset, "src", "dst", counter=counter)
    return counter.count


def stated_entropy_eval_count(L: int) -> int:
    """The larger per-pair bound 5 L (L-1)^2, an O(L^3) count."""
    return ENTROPIES_PER_CELL * L * (L - 1) ** 2


def full_di_oracle(joint: JointDistribution) -> float:
    """Exact DI I(X^N -> Y^N) by enumeration over all 2**(2N) outcomes.

    Variables 0..N-1 of ``joint`` are X_1..X_N and N..2N-1 are Y_1..Y_N.
    Computes sum over i of I(X^i; Y_i | Y^{i-1}) straight from the
    probability table without going through :func:`entropy`.
    """
    n = joint.arity
    if n % 2 or n > 6:
        raise ValueError(f"oracle needs an even arity <= 6, got {n}")
    N = n // 2
    outcomes = list(itertools.product((0, 1), repeat=n))  # (x_1..x_N, y_1..y_N)

    def prob(o):
        return float(joint.probs[sum(b << j for j, b in enumerate(o))])

    def marginal(xs: int, ys: int) -> dict:
        # law of (X_1..X_xs, Y_1..Y_ys)
        table: dict[tuple, float] = {}
        for o in outcomes:
            key = o[:xs] + o[N : N + ys]
            table[key] = table.get(key, 0.0) + prob(o)
        return table

    total = 0.0
    for i in range(1, N + 1):
        p_xy = marginal(i, i)  # (x^i, y^i)
        p_x_ypast = marginal(i, i - 1)  # (x^i, y^{i-1})
        p_y = marginal(0, i)  # y^i
        p_ypast = marginal(0, i - 1)  # y^{i-1}
        for key, p in p_xy.items():
            if p <= 0:
                continue
            x, y = key[:i], key[i:]
            num = p * p_ypast[y[:-1]]
            den = p_x_ypast[x + y[:-1]] * p_y[y]
            total += p * math.log2(num / den)
    return total
