"""Lie counters, weights, potentials and medians.

A :class:`LieState` stores only integer counters; the weight
``mu(v) = mu0(v) * gamma**-lies[v]`` is derived on demand.  Float mode
returns weights rescaled by ``gamma**min(lies)`` so long runs never
underflow; comparisons are scale-free.  Passing a :class:`fractions.Fraction`
gamma switches to exact mode, where relative weights are Python integers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .graph import DistanceMatrix, Graph, compatible_mask

__all__ = [
    "REL_TOL",
    "LieState",
    "WeightSnapshot",
    "total_weight",
    "potential",
    "potentials",
    "find_median",
    "apply_reply",
    "bump_virtual",
    "is_heavy",
    "heavy_vertex",
]

# Relative gap under which two real potentials or weights count as tied.
REL_TOL = 1e-9


@dataclass(frozen=True)
class WeightSnapshot:
    round: int
    query: object
    reply: int
    total: float
    factor: float
    heavy: int | None


class LieState:
    """Per-vertex lie counters and virtual lie counters under multiplier gamma.

    Parameters
    ----------
    n : int
        Number of vertices.
    gamma : float, math.inf or Fraction
        ``math.inf`` is the error-less regime (weight drops to 0 after the
        first lie); a ``Fraction`` selects exact arithmetic.
    initial_weight : sequence, optional
        Positive ``mu0`` values; defaults to all ones.
    """

    def __init__(self, n, gamma, initial_weight=None, lies=None, virtual_lies=None):
        self.exact = isinstance(gamma, Fraction)
        if self.exact:
            if gamma <= 1:
                raise ValueError("gamma must exceed 1")
        elif not gamma > 1:
            raise ValueError("gamma must exceed 1")
        self.gamma = gamma
        self.infinite = (not self.exact) and math.isinf(gamma)
        self.n = n
        self.lies = np.zeros(n, np.int64) if lies is None else np.array(lies, np.int64)
        self.virtual_lies = (np.zeros(n, np.int64) if virtual_lies is None
                             else np.array(virtual_lies, np.int64))
        if self.exact:
            mu0 = [Fraction(1)] * n if initial_weight is None else [Fraction(x) for x in initial_weight]
            if any(x <= 0 for x in mu0):
                raise ValueError("initial weights must be positive")
            denom = math.lcm(*(x.denominator for x in mu0)) if mu0 else 1
            self._mu0_num = [int(x * denom) for x in mu0]
            self._mu0_den = denom
            self.initial_weight = mu0
        else:
            mu0 = np.ones(n) if initial_weight is None else np.asarray(initial_weight, dtype=np.float64)
            if mu0.shape != (n,) or np.any(mu0 <= 0):
                raise ValueError("initial weights must be n positive values")
            self.initial_weight = mu0
            self._inv = 0.0 if self.infinite else 1.0 / gamma

    def copy(self) -> "LieState":
        new = object.__new__(LieState)
        new.__dict__.update(self.__dict__)
        new.lies = self.lies.copy()
        new.virtual_lies = self.virtual_lies.copy()
        return new

    def counters(self, virtual: bool = False) -> np.ndarray:
        return self.lies + self.virtual_lies if virtual else self.lies

    # -- weights ----------------------------------------------------------
    def weights(self, virtual: bool = False) -> np.ndarray:
        """Relative weights; proportional to ``mu`` (``Phi~`` when ``virtual``)."""
        c = self.counters(virtual)
        if self.exact:
            return self._exact_weights(c)[0]
        if self.infinite:
            return np.where(c == 0, self.initial_weight, 0.0)
        return self.initial_weight * np.power(self._inv, c - c.min())

    def _exact_weights(self, c):
        p, q = self.gamma.numerator, self.gamma.denominator
        base = int(c.min())
        s = (c - base).tolist()
        top = max(s)
        w = np.empty(self.n, dtype=object)
        for v, k in enumerate(s):
            w[v] = self._mu0_num[v] * q ** k * p ** (top - k)
        scale = Fraction(q, p) ** base / (self._mu0_den * p ** top)
        return w, scale

    def weight_scale(self, virtual: bool = False):
        """Factor turning :meth:`weights` into absolute ``mu`` values."""
        c = self.counters(virtual)
        if self.exact:
            return self._exact_weights(c)[1]
        if self.infinite:
            return 1.0
        return self._inv ** int(c.min())

    def mu(self, virtual: bool = False) -> np.ndarray:
        """Absolute weights (may underflow to 0 in float mode on long runs)."""
        if self.exact:
            w, scale = self._exact_weights(self.counters(virtual))
            return np.array([x * scale for x in w], dtype=object)
        return self.weights(virtual) * self.weight_scale(virtual)

    def total_weight(self, mask=None, virtual: bool = False):
        """``mu(S)`` for the vertex set given as a boolean mask (all when None).

        Float mode groups vertices by counter and evaluates
        ``gamma**-base * sum_k c_k gamma**-k`` by Horner's rule.
        """
        c = self.counters(virtual)
        if self.exact:
            idx = range(self.n) if mask is None else np.flatnonzero(mask).tolist()
            p, q = self.gamma.numerator, self.gamma.denominator
            total = Fraction(0)
            for v in idx:
                total += Fraction(self._mu0_num[v] * q ** int(c[v]), self._mu0_den * p ** int(c[v]))
            return total
        mu0 = self.initial_weight
        if mask is not None:
            c, mu0 = c[mask], mu0[mask]
        if c.size == 0:
            return 0.0
        if self.infinite:
            return float(mu0[c == 0].sum())
        base = int(c.min())
        groups = np.bincount(c - base, weights=mu0)
        return float(np.polyval(groups[::-1], self._inv)) * self._inv ** base

    def relative_total(self, virtual: bool = False) -> tuple[float, int]:
        """``(t, base)`` with ``mu(V) = t * gamma**-base``; float mode only."""
        c = self.counters(virtual)
        if self.infinite:
            return float(self.initial_weight[c == 0].sum()), 0
        base = int(c.min())
        groups = np.bincount(c - base, weights=self.initial_weight)
        return float(np.polyval(groups[::-1], self._inv)), base

    def ratio(self, before: tuple[float, int], after: tuple[float, int]) -> float:
        """``mu_after / mu_before`` from two :meth:`relative_total` values."""
        if before[0] == 0:
            return math.nan
        return after[0] / before[0] * self._inv ** (after[1] - before[1])

    # -- updates ------------------------------------------------------------
    def penalize(self, compatible: np.ndarray) -> None:
        """Add one lie to every vertex outside ``compatible``."""
        self.lies += ~compatible

    def bump(self, w: int) -> None:
        self.virtual_lies[w] += 1

    def within(self, limit: float) -> int:
        """Number of vertices whose lie counter is at most ``limit``."""
        return int(np.count_nonzero(self.lies <= limit))


def total_weight(s: LieState, subset=None):
    """``mu(S)``; ``subset`` is a boolean mask, an iterable of ids, or None for V."""
    if subset is not None and not isinstance(subset, np.ndarray):
        mask = np.zeros(s.n, dtype=bool)
        mask[list(subset)] = True
        subset = mask
    return s.total_weight(subset)


def potentials(s: LieState, d: DistanceMatrix, mode: str = "vertex",
               virtual: bool = False) -> np.ndarray:
    """Relative potentials of every vertex (``mode='vertex'``) or edge."""
    w = s.weights(virtual)
    if mode == "vertex":
        return d.vertex_potentials(w)
    if mode == "edge":
        return d.edge_potentials(w)
    raise ValueError(f"mode must be 'vertex' or 'edge', got {mode!r}")


def potential(s: LieState, d: DistanceMatrix, site, virtual: bool = False):
    """Absolute potential of one vertex (int) or edge ((u, v) pair)."""
    w = s.weights(virtual)
    scale = s.weight_scale(virtual)
    if isinstance(site, (tuple, list)):
        x, y = site
        row = np.minimum(d.d[x], d.d[y])
    else:
        row = d.d[site]
    if s.exact:
        return sum(int(r) * wi for r, wi in zip(row.tolist(), w)) * scale
    return float(row @ w) * scale


def _argmin(values: np.ndarray) -> int:
    if values.dtype == object:
        best = min(values)
        return next(i for i, x in enumerate(values) if x == best)
    m = values.min()
    return int(np.argmax(values <= m + REL_TOL * abs(m)))


def find_median(s: LieState, d: DistanceMatrix, mode: str = "vertex",
                virtual: bool = False):
    """Potential minimizer; ties go to the smallest vertex id / edge."""
    i = _argmin(potentials(s, d, mode, virtual))
    if mode == "vertex":
        return i
    u, v, _ = d.graph.edges[i]
    return (u, v)


def apply_reply(s: LieState, g: Graph, d: DistanceMatrix, query, reply: int):
    """Charge a lie to every vertex incompatible with ``reply``.

    Mutates ``s`` and returns the round factor ``mu_{t+1} / mu_t``.
    """
    mask = compatible_mask(g, d, query, reply)
    if s.exact:
        before = s.total_weight()
        s.penalize(mask)
        return s.total_weight() / before
    before = s.relative_total()
    s.penalize(mask)
    return s.ratio(before, s.relative_total())


def bump_virtual(s: LieState, w: int) -> LieState:
    s.bump(w)
    return s


def _heavy_mask(s: LieState, alpha, virtual: bool = False) -> np.ndarray:
    w = s.weights(virtual)
    if s.exact:
        a = Fraction(alpha)
        total = sum(w)
        return np.array([x * a.denominator > a.numerator * total for x in w], dtype=bool)
    total = w.sum()
    return w > alpha * total * (1.0 + REL_TOL)


def is_heavy(s: LieState, v: int, alpha, virtual: bool = False) -> bool:
    """True iff ``mu(v) > alpha * mu(V)``."""
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    w = s.weights(virtual)
    if s.exact:
        a = Fraction(alpha)
        return w[v] * a.denominator > a.numerator * sum(w)
    return bool(w[v] > alpha * w.sum() * (1.0 + REL_TOL))


def heavy_vertex(s: LieState, alpha, virtual: bool = False) -> int | None:
    """Smallest-id alpha-heavy vertex, or None."""
    hits = np.flatnonzero(_heavy_mask(s, alpha, virtual))
    return int(hits[0]) if hits.size else None
