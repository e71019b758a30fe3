"""Search over the positive integers (or a prefix ``1..n`` of them).

Lie counters are kept per segment: :class:`IntervalWeightState` stores a
sorted list of half-open segments ``[lo, hi)`` sharing one real and one
virtual counter, the last segment reaching to infinity (or to ``n + 1``).
The default prior is ``mu0(k) = k**-2`` with total mass ``pi**2 / 6``;
tail sums use the trigamma function.

Ternary queries are vertex queries on the infinite path (reply: equal,
smaller, greater); binary queries are edge queries ``{m, m + 1}`` (reply
``m`` means "at most m").
"""

from __future__ import annotations

import bisect
import math

import numpy as np
from scipy.special import polygamma

from . import bounds
from .graph import EdgeQuery, VertexQuery
from .responders import Responder
from .strategies import (
    GraphEngine,
    ResponderContractError,
    SearchAborted,
    SearchResult,
    edge_loop,
    pruning_loop,
    vertex_loop,
    _fixed_stop,
    _length_stop,
)
from .weights import WeightSnapshot

__all__ = [
    "InverseSquarePrior",
    "UniformPrior",
    "IntervalWeightState",
    "LineSpace",
    "LineShadow",
    "LineEngine",
    "UnboundedResult",
    "tail_weight",
    "line_median",
    "run_unbounded_fixed",
    "run_unbounded_linear",
    "run_unbounded_prob",
    "run_unbounded_prefix",
]

_TOL = 1e-12
_SHORT = 8


def tail_weight(M: int) -> float:
    """``sum_{k >= M} k**-2``, i.e. the trigamma function at ``M``."""
    if M < 1:
        raise ValueError("M must be >= 1")
    return float(polygamma(1, M))


class InverseSquarePrior:
    """``mu0(k) = k**-2`` on ``1, 2, ...``."""

    upper = None

    def point(self, k: int) -> float:
        return 1.0 / (k * k)

    def mass(self, lo: int, hi: int | None) -> float:
        if hi is None:
            return tail_weight(lo)
        if hi - lo <= _SHORT:
            return math.fsum(1.0 / (k * k) for k in range(lo, hi))
        return float(polygamma(1, lo) - polygamma(1, hi))

    def find(self, lo: int, hi: int | None, x: float) -> int:
        """Smallest ``m`` in ``[lo, hi)`` with ``mass(lo, m + 1) >= x``."""
        return _first_true(lo, hi, lambda m: self.mass(lo, m + 1) >= x * (1 - _TOL))


class UniformPrior:
    """Weight 1 on each of ``1..n``."""

    def __init__(self, n: int):
        if n < 1:
            raise ValueError("n must be >= 1")
        self.n = n
        self.upper = n + 1

    def point(self, k: int) -> float:
        return 1.0 if 1 <= k <= self.n else 0.0

    def mass(self, lo: int, hi: int | None) -> float:
        hi = self.upper if hi is None else min(hi, self.upper)
        return float(max(hi - lo, 0))

    def find(self, lo: int, hi: int | None, x: float) -> int:
        m = lo + max(math.ceil(x * (1 - _TOL)), 1) - 1
        top = (self.upper if hi is None else hi) - 1
        return min(m, top)


def _first_true(lo: int, hi: int | None, pred) -> int:
    """Smallest integer ``m >= lo`` (below ``hi``) with monotone ``pred(m)``.

    Returns ``hi - 1`` if no value below ``hi`` qualifies.
    """
    if hi is None:
        step = 1
        top = lo
        while not pred(top):
            top = lo + step
            step *= 2
        hi_ex = top + 1
    else:
        hi_ex = hi
    a, b = lo, hi_ex - 1
    if not pred(b):
        return b
    while a < b:
        mid = (a + b) // 2
        if pred(mid):
            b = mid
        else:
            a = mid + 1
    return a


class IntervalWeightState:
    """Piecewise-constant lie counters over ``1..upper-1`` (``upper=None``: all of N).

    Parameters
    ----------
    gamma : float or math.inf
    prior : InverseSquarePrior or UniformPrior
    """

    exact = False

    def __init__(self, gamma, prior=None):
        if not gamma > 1:
            raise ValueError("gamma must exceed 1")
        self.gamma = float(gamma)
        self.infinite = math.isinf(self.gamma)
        self._inv = 0.0 if self.infinite else 1.0 / self.gamma
        self.prior = prior if prior is not None else InverseSquarePrior()
        self.upper = self.prior.upper
        self.lo = [1]
        self.lies = [0]
        self.vlies = [0]
        self._mass = [self.prior.mass(1, self.upper)]

    def copy(self) -> "IntervalWeightState":
        new = object.__new__(IntervalWeightState)
        new.__dict__.update(self.__dict__)
        new.lo, new.lies, new.vlies, new._mass = (list(self.lo), list(self.lies),
                                                 list(self.vlies), list(self._mass))
        return new

    def __len__(self):
        return len(self.lo)

    def hi(self, i: int):
        return self.lo[i + 1] if i + 1 < len(self.lo) else self.upper

    def segments(self) -> list[tuple]:
        """``(lo, hi, lies, virtual_lies)`` tuples; ``hi`` is None for the infinite tail."""
        return [(self.lo[i], self.hi(i), self.lies[i], self.vlies[i]) for i in range(len(self.lo))]

    def segment_of(self, k: int) -> int:
        return bisect.bisect_right(self.lo, k) - 1

    def lies_at(self, k: int) -> int:
        return self.lies[self.segment_of(k)]

    def _split(self, x: int) -> None:
        if x <= 1 or (self.upper is not None and x >= self.upper):
            return
        i = self.segment_of(x)
        if self.lo[i] == x:
            return
        hi = self.hi(i)
        self.lo.insert(i + 1, x)
        self.lies.insert(i + 1, self.lies[i])
        self.vlies.insert(i + 1, self.vlies[i])
        self._mass[i] = self.prior.mass(self.lo[i], x)
        self._mass.insert(i + 1, self.prior.mass(x, hi))

    def _merge(self) -> None:
        lo, lies, vl, ms = [self.lo[0]], [self.lies[0]], [self.vlies[0]], [self._mass[0]]
        for i in range(1, len(self.lo)):
            if self.lies[i] == lies[-1] and self.vlies[i] == vl[-1]:
                # recompute rather than add so short sums stay exact
                nxt = self.hi(i)
                ms[-1] = self.prior.mass(lo[-1], nxt)
                continue
            lo.append(self.lo[i])
            lies.append(self.lies[i])
            vl.append(self.vlies[i])
            ms.append(self._mass[i])
        self.lo, self.lies, self.vlies, self._mass = lo, lies, vl, ms

    # -- weights -----------------------------------------------------------
    def factors(self, virtual: bool = False) -> np.ndarray:
        c = np.array(self.lies, dtype=np.int64)
        if virtual:
            c = c + np.array(self.vlies, dtype=np.int64)
        if self.infinite:
            return (c == 0).astype(float)
        return np.power(self._inv, c - c.min())

    def weights(self, virtual: bool = False) -> np.ndarray:
        """Relative segment weights."""
        return np.asarray(self._mass) * self.factors(virtual)

    def relative_total(self, virtual: bool = False) -> tuple[float, int]:
        base = 0 if self.infinite else min(
            (a + b if virtual else a) for a, b in zip(self.lies, self.vlies))
        return float(self.weights(virtual).sum()), base

    def ratio(self, before, after) -> float:
        if before[0] == 0:
            return math.nan
        return after[0] / before[0] * self._inv ** (after[1] - before[1])

    def total_weight(self) -> float:
        t, base = self.relative_total()
        return t * self._inv ** base if base else t

    def weight_below(self, x: int | None, w=None) -> float:
        """Relative weight of ``[1, x)`` (``x=None``: everything)."""
        if w is None:
            w = self.weights()
        if x is None:
            return float(w.sum())
        i = self.segment_of(x)
        if i < 0:
            return 0.0
        full = float(w[:i].sum())
        if self.lo[i] == x or w[i] == 0:
            return full
        return full + w[i] / self._mass[i] * self.prior.mass(self.lo[i], x)

    # -- updates -----------------------------------------------------------
    def penalize(self, a: int, b: int | None) -> None:
        """One lie for every integer outside ``[a, b)``."""
        self._split(a)
        if b is not None:
            self._split(b)
        for i in range(len(self.lo)):
            lo, hi = self.lo[i], self.hi(i)
            inside = lo >= a and (b is None or (hi is not None and hi <= b))
            if not inside:
                self.lies[i] += 1
        self._merge()

    def bump(self, k: int) -> None:
        self._split(k)
        self._split(k + 1)
        self.vlies[self.segment_of(k)] += 1
        self._merge()

    def count_within(self, limit: float) -> float:
        total = 0
        for i in range(len(self.lo)):
            if self.lies[i] <= limit:
                hi = self.hi(i)
                if hi is None:
                    return math.inf
                total += hi - self.lo[i]
        return total


def line_median(s: IntervalWeightState, mode: str = "ternary", virtual: bool = False) -> int:
    """Weighted median on the line.

    ``ternary``: smallest ``m`` with ``W(<= m) >= W / 2``.  ``binary``:
    the left end ``m`` of the edge ``{m, m + 1}`` minimizing the edge
    potential, i.e. the smallest ``m`` with ``2 W(<= m) + mu(m + 1) >= W``.
    """
    w = s.weights(virtual)
    cum = np.cumsum(w)
    total = float(cum[-1])
    if total <= 0:
        raise ValueError("total weight is zero")
    prior = s.prior
    f = w / np.asarray(s._mass)
    if mode == "ternary":
        k = int(np.argmax(cum >= total / 2 * (1 - _TOL)))
        prev = float(cum[k - 1]) if k else 0.0
        return prior.find(s.lo[k], s.hi(k), (total / 2 - prev) / f[k])
    if mode != "binary":
        raise ValueError(f"mode must be 'ternary' or 'binary', got {mode!r}")
    target = total * (1 - _TOL)
    nseg = len(s.lo)
    for k in range(nseg):
        nxt = f[k + 1] * prior.point(s.lo[k + 1]) if k + 1 < nseg else 0.0
        if 2 * cum[k] + nxt >= target:
            break
    prev = float(cum[k - 1]) if k else 0.0
    lo, hi, fk = s.lo[k], s.hi(k), f[k]
    if hi is not None and hi - lo == 1:
        return lo
    return _first_true(lo, hi, lambda m: 2 * (prev + fk * prior.mass(lo, m + 1))
                       + fk * prior.point(m + 1) >= target)


# -- query space -------------------------------------------------------------

class LineSpace:
    """Ternary and binary queries on ``1..upper`` (``upper=None``: unbounded).

    A target beyond ``upper`` is answered as if it sat at ``upper``.
    """

    def __init__(self, upper: int | None = None):
        self.upper = upper

    @property
    def n(self):
        return math.inf if self.upper is None else self.upper

    def _inside(self, k) -> bool:
        return k >= 1 and (self.upper is None or k <= self.upper)

    def replies(self, query) -> tuple:
        if query.kind == "vertex":
            m = query.vertex
            return (m,) + tuple(k for k in (m - 1, m + 1) if self._inside(k))
        return (query.u, query.v)

    def is_legal(self, query, reply) -> bool:
        return reply in self.replies(query)

    def truthful_replies(self, query, target: int) -> tuple:
        t = target if self.upper is None else min(target, self.upper)
        if query.kind == "vertex":
            m = query.vertex
            return (m,) if t == m else ((m - 1,) if t < m else (m + 1,))
        return (query.u,) if t <= query.u else (query.v,)

    def compatible(self, query, reply) -> tuple[int, int | None]:
        """Half-open interval ``[a, b)`` of targets consistent with the reply."""
        if query.kind == "vertex":
            m = query.vertex
            if reply == m:
                return m, m + 1
            if reply == m - 1:
                return 1, m
            if reply == m + 1:
                return m + 1, None
        else:
            if reply == query.u:
                return 1, query.u + 1
            if reply == query.v:
                return query.v, None
        raise ValueError(f"illegal reply {reply} to {query}")

    def prior(self):
        return InverseSquarePrior() if self.upper is None else UniformPrior(self.upper)

    def shadow(self, gamma):
        return LineShadow(self, gamma)


class LineShadow:
    def __init__(self, space: LineSpace, gamma):
        self.space = space
        self.state = IntervalWeightState(gamma, space.prior())

    def begin(self, query):
        self._w = self.state.weights()
        self._total = float(self._w.sum())

    def outcome(self, query, reply):
        return self.space.compatible(query, reply)

    def score(self, query, reply, interval=None):
        a, b = interval if interval is not None else self.outcome(query, reply)
        kept = self.state.weight_below(b, self._w) - self.state.weight_below(a, self._w)
        if self.state.infinite:
            return kept
        return kept + (self._total - kept) / self.state.gamma

    def update(self, query, reply, interval=None):
        a, b = interval if interval is not None else self.outcome(query, reply)
        self.state.penalize(a, b)


# -- engine ------------------------------------------------------------------

class LineEngine(GraphEngine):
    """Engine protocol of :mod:`liarsearch.strategies` on the integer line."""

    def __init__(self, gamma, responder: Responder, space: LineSpace | None = None,
                 *, trace=False, announce=True):
        self.space = space if space is not None else LineSpace()
        self.state = IntervalWeightState(gamma, self.space.prior())
        self.responder = responder
        if announce:
            responder.start(self.space, gamma)
        self.transcript = []
        self.trace = [] if trace else None
        self.checker = None
        self.logical = 0
        self.info = {"heavy_activations": 0}

    @property
    def max_degree(self) -> int:
        return 2

    def count_within(self, limit) -> float:
        return self.state.count_within(limit + 1e-9)

    def first_within(self, limit) -> int:
        s = self.state
        return next(s.lo[i] for i in range(len(s)) if s.lies[i] <= limit + 1e-9)

    def best(self) -> int:
        s = self.state
        m = min(s.lies)
        return s.lo[s.lies.index(m)]

    def vertex_median(self):
        return VertexQuery(line_median(self.state, "ternary"))

    def edge_median(self, virtual=False):
        m = line_median(self.state, "binary", virtual)
        return EdgeQuery(m, m + 1)

    def _point_weights(self):
        s = self.state
        f = s.factors()
        pts = np.array([s.prior.point(k) for k in s.lo])
        return f * pts, float(s.weights().sum())

    def heavy(self, alpha):
        pw, total = self._point_weights()
        hits = np.flatnonzero(pw > alpha * total * (1 + 1e-9))
        return self.state.lo[int(hits[0])] if hits.size else None

    def is_heavy(self, v, alpha) -> bool:
        s = self.state
        i = s.segment_of(v)
        w = s.factors()[i] * s.prior.point(v)
        return bool(w > alpha * float(s.weights().sum()) * (1 + 1e-9))

    def greedy_order(self, v) -> list:
        s = self.state
        w = s.weights()
        left = s.weight_below(v, w) if v > 1 else -1.0
        right = (s.weight_below(None, w) - s.weight_below(v + 1, w)
                 if s.upper is None or v + 1 < s.upper else -1.0)
        edges = []
        if v > 1:
            edges.append((left, EdgeQuery(v - 1, v)))
        if right >= 0:
            edges.append((right, EdgeQuery(v, v + 1)))
        edges.sort(key=lambda p: -p[0])
        return [e for _, e in edges]

    def apply(self, query, reply, role=None, heavy=None) -> None:
        s = self.state
        a, b = self.space.compatible(query, reply)
        before = s.relative_total()
        s.penalize(a, b)
        after = s.relative_total()
        self.logical += 1
        if self.trace is not None:
            factor = s.ratio(before, after)
            lg = 0.0 if s.infinite else math.log(s.gamma)
            log_total = math.log(after[0]) - after[1] * lg if after[0] > 0 else -math.inf
            self.trace.append(WeightSnapshot(self.logical, query, reply,
                                             math.exp(log_total), factor, heavy))

    def bump(self, w) -> None:
        self.state.bump(w)

    def prune_sets(self, t, r, H):
        s = self.state
        C, D = [], []
        for lo, hi, lies, vl in s.segments():
            if vl * H >= t - 1e-9:
                D.append((lo, hi))
            elif lies <= r * t + 1e-9:
                C.append((lo, hi))
        return C, D

    @staticmethod
    def size(intervals) -> float:
        total = 0
        for lo, hi in intervals:
            if hi is None:
                return math.inf
            total += hi - lo
        return total


class UnboundedResult(SearchResult):
    pass


def _points(intervals) -> list[int]:
    out = []
    for lo, hi in intervals:
        out.extend(range(lo, hi))
    return out


def _wrap(eng, found, bound, params=None, **info):
    eng.info.update(info)
    return UnboundedResult(found=found, rounds=eng.rounds, transcript=eng.transcript,
                           bound=bound, trace=eng.trace, params=params,
                           logical_rounds=eng.logical, info=eng.info)


def _loop_for(mode):
    if mode == "ternary":
        return vertex_loop
    if mode == "binary":
        return edge_loop
    raise ValueError(f"mode must be 'ternary' or 'binary', got {mode!r}")


def run_unbounded_fixed(mode: str, L: int, gamma, responder: Responder, *,
                        trace=False, max_rounds: int = 100_000) -> UnboundedResult:
    """Fixed-lie search on N until one integer has at most ``L`` lies.

    ``bound`` is evaluated at the returned integer.
    """
    loop = _loop_for(mode)
    eng = LineEngine(gamma, responder, trace=trace)
    loop(eng, _fixed_stop(eng, L, max_rounds))
    found = eng.first_within(L)
    bound = bounds.unbounded_fixed_bound(found, L, float(gamma), mode)
    prm = bounds.StrategyParams(gamma=float(gamma), lie_budget=L, length=bound)
    return _wrap(eng, found, bound, prm, mode=mode)


def _line_linear_params(mode, r):
    if mode == "ternary":
        if not 0 <= r < 0.5:
            raise ValueError("ternary search needs 0 <= r < 1/2")
        eps = 1 - 2 * r
        gamma = math.inf if r == 0 else (1 - r) / r
        step = lambda g: math.log(2 * g / (g + 1))
    elif mode == "binary":
        if not 0 <= r < 1 / 3:
            raise ValueError("binary search needs 0 <= r < 1/3")
        eps = 1 - 3 * r
        gamma = math.inf if r == 0 else 1 + 1.5 * eps / (1 - eps)
        step = lambda g: math.log(3 * g / (2 * g + 1))
    else:
        raise ValueError(f"mode must be 'ternary' or 'binary', got {mode!r}")
    return eps, gamma, step


def run_unbounded_linear(mode: str, r: float, responder: Responder, *,
                         trace=False, max_rounds: int = 100_000) -> UnboundedResult:
    """Stop once a single integer has at most ``r * t`` lies after ``t`` rounds.

    ``bound`` is the weight-argument length
    ``(ln(pi^2/6) + 2 ln N) / (ln step - r ln gamma)`` at the returned ``N``;
    ``info['shape']`` holds ``2 eps**-2 * 2 ln N``.
    """
    eps, gamma, step = _line_linear_params(mode, r)
    loop = _loop_for(mode)
    eng = LineEngine(gamma, responder, trace=trace)

    def stop():
        k = eng.count_within(r * eng.logical)
        if k == 0:
            raise ResponderContractError(f"no integer within {r} * t lies", eng.rounds,
                                         eng.transcript)
        if eng.logical >= max_rounds:
            raise SearchAborted(f"no decision after {eng.logical} queries")
        return k == 1

    loop(eng, stop)
    found = eng.first_within(r * eng.logical)
    num = math.log(math.pi ** 2 / 6) + 2 * math.log(found)
    if math.isinf(gamma):
        den = math.log(2.0) if mode == "ternary" else math.log(1.5)
    else:
        den = step(gamma) - r * math.log(gamma)
    prm = bounds.StrategyParams(gamma=gamma, lie_budget=0, length=num / den, rate=r, epsilon=eps)
    return _wrap(eng, found, num / den, prm, mode=mode,
                 shape=2 * eps ** -2 * 2 * math.log(max(found, 2)))


def _search_range(n, p, delta, responder, transcript, trace=False):
    prm = bounds.vertex_prob_params(n, p, delta)
    space = LineSpace(n)
    eng = LineEngine(prm.gamma, responder, space, trace=trace)
    eng.transcript = transcript
    vertex_loop(eng, _length_stop(eng, prm.length))
    return eng.best(), prm, eng.logical


def run_unbounded_prob(p: float, delta: float, responder: Responder, *,
                       max_stages: int = 8) -> UnboundedResult:
    """Algorithm UNBOUNDED: probabilistic searches over squaring ranges.

    Stage ``i`` searches ``1..ceil(1/delta_i)`` with confidence
    ``delta_i = (delta/2)**(2**i)``; the first answer below the range end
    is returned.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    d = delta / 2
    transcript = []
    stages = []
    t = None
    for _ in range(max_stages):
        n = max(2, math.ceil(1 / d * (1 - 1e-12)))
        t, prm, q = _search_range(n, p, d, responder, transcript)
        stages.append({"n": n, "delta": d, "queries": q, "answer": t})
        if t != n:
            break
        d = d * d
    res = UnboundedResult(found=t, rounds=len(transcript), transcript=transcript,
                          bound=math.nan, logical_rounds=len(transcript),
                          info={"stages": stages})
    return res


def run_unbounded_prefix(epsilon: float, responder: Responder, *,
                         max_rounds: int = 200_000) -> UnboundedResult:
    """PRUNING on N with ``H = 4/eps`` and ``gamma = 1 + eps``, then majority binary search.

    The lie rate is ``(1 - eps) / 2`` in every prefix.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    r = (1 - epsilon) / 2
    H = 4 / epsilon
    eng = LineEngine(1 + epsilon, responder)
    C, D, max_d, _ = pruning_loop(eng, r, H, math.inf, max_rounds)
    pruning_rounds = eng.rounds
    cand = sorted(set(_points(C)) | set(_points(D)))
    if not cand:
        raise ResponderContractError("pruning left no candidate", eng.rounds, eng.transcript)
    floor_k = bounds.odd_ceil(1 / epsilon)
    a, b = 0, len(cand) - 1
    finisher = 0
    while a < b:
        mid = (a + b) // 2
        m = cand[mid]
        k = bounds.prefix_safe_repeats(eng.rounds, r, floor_k)
        reply = eng.ask(EdgeQuery(m, m + 1), k)
        finisher += 1
        if reply == m:
            b = mid
        else:
            a = mid + 1
    found = cand[a]
    shape = epsilon ** -4 * math.log(max(found, 2))
    return _wrap(eng, found, shape, None, pruning_rounds=pruning_rounds, candidates=cand,
                 max_D=max_d, H=H, gamma=1 + epsilon, finisher_queries=finisher)
