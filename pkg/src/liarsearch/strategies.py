"""Finite-graph search strategies and their error-model wrappers.

The three loops (vertex-median search, edge search with heavy-vertex
cycling, and pruning with virtual counters) are written against a small
engine protocol so that :mod:`liarsearch.unbounded` can drive them on the
infinite path as well.  The ``run_*`` functions pick parameters from
:mod:`liarsearch.bounds` and wrap the loops for each error model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import bounds
from .bounds import StrategyParams
from .graph import EdgeQuery, Graph, GraphSpace, VertexQuery
from .responders import ReplyRecord, Responder, majority
from .weights import LieState, WeightSnapshot, find_median, heavy_vertex, is_heavy

__all__ = [
    "SearchResult",
    "PruningResult",
    "StrategyParams",
    "ResponderContractError",
    "SearchAborted",
    "LemmaViolation",
    "FinisherExhausted",
    "GraphEngine",
    "entropy",
    "entropy_gap",
    "run_vertex_fixed",
    "run_edge_fixed",
    "run_edge_errorless",
    "run_vertex_linear",
    "run_edge_linear",
    "run_vertex_prob",
    "run_edge_prob",
    "run_pruning",
    "run_prefix_bounded",
]

entropy = bounds.entropy
entropy_gap = bounds.entropy_gap

_TOL = 1e-9


class ResponderContractError(RuntimeError):
    """The replies are inconsistent with the responder's declared budget."""

    def __init__(self, msg, rounds=0, transcript=None):
        super().__init__(msg)
        self.rounds = rounds
        self.transcript = transcript or []


class SearchAborted(RuntimeError):
    pass


class LemmaViolation(AssertionError):
    pass


class FinisherExhausted(RuntimeError):
    pass


@dataclass
class SearchResult:
    found: int | None
    rounds: int
    transcript: list[ReplyRecord]
    bound: float
    trace: list[WeightSnapshot] | None = None
    params: StrategyParams | None = None
    logical_rounds: int | None = None
    info: dict = field(default_factory=dict)

    @property
    def within_bound(self) -> bool:
        return self.rounds <= math.ceil(self.bound - 1e-9)


@dataclass
class PruningResult:
    C: frozenset
    D: frozenset
    rounds: int
    transcript: list[ReplyRecord] = field(default_factory=list)
    params: object = None
    max_D: int = 0
    exceeded: bool = False

    def __iter__(self):
        return iter((self.C, self.D, self.rounds))

    @property
    def candidates(self) -> frozenset:
        return self.C | self.D


# -- engine -------------------------------------------------------------------

def _inv(gamma):
    if isinstance(gamma, Fraction):
        return 1 / gamma
    return 0.0 if math.isinf(gamma) else 1.0 / gamma


class _Checker:
    """Per-round lemma assertions, exact for Fraction gamma."""

    def __init__(self, state: LieState):
        self.exact = state.exact
        self.inv = _inv(state.gamma)
        self.counts: dict[str, int] = {}

    def _le(self, a, b, name, detail=""):
        ok = a <= b if self.exact else a <= b + _TOL * abs(b) + 1e-300
        if not ok:
            raise LemmaViolation(f"{name}: {a} > {b} {detail}")
        self.counts[name] = self.counts.get(name, 0) + 1


class GraphEngine:
    """Lie counters plus query/reply bookkeeping for one run on a finite graph."""

    def __init__(self, g: Graph, gamma, responder: Responder, *, trace=False,
                 check=False, lies=None, announce=True):
        self.g = g
        self.d = g.distances
        self.space = GraphSpace(g, self.d)
        self.state = LieState(g.n, gamma, lies=lies)
        self.responder = responder
        if announce:
            responder.start(self.space, gamma)
        self.transcript: list[ReplyRecord] = []
        self.trace = [] if trace else None
        self.checker = _Checker(self.state) if check else None
        self.logical = 0
        self.info: dict = {}

    # protocol used by the search loops
    @property
    def rounds(self) -> int:
        return len(self.transcript)

    @property
    def max_degree(self) -> int:
        return self.g.max_degree

    def alpha(self, num, den):
        return Fraction(num, den) if self.state.exact else num / den

    def count_within(self, limit) -> int:
        return int(np.count_nonzero(self.state.lies <= limit + _TOL))

    def best(self) -> int:
        """Vertex with the fewest lies (smallest id on ties)."""
        return int(np.argmin(self.state.lies))

    def first_within(self, limit) -> int:
        return int(np.flatnonzero(self.state.lies <= limit + _TOL)[0])

    def vertex_median(self):
        return VertexQuery(find_median(self.state, self.d, "vertex"))

    def edge_median(self, virtual=False):
        return EdgeQuery(*find_median(self.state, self.d, "edge", virtual))

    def heavy(self, alpha):
        return heavy_vertex(self.state, alpha)

    def is_heavy(self, v, alpha) -> bool:
        return is_heavy(self.state, v, alpha)

    def greedy_order(self, v) -> list:
        """Edges at ``v`` ordered to greedily cover the most weight beyond them.

        Edge ``{v, u}`` covers the vertices strictly closer to ``u`` than
        to ``v``; each step picks the edge that maximizes the weight of the
        union covered so far (smallest neighbor id on ties).
        """
        nbrs, far = self._far_sets(v)
        w = self.state.weights()
        exact = self.state.exact
        gain = far.astype(object if exact else float) @ w
        scale = abs(w.sum()) if not exact else 0
        left = np.ones(len(nbrs), dtype=bool)
        covered = np.zeros(self.g.n, dtype=bool)
        order = []
        for _ in range(len(nbrs)):
            best = max(gain[left])
            ok = left & ((gain == best) if exact else (gain >= best - _TOL * scale))
            i = int(np.flatnonzero(ok)[0])
            left[i] = False
            new = far[i] & ~covered
            covered |= new
            if new.any():
                gain = gain - far[:, new].astype(gain.dtype) @ w[new]
            u = nbrs[i]
            order.append(EdgeQuery(min(u, v), max(u, v)))
        return order

    def _far_sets(self, v):
        cache = self.__dict__.setdefault("_far_cache", {})
        hit = cache.get(v)
        if hit is None:
            nbrs = self.g.adjacency[v]
            far = np.array([self.space.compatible(EdgeQuery(min(u, v), max(u, v)), u, strict=True)
                            for u in nbrs], dtype=bool)
            hit = cache[v] = (nbrs, far)
        return hit

    def ask(self, query, repeats: int = 1) -> int:
        replies = self.responder.answer_many(query, repeats)
        for r in replies:
            if not self.space.is_legal(query, r):
                raise ResponderContractError(f"illegal reply {r} to query {query}",
                                             self.rounds, self.transcript)
            self.transcript.append(ReplyRecord(len(self.transcript) + 1, query, r))
        return replies[0] if repeats == 1 else majority(replies)

    def apply(self, query, reply, role=None, heavy=None) -> None:
        s = self.state
        mask = self.space.compatible(query, reply)
        ck = self.checker
        if ck is not None:
            w = s.weights()
            pre = self._lemmas_before(query, reply, mask, w, role)
        if s.exact or ck is not None or self.trace is not None:
            before = s.total_weight() if s.exact else s.relative_total()
            s.penalize(mask)
            after = s.total_weight() if s.exact else s.relative_total()
            factor = after / before if s.exact else s.ratio(before, after)
        else:
            s.penalize(mask)
            factor = None
        self.logical += 1
        if ck is not None:
            self._lemmas_after(query, reply, mask, w, factor, role, pre)
        if self.trace is not None:
            if s.exact:
                total = float(after)
                log_total = math.log(after) if after > 0 else -math.inf
            else:
                lg = 0.0 if s.infinite else math.log(s.gamma)
                log_total = math.log(after[0]) - after[1] * lg if after[0] > 0 else -math.inf
                total = math.exp(log_total)
            self.trace.append(WeightSnapshot(self.logical, query, reply, total,
                                             float(factor), heavy))
            self.info.setdefault("log_totals", []).append(log_total)

    def bump(self, w) -> None:
        self.state.bump(w)

    def prune_sets(self, t, r, H):
        """``C`` and ``D`` of the pruning loop after ``t`` rounds."""
        s = self.state
        d_mask = s.virtual_lies * H >= t - _TOL
        c_mask = ~d_mask & (s.lies <= r * t + _TOL)
        return (frozenset(np.flatnonzero(c_mask).tolist()),
                frozenset(np.flatnonzero(d_mask).tolist()))

    @staticmethod
    def size(vertices) -> int:
        return len(vertices)

    # -- lemma checks ------------------------------------------------------
    def _lemmas_before(self, query, reply, mask, w, role):
        ck, g = self.checker, self.g
        total = w.sum()
        if role == "vertex-median":
            q = query.vertex
            for v in g.adjacency[q]:
                part = w[self.space.compatible(query, v)].sum()
                ck._le(2 * part, total, "median-half", f"at q={q}, v={v}")
            return total
        if role in ("edge-median", "pruning"):
            q = reply
            dq = g.degree(q)
            ww = self.state.weights(virtual=True) if role == "pruning" else w
            tot = ww.sum()
            if dq > 1:
                outside = ww[~mask].sum()
                ck._le(tot - ww[q], dq * outside, "degree-bound" if role == "edge-median"
                       else "degree-bound-virtual", f"at edge {query}, reply {q}")
        return total

    def _lemmas_after(self, query, reply, mask, w, factor, role, total):
        ck = self.checker
        inv = ck.inv
        kept = w[mask].sum()
        predicted = kept + (total - kept) * inv
        if ck.exact:
            if factor != predicted / total:
                raise LemmaViolation(f"weight identity: {factor} != {predicted / total}")
            ck.counts["identity"] = ck.counts.get("identity", 0) + 1
        else:
            if abs(factor * total - predicted) > 1e-9 * total:
                raise LemmaViolation(f"weight identity: {factor * total} != {predicted}")
            ck.counts["identity"] = ck.counts.get("identity", 0) + 1
        half = (1 + inv) / 2
        if role == "vertex-median":
            q = query.vertex
            if reply != q:
                ck._le(factor, half, "no-answer", f"at q={q}")
            elif not (w[q] * 2 > total):
                ck._le(factor, half, "yes-answer", f"at q={q}")
        elif role == "edge-median":
            dlt = self.g.max_degree
            ck._le(factor, 1 - (1 - inv) / (dlt + 1), "edge-no-answer", f"at edge {query}")


# -- search loops ---------------------------------------------------------------

def _contract_error(eng, msg):
    return ResponderContractError(msg, eng.rounds, eng.transcript)


def _fixed_stop(eng, L, cap):
    def stop():
        k = eng.count_within(L)
        if k == 0:
            raise _contract_error(eng, f"no candidate with at most {L} lies after "
                                       f"{eng.rounds} rounds")
        if k == 1:
            return True
        if eng.logical >= cap:
            raise SearchAborted(f"no decision after {eng.logical} queries")
        return False
    return stop


def _length_stop(eng, q):
    return lambda: eng.logical >= q


def vertex_loop(eng, stop, repeats=lambda eng: 1):
    while not stop():
        q = eng.vertex_median()
        eng.apply(q, eng.ask(q, repeats(eng)), role="vertex-median")


def edge_loop(eng, stop, repeats=lambda eng: 1):
    """Algorithm EDGE: heavy-vertex cycling, else query the edge median."""
    dlt = eng.max_degree
    alpha = eng.alpha(1, dlt + 1)
    activations = 0
    while not stop():
        v = eng.heavy(alpha)
        if v is None:
            e = eng.edge_median()
            eng.apply(e, eng.ask(e, repeats(eng)), role="edge-median")
            continue
        activations += 1
        order = eng.greedy_order(v)
        i = 0
        while True:
            e = order[i]
            reply = eng.ask(e, repeats(eng))
            eng.apply(e, reply, role="edge-heavy", heavy=v)
            if reply == v:
                i = (i + 1) % len(order)
            if not eng.is_heavy(v, alpha) or stop():
                break
    eng.info["heavy_activations"] = eng.info.get("heavy_activations", 0) + activations


def _cap(bound):
    return 10 * math.ceil(bound) + 100 if math.isfinite(bound) else 100_000


def _result(eng, found, bound, params=None, **info):
    eng.info.update(info)
    if eng.checker is not None:
        eng.info["checks"] = dict(eng.checker.counts)
    return SearchResult(found=found, rounds=eng.rounds, transcript=eng.transcript,
                        bound=bound, trace=eng.trace, params=params,
                        logical_rounds=eng.logical, info=eng.info)


def _require_unit(g: Graph):
    if not g.is_unit:
        raise ValueError("edge-query strategies need a unit-length graph; use Graph.unit()")


def _single(eng, L):
    return eng.first_within(L)


def run_vertex_fixed(g: Graph, L: int, gamma, responder: Responder, *, trace=False,
                     check=False) -> SearchResult:
    """Query the vertex median until a single vertex has at most ``L`` lies.

    Raises
    ------
    ResponderContractError
        If every vertex exceeds ``L`` lies.
    """
    bound = bounds.vertex_fixed_bound(g.n, L, float(gamma))
    eng = GraphEngine(g, gamma, responder, trace=trace, check=check)
    vertex_loop(eng, _fixed_stop(eng, L, _cap(bound)))
    params = StrategyParams(gamma=float(gamma), lie_budget=L, length=bound)
    return _result(eng, _single(eng, L), bound, params)


def run_edge_fixed(g: Graph, L: int, gamma, responder: Responder, *, trace=False,
                   check=False, bound=None) -> SearchResult:
    """Algorithm EDGE with at most ``L`` lies and multiplier ``gamma``."""
    _require_unit(g)
    if bound is None:
        bound = bounds.edge_fixed_bound(g.n, L, float(gamma), g.max_degree)
    eng = GraphEngine(g, gamma, responder, trace=trace, check=check)
    edge_loop(eng, _fixed_stop(eng, L, _cap(bound)))
    params = StrategyParams(gamma=float(gamma), lie_budget=L, length=bound)
    return _result(eng, _single(eng, L), bound, params)


def run_edge_errorless(g: Graph, responder: Responder, *, trace=False,
                       check=False) -> SearchResult:
    """EDGE with ``gamma = inf`` and no lies."""
    _require_unit(g)
    bound = bounds.edge_errorless_bound(g.n, g.max_degree)
    return run_edge_fixed(g, 0, math.inf, responder, trace=trace, check=check, bound=bound)


def run_vertex_linear(g: Graph, r: float, responder: Responder, *, trace=False,
                      check=False) -> SearchResult:
    """Linearly bounded lies at rate ``r < 1/2``; at most ``Q`` queries."""
    p = bounds.vertex_linear_params(g.n, r)
    responder.declare_length(p.length)
    eng = GraphEngine(g, p.gamma, responder, trace=trace, check=check)
    vertex_loop(eng, _fixed_stop(eng, p.lie_budget, _cap(p.length)))
    return _result(eng, _single(eng, p.lie_budget), p.length, p)


def run_edge_linear(g: Graph, epsilon: float, responder: Responder, *, trace=False,
                    check=False) -> SearchResult:
    """Edge search at lie rate ``(1 - eps) / (Delta + 1)``."""
    _require_unit(g)
    p = bounds.edge_linear_params(g.n, g.max_degree, epsilon)
    responder.declare_length(p.length)
    bound = 2 * epsilon ** -2 * g.max_degree * math.log(g.n) if g.n > 1 else 0.0
    eng = GraphEngine(g, p.gamma, responder, trace=trace, check=check)
    edge_loop(eng, _fixed_stop(eng, p.lie_budget, _cap(bound)))
    return _result(eng, _single(eng, p.lie_budget), bound, p)


def run_vertex_prob(g: Graph, p: float, delta: float, responder: Responder, *,
                    trace=False, check=False) -> SearchResult:
    """Exactly ``Q`` vertex-median queries, then the vertex with fewest lies."""
    prm = bounds.vertex_prob_params(g.n, p, delta)
    responder.declare_length(prm.length)
    eng = GraphEngine(g, prm.gamma, responder, trace=trace, check=check)
    vertex_loop(eng, _length_stop(eng, prm.length))
    return _result(eng, eng.best(), prm.length, prm)


def run_edge_prob(g: Graph, epsilon: float, delta: float, responder: Responder, *,
                  trace=False, check=False) -> SearchResult:
    """Majority-boosted edge queries driving the linearly bounded edge search.

    Each of the ``Q'`` logical queries is asked ``P`` times; the search
    always runs all ``P * Q'`` rounds and returns the vertex with fewest lies.
    """
    _require_unit(g)
    prm = bounds.edge_prob_params(g.n, g.max_degree, epsilon, delta)
    responder.declare_length(prm.length * prm.repeats)
    eng = GraphEngine(g, prm.gamma, responder, trace=trace, check=check)
    edge_loop(eng, _length_stop(eng, prm.length), repeats=lambda _: prm.repeats)
    return _result(eng, eng.best(), prm.length * prm.repeats, prm)


# -- prefix-bounded model -------------------------------------------------------

def pruning_loop(eng, r, H, cap, hard_cap):
    """Algorithm PRUNING on an engine; returns ``(C, D, max |D|, exceeded)``."""
    t = 0
    max_d = 0
    exceeded = False
    while True:
        e = eng.edge_median(virtual=True)
        w = eng.ask(e)
        eng.apply(e, w, role="pruning")
        eng.bump(w)
        t += 1
        C, D = eng.prune_sets(t, r, H)
        if len(D) > H + _TOL:
            raise LemmaViolation(f"|D| = {len(D)} exceeds H = {H}")
        max_d = max(max_d, len(D))
        if eng.size(C) <= 1:
            return C, D, max_d, exceeded
        if t >= cap:
            exceeded = True
        if t >= hard_cap:
            raise SearchAborted(f"pruning did not terminate within {hard_cap} rounds")


def run_pruning(g: Graph, epsilon: float, responder: Responder, *, slack: float = 2.0,
                check=False, engine=None) -> PruningResult:
    """Shrink the candidates to ``C | D`` under prefix-bounded lies at rate ``(1-eps)/Delta``.

    Rounds beyond ``slack * q0`` set ``exceeded`` on the result; the run
    is aborted after ten times that many.
    """
    _require_unit(g)
    if g.max_degree <= 1:
        if engine is None:
            responder.start(GraphSpace(g), None)
        return PruningResult(frozenset(range(g.n)), frozenset(), 0)
    prm = bounds.pruning_params(g.n, g.max_degree, epsilon, slack)
    eng = engine or GraphEngine(g, prm.gamma, responder, check=check)
    C, D, max_d, exceeded = pruning_loop(eng, prm.rate, prm.threshold, prm.cap, 10 * prm.cap)
    return PruningResult(C, D, eng.rounds, eng.transcript, prm, max_d, exceeded)


def _finish_on_graph(g, cand, responder, rate, floor_k, transcript):
    """Error-less EDGE on ``cand`` with majority-voted, prefix-safe repeats."""
    outside = np.ones(g.n, dtype=np.int64)
    outside[list(cand)] = 0
    for attempt in range(21):
        mult = 2 ** attempt
        eng = GraphEngine(g, math.inf, responder, lies=outside, announce=False)
        eng.transcript = transcript

        def repeats(e, mult=mult):
            return (bounds.prefix_safe_repeats(e.rounds, rate, floor_k) * mult) | 1

        def stop(e=eng):
            k = e.count_within(0)
            if k == 0:
                raise _Inconsistent
            return k == 1

        try:
            edge_loop(eng, stop, repeats)
        except _Inconsistent:
            continue
        return _single(eng, 0), attempt, eng.logical
    raise FinisherExhausted("majority finisher failed after 20 doublings")


class _Inconsistent(Exception):
    pass


def run_prefix_bounded(g: Graph, epsilon: float, responder: Responder, *,
                       slack: float = 2.0, check=False) -> SearchResult:
    """PRUNING followed by a majority-voted error-less search on ``C | D``.

    The rate is ``(1 - eps) / max(Delta, 2)``; a single edge is a path.  The finisher repeats every logical
    query ``k`` times with ``k`` large enough that a prefix-legal responder
    cannot win a majority vote, and at least ``odd(ceil(1/eps))``.
    """
    _require_unit(g)
    rate = (1 - epsilon) / max(g.max_degree, 2)
    pr = run_pruning(g, epsilon, responder, slack=slack, check=check)
    cand = pr.candidates
    transcript = list(pr.transcript)
    floor_k = bounds.odd_ceil(1 / epsilon)
    retries = 0
    finisher_queries = 0
    if len(cand) == 0:
        raise ResponderContractError("pruning left no candidate", pr.rounds, transcript)
    if len(cand) == 1:
        found = next(iter(cand))
    else:
        found, retries, finisher_queries = _finish_on_graph(g, cand, responder, rate,
                                                            floor_k, transcript)
    q0 = pr.params.q0 if pr.params is not None else 0.0
    bound = epsilon ** -4 * math.log(max(g.n, 2))
    return SearchResult(found=found, rounds=len(transcript), transcript=transcript,
                        bound=bound, logical_rounds=pr.rounds + finisher_queries,
                        info={"pruning_rounds": pr.rounds, "candidates": sorted(cand),
                              "max_D": pr.max_D, "exceeded": pr.exceeded,
                              "finisher_retries": retries, "q0": q0})
