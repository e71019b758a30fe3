"""Exhaustive game values for tiny instances."""

from __future__ import annotations

import math
import sys

import numpy as np

from .graph import EdgeQuery, Graph, GraphSpace, VertexQuery
from .weights import LieState, find_median

__all__ = ["GameValue", "minimax_oracle", "strategy_worst_case", "MAX_N", "MAX_L"]

MAX_N = 8
MAX_L = 2


def _queries(g: Graph, mode: str):
    if mode == "vertex":
        return [VertexQuery(v) for v in range(g.n)]
    if mode == "edge":
        return [EdgeQuery(u, v) for u, v, _ in g.edges]
    raise ValueError(f"mode must be 'vertex' or 'edge', got {mode!r}")


def _increments(space: GraphSpace, query):
    return [(r, tuple(int(x) for x in ~space.compatible(query, r))) for r in space.replies(query)]


class GameValue:
    """Memoized game values of one ``(graph, L, mode)`` instance.

    A state is the vector of lie counters capped at ``L + 1``.  The value
    is the number of further queries an optimal questioner needs against a
    responder that keeps at least one vertex within budget.  A query
    admitting a reply that changes nothing is worth ``inf`` (the responder
    can repeat that reply forever).
    """

    def __init__(self, g: Graph, L: int, mode: str = "vertex"):
        if g.n > MAX_N or L > MAX_L or L < 0:
            raise ValueError(f"oracle limited to n <= {MAX_N} and 0 <= L <= {MAX_L}")
        self.g, self.L, self.mode = g, L, mode
        space = GraphSpace(g)
        self.moves = [_increments(space, q) for q in _queries(g, mode)]
        self.memo: dict[tuple, float] = {}

    def cap(self, lies) -> tuple:
        return tuple(min(int(c), self.L + 1) for c in lies)

    def __call__(self, lies) -> float:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 10_000))
        try:
            return self._value(self.cap(lies))
        finally:
            sys.setrecursionlimit(limit)

    def _value(self, state: tuple) -> float:
        hit = self.memo.get(state)
        if hit is not None:
            return hit
        L, cap = self.L, self.L + 1
        if sum(c <= L for c in state) <= 1:
            self.memo[state] = 0
            return 0
        best = math.inf
        for replies in self.moves:
            worst = 0
            for _, inc in replies:
                new = tuple(min(c + i, cap) for c, i in zip(state, inc))
                if all(c > L for c in new):
                    continue
                if new == state:
                    worst = math.inf
                    break
                worst = max(worst, 1 + self._value(new))
                if worst >= best:
                    break
            best = min(best, worst)
        self.memo[state] = best
        return best


def minimax_oracle(g: Graph, L: int, mode: str = "vertex") -> float:
    """Worst-case number of queries of an optimal questioner.

    The responder may lie at most ``L`` times and must keep at least one
    vertex within budget.  Lie counters are capped at ``L + 1`` since any
    larger value is equally dead.

    Raises
    ------
    ValueError
        If ``n > 8`` or ``L > 2``.
    """
    return GameValue(g, L, mode)((0,) * g.n)


def strategy_worst_case(g: Graph, L: int, gamma) -> int:
    """Worst case of the vertex-median search over every legal reply sequence.

    The search is deterministic in its lie counters, so the game tree is
    explored with memoization on the counter vector.
    """
    if g.n > MAX_N or L > MAX_L or L < 0:
        raise ValueError(f"limited to n <= {MAX_N} and 0 <= L <= {MAX_L}")
    space = GraphSpace(g)
    d = g.distances
    memo: dict[tuple, int] = {}

    def value(lies: tuple) -> int:
        hit = memo.get(lies)
        if hit is not None:
            return hit
        arr = np.array(lies, dtype=np.int64)
        if np.count_nonzero(arr <= L) <= 1:
            memo[lies] = 0
            return 0
        q = VertexQuery(find_median(LieState(g.n, gamma, lies=arr), d, "vertex"))
        worst = 0
        for r in space.replies(q):
            new = arr + ~space.compatible(q, r)
            if np.any(new <= L):
                worst = max(worst, 1 + value(tuple(new.tolist())))
        memo[lies] = worst
        return worst

    return value((0,) * g.n)
