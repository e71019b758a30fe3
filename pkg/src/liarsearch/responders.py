"""Reply policies: truthful, i.i.d. noisy and budgeted greedy adversaries.

A responder is bound to a *space* (a :class:`~liarsearch.graph.GraphSpace`
or :class:`~liarsearch.unbounded.LineSpace`) by :meth:`Responder.start`
and then answers one query per round.  Honest responders commit to a
target up front.  :class:`GreedyAdversary` may instead stay target-free
and keep every vertex alive that is still consistent with its budget.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .graph import DistanceMatrix, Graph, GraphSpace
from .weights import LieState

__all__ = [
    "Budget",
    "BudgetViolation",
    "ReplyRecord",
    "Responder",
    "TruthfulResponder",
    "IIDResponder",
    "GreedyAdversary",
    "ReplayResponder",
    "GraphShadow",
    "truthful_reply",
    "iid_reply",
    "adversary_reply",
    "annotate_lies",
    "check_budget",
    "majority",
]

_EPS = 1e-9
_SCORE_TOL = 1e-12


class BudgetViolation(AssertionError):
    pass


@dataclass
class Budget:
    """Lie allowance of a responder.

    ``fixed``: at most ``L`` lies.  ``linear``: at most ``floor(r * T)`` for
    the declared game length ``T``.  ``prefix``: at most ``floor(r * i)``
    within every prefix of ``i`` replies.  ``iid``: no cap (noise ``p``).
    """

    kind: str
    L: int | None = None
    r: float = 0.0
    p: float = 0.0
    declared: float | None = None
    lies_so_far: int = 0
    round: int = 0

    KINDS = ("fixed", "linear", "prefix", "iid")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"budget kind must be one of {self.KINDS}, got {self.kind!r}")
        if self.kind == "fixed" and (self.L is None or self.L < 0):
            raise ValueError("fixed budget needs L >= 0")
        if self.kind in ("linear", "prefix") and not 0.0 <= self.r < 1.0:
            raise ValueError("rate must lie in [0, 1)")
        if self.kind == "iid" and not 0.0 <= self.p < 0.5:
            raise ValueError("noise must satisfy 0 <= p < 1/2")

    @classmethod
    def fixed(cls, L: int) -> "Budget":
        return cls("fixed", L=L)

    @classmethod
    def linear(cls, r: float) -> "Budget":
        return cls("linear", r=r)

    @classmethod
    def prefix(cls, r: float) -> "Budget":
        return cls("prefix", r=r)

    @classmethod
    def iid(cls, p: float) -> "Budget":
        return cls("iid", p=p)

    def fresh(self) -> "Budget":
        return replace(self, lies_so_far=0, round=0, declared=None)

    def limit(self, round: int | None = None) -> float:
        """Lies allowed in total once ``round`` replies have been given."""
        t = self.round if round is None else round
        if self.kind == "fixed":
            return self.L
        if self.kind == "linear":
            if self.declared is None:
                raise BudgetViolation("linear budget used before a game length was declared")
            return math.floor(self.r * self.declared + _EPS)
        if self.kind == "prefix":
            return math.floor(self.r * t + _EPS)
        return math.inf

    def record(self, was_lie: bool) -> None:
        self.round += 1
        self.lies_so_far += int(bool(was_lie))

    def ok(self) -> bool:
        return self.lies_so_far <= self.limit()


@dataclass(frozen=True)
class ReplyRecord:
    round: int
    query: object
    reply: int
    was_lie: bool | None = None


def majority(replies: Sequence[int]) -> int:
    """Most frequent reply; ties go to the smallest id."""
    counts: dict[int, int] = {}
    for r in replies:
        counts[r] = counts.get(r, 0) + 1
    best = max(counts.values())
    return min(r for r, c in counts.items() if c == best)


# -- shadow weight state for adversaries ------------------------------------

class GraphShadow:
    """An adversary's private copy of the questioner's lie counters."""

    def __init__(self, space: GraphSpace, gamma):
        self.space = space
        self.state = LieState(space.n, gamma)
        self._w = None

    @property
    def lies(self) -> np.ndarray:
        return self.state.lies

    def begin(self, query) -> None:
        self._w = self.state.weights()
        self._wsum = float(self._w.sum())

    def outcome(self, query, reply) -> np.ndarray:
        return self.space.compatible(query, reply)

    def score(self, query, reply, mask=None) -> float:
        """Post-update total weight (relative units) if ``reply`` is given."""
        if mask is None:
            mask = self.outcome(query, reply)
        kept = float(self._w[mask].sum())
        if self.state.infinite:
            return kept
        return kept + (self._wsum - kept) / self.state.gamma

    def update(self, query, reply, mask=None) -> None:
        if mask is None:
            mask = self.outcome(query, reply)
        self.state.penalize(mask)


# -- responders -------------------------------------------------------------

class Responder:
    """Base class.  Subclasses implement :meth:`_reply`."""

    targeted = True

    def __init__(self, target: int | None = None, seed: int | None = 0,
                 budget: Budget | None = None):
        self.target = target
        self.seed = seed
        self.rng = random.Random(seed)
        self.budget = budget if budget is not None else Budget.iid(0.0)
        self.records: list[ReplyRecord] = []
        self.space = None

    def start(self, space, gamma=None) -> "Responder":
        """Attach to a search space; ``gamma`` announces the questioner's multiplier."""
        if self.targeted and self.target is None:
            raise ValueError(f"{type(self).__name__} needs a target")
        self.space = space
        return self

    def declare_length(self, length: float) -> None:
        self.budget.declared = length

    @property
    def rounds(self) -> int:
        return len(self.records)

    def answer(self, query) -> int:
        if self.space is None:
            raise RuntimeError("responder not started")
        reply, was_lie = self._reply(query)
        self.budget.record(bool(was_lie))
        self.records.append(ReplyRecord(len(self.records) + 1, query, reply, was_lie))
        return reply

    def answer_many(self, query, k: int) -> list[int]:
        return [self.answer(query) for _ in range(k)]

    def _truthful(self, query) -> tuple:
        return self.space.truthful_replies(query, self.target)

    def _reply(self, query) -> tuple[int, bool | None]:
        raise NotImplementedError


class TruthfulResponder(Responder):
    """Always truthful; shortest-path ties are broken uniformly at random."""

    def _reply(self, query):
        options = self._truthful(query)
        if len(options) == 1:
            return options[0], False
        return options[self.rng.randrange(len(options))], False


class IIDResponder(Responder):
    """Each reply is independently wrong with probability ``p``.

    A wrong reply is uniform over the legal replies outside the truthful
    set.  Exactly two random numbers are drawn per reply so that the
    stream stays aligned across queries with different reply sets.
    """

    def __init__(self, target: int, p: float, seed: int | None = 0):
        super().__init__(target, seed, Budget.iid(p))
        self.p = p

    def _reply(self, query):
        coin, pick = self.rng.random(), self.rng.random()
        truthful = self._truthful(query)
        if coin < self.p:
            wrong = [r for r in self.space.replies(query) if r not in truthful]
            if wrong:
                return wrong[int(pick * len(wrong))], True
        return truthful[int(pick * len(truthful))], False


class GreedyAdversary(Responder):
    """Budgeted adversary that keeps the questioner's total weight high.

    Among the replies that keep a consistent target within budget it picks
    the one maximizing the total weight after the update, computed on a
    shadow copy of the lie counters with the questioner's multiplier.
    Ties prefer a no-answer, then the smallest reply id.

    Parameters
    ----------
    budget : Budget
        ``fixed``, ``linear`` or ``prefix``.
    target : int, optional
        With a target, only that vertex must stay within budget.  Without
        one every vertex whose lie history is still legal stays alive
        (finite graphs only).
    gamma : float, optional
        Multiplier of the shadow state; overridden by :meth:`start` when the
        questioner announces its own.
    lookahead : bool
        Target-free mode with a fixed budget on graphs small enough for the
        exhaustive oracle only (otherwise ignored): rank replies by the exact
        game value of the resulting state first and by weight second.  Every
        search then needs at least the minimax number of queries.
    """

    def __init__(self, budget: Budget, target: int | None = None, gamma=None,
                 seed: int | None = 0, lookahead: bool = False):
        if budget.kind == "iid":
            raise ValueError("an adversary needs a fixed, linear or prefix budget")
        super().__init__(target, seed, budget)
        self.targeted = target is not None
        self.gamma = gamma
        self.shadow = None
        self.alive = None
        self.lookahead = lookahead
        self._games = None

    def start(self, space, gamma=None):
        super().start(space, gamma)
        g = gamma if gamma is not None else (self.gamma if self.gamma is not None else 2.0)
        self.shadow = space.shadow(g)
        if not self.targeted:
            if not isinstance(space, GraphSpace):
                raise ValueError("target-free adversaries need a finite graph")
            self.alive = np.ones(space.n, dtype=bool)
            from .oracle import MAX_L, MAX_N
            if (self.lookahead and self.budget.kind == "fixed"
                    and space.n <= MAX_N and self.budget.L <= MAX_L):
                self._games = {}
        return self

    def _game_value(self, query, mask) -> float:
        from .oracle import GameValue
        game = self._games.get(query.kind)
        if game is None:
            game = self._games[query.kind] = GameValue(self.space.graph, self.budget.L,
                                                       query.kind)
        return game(self.shadow.lies + ~mask)

    def _candidates(self, query):
        yes = query.vertex if query.kind == "vertex" else None
        return sorted(self.space.replies(query), key=lambda r: (r == yes, r))

    def _reply(self, query):
        self.shadow.begin(query)
        lim = self.budget.limit(self.budget.round + 1)
        truthful = self._truthful(query) if self.targeted else ()
        best = None
        for r in self._candidates(query):
            mask = self.shadow.outcome(query, r)
            if self.targeted:
                lie = r not in truthful
                if self.budget.lies_so_far + lie > lim:
                    continue
            else:
                lie = None
                if not np.any(self.alive & (self.shadow.lies + ~mask <= lim)):
                    continue
            s = self.shadow.score(query, r, mask)
            v = self._game_value(query, mask) if self._games is not None else 0
            if (best is None or v > best[0]
                    or (v == best[0] and s > best[1] + _SCORE_TOL * abs(best[1]))):
                best = (v, s, r, lie, mask)
        if best is None:
            raise BudgetViolation("no reply keeps a candidate within budget")
        _, _, r, lie, mask = best
        self.shadow.update(query, r, mask)
        if not self.targeted:
            self.alive &= self.shadow.lies <= lim
        return r, lie

    def survivors(self) -> np.ndarray:
        """Vertices still consistent with the budget (target-free mode)."""
        if self.targeted:
            return np.array([self.target])
        return np.flatnonzero(self.alive)


class ReplayResponder(Responder):
    """Replays a fixed reply sequence; raises when a query does not match."""

    targeted = False

    def __init__(self, records: Iterable[ReplyRecord]):
        super().__init__(None, None)
        self.script = list(records)

    def _reply(self, query):
        i = len(self.records)
        if i >= len(self.script):
            raise IndexError("replay transcript exhausted")
        rec = self.script[i]
        if rec.query != query:
            raise AssertionError(f"round {i + 1}: expected query {rec.query}, got {query}")
        return rec.reply, rec.was_lie


# -- one-shot helpers ---------------------------------------------------------

def truthful_reply(g: Graph, d: DistanceMatrix, target: int, query, seed=0) -> int:
    space = GraphSpace(g, d)
    options = space.truthful_replies(query, target)
    return options[random.Random(seed).randrange(len(options))] if len(options) > 1 else options[0]


def iid_reply(g: Graph, d: DistanceMatrix, target: int, query, p: float, seed=0) -> int:
    resp = IIDResponder(target, p, seed).start(GraphSpace(g, d))
    return resp.answer(query)


def adversary_reply(g: Graph, d: DistanceMatrix, state: LieState, budget: Budget, query) -> int:
    """Greedy target-free reply given the questioner's current lie counters.

    Vertices whose counter already exceeds the budget count as dead.
    """
    space = GraphSpace(g, d)
    adv = GreedyAdversary(replace(budget), gamma=state.gamma)
    adv.start(space, state.gamma)
    adv.shadow.state = state.copy()
    adv.alive = state.lies <= budget.limit(budget.round)
    reply, _ = adv._reply(query)
    return reply


# -- audits --------------------------------------------------------------------

def annotate_lies(records: Sequence[ReplyRecord], space, target: int) -> list[ReplyRecord]:
    """Recompute ``was_lie`` against ``target`` (e.g. an adversary's survivor)."""
    return [replace(r, was_lie=r.reply not in space.truthful_replies(r.query, target))
            for r in records]


def check_budget(records: Sequence[ReplyRecord], budget: Budget) -> tuple[bool, str]:
    """Check the budget invariant of ``budget.kind`` round by round.

    ``records`` must carry lie flags.  Returns ``(ok, message)``.
    """
    lies = 0
    b = budget.fresh()
    b.declared = budget.declared
    for rec in records:
        if rec.was_lie is None:
            raise ValueError("records need lie flags; use annotate_lies first")
        lies += rec.was_lie
        lim = b.limit(rec.round)
        if b.kind == "prefix" and lies > lim:
            return False, f"{lies} lies within the first {rec.round} replies (limit {lim})"
    if b.kind in ("fixed", "linear") and lies > b.limit(len(records)):
        return False, f"{lies} lies in total (limit {b.limit(len(records))})"
    return True, f"{lies} lies"
