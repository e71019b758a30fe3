"""Entropy helpers, closed-form query bounds and wrapper parameters.

Every wrapper strategy derives its multiplier, lie budget and declared
length here, so the strategy code and the tests read the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

__all__ = [
    "entropy",
    "entropy_gap",
    "odd_ceil",
    "vertex_fixed_bound",
    "edge_fixed_bound",
    "edge_errorless_bound",
    "unbounded_fixed_bound",
    "StrategyParams",
    "vertex_linear_params",
    "edge_linear_params",
    "vertex_prob_params",
    "boost_repetitions",
    "edge_prob_params",
    "pruning_params",
    "prefix_safe_repeats",
]


def entropy(p: float) -> float:
    """Binary entropy in bits, with ``H(0) = H(1) = 0``."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"probability out of range: {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def entropy_gap(x: float) -> float:
    """``1 - H((1 - x) / 2)`` for ``|x| <= 1``."""
    if not -1.0 <= x <= 1.0:
        raise ValueError(f"argument out of range: {x}")
    return 1.0 - entropy(0.5 * (1.0 - x))


def odd_ceil(x: float) -> int:
    k = max(1, math.ceil(x))
    return k if k % 2 else k + 1


def vertex_fixed_bound(n: int, lies: int, gamma: float) -> float:
    """Rounds needed by the vertex-median search with at most ``lies`` lies."""
    if n <= 1:
        return 0.0
    if math.isinf(gamma):
        return math.log2(n) if lies == 0 else math.inf
    return (math.log2(n) + lies * math.log2(gamma)) / math.log2(2 * gamma / (gamma + 1))


def edge_fixed_bound(n: int, lies: int, gamma: float, max_degree: int) -> float:
    if n <= 1:
        return 0.0
    if math.isinf(gamma):
        if lies:
            return math.inf
        return math.log(n) / math.log1p(1.0 / max_degree)
    step = math.log1p((gamma - 1) / (gamma * max_degree + 1))
    return (math.log(n) + lies * math.log(gamma)) / step


def edge_errorless_bound(n: int, max_degree: int) -> float:
    if n <= 1:
        return 0.0
    if max_degree == 1:
        return 1.0
    return math.log(n / max_degree) / math.log(max_degree / (max_degree - 1)) + max_degree


def unbounded_fixed_bound(target: int, lies: int, gamma: float, mode: str) -> float:
    num = math.log(math.pi ** 2 / 6) + 2 * math.log(target) + lies * math.log(gamma)
    if mode == "ternary":
        return num / math.log(2 * gamma / (gamma + 1))
    if mode == "binary":
        return num / math.log(3 * gamma / (2 * gamma + 1))
    raise ValueError(f"mode must be 'ternary' or 'binary', got {mode!r}")


@dataclass
class StrategyParams:
    """Derived parameters of a wrapper run (serialized into reports)."""

    gamma: float
    lie_budget: int
    length: float
    rate: float = 0.0
    noise: float | None = None
    confidence: float | None = None
    epsilon: float | None = None
    repeats: int = 1

    def as_dict(self) -> dict:
        out = asdict(self)
        if math.isinf(self.gamma):
            out["gamma"] = "inf"
        return out


def _gamma_for_rate(r: float) -> float:
    return math.inf if r == 0 else (1 - r) / r


def vertex_linear_params(n: int, r: float) -> StrategyParams:
    """Declared length ``ceil(log2 n / (1 - H(r)))``, budget ``floor(r Q)``."""
    if not 0.0 <= r < 0.5:
        raise ValueError("linearly bounded search needs 0 <= r < 1/2")
    q = math.ceil(math.log2(n) / (1 - entropy(r))) if n > 1 else 0
    return StrategyParams(gamma=_gamma_for_rate(r), lie_budget=math.floor(r * q),
                          length=q, rate=r)


def edge_linear_params(n: int, max_degree: int, epsilon: float) -> StrategyParams:
    """Parameters for edge search at rate ``(1 - eps) / (Delta + 1)``.

    ``length`` is the real-valued ``Q_min``; the lie budget is
    ``floor(r * Q_min)``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    dlt = max(max_degree, 1)
    r = (1 - epsilon) / (dlt + 1)
    if epsilon == 1.0:
        gamma = math.inf
        qmin = math.log(n) / math.log1p(1.0 / dlt) if n > 1 else 0.0
    else:
        gamma = 1 + (dlt + 1) / dlt * epsilon / (1 - epsilon)
        step = math.log1p((gamma - 1) / (gamma * dlt + 1)) - r * math.log(gamma)
        qmin = math.log(n) / step if n > 1 else 0.0
    return StrategyParams(gamma=gamma, lie_budget=math.floor(qmin * r), length=qmin,
                          rate=r, epsilon=epsilon)


def vertex_prob_params(n: int, p: float, delta: float) -> StrategyParams:
    """Rate ``(1 - eps0) / 2`` and the fixed query count for i.i.d. noise ``p``.

    ``eps0 = eps / (1 + sqrt(2 ln(1/delta) / ln n))``; the length is the
    linear-wrapper length, lower-bounded by ``ceil(eps0**-2 ln n)``.  With
    ``p = 0`` the search is error-less and runs ``ceil(log2 n)`` queries.
    """
    if not 0.0 <= p < 0.5:
        raise ValueError("noise must satisfy 0 <= p < 1/2")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    eps = 1 - 2 * p
    if n <= 1:
        return StrategyParams(gamma=math.inf, lie_budget=0, length=0, noise=p,
                              confidence=delta, epsilon=eps)
    if p == 0:
        return StrategyParams(gamma=math.inf, lie_budget=0, length=math.ceil(math.log2(n)),
                              noise=p, confidence=delta, epsilon=eps)
    eps0 = eps / (1 + math.sqrt(2 * math.log(1 / delta) / math.log(n)))
    r = 0.5 * (1 - eps0)
    base = vertex_linear_params(n, r)
    q = max(int(base.length), math.ceil(math.log(n) / eps0 ** 2))
    return StrategyParams(gamma=base.gamma, lie_budget=math.floor(r * q), length=q,
                          rate=r, noise=p, confidence=delta, epsilon=eps0)


def boost_repetitions(epsilon: float, max_degree: int) -> int:
    """Smallest odd ``P`` with ``exp(-P eps**2 / 2) <= 1 / (2 Delta + 2)``.

    Returns 1 when the raw error ``(1 - eps) / 2`` is already at most
    ``1 / (2 (Delta + 1))``.
    """
    if (1 - epsilon) / 2 <= 1 / (2 * (max_degree + 1)):
        return 1
    return odd_ceil(2 * epsilon ** -2 * math.log(2 * max_degree + 2))


def edge_prob_params(n: int, max_degree: int, epsilon: float, delta: float) -> StrategyParams:
    """Majority boosting to error ``1/(2(Delta+1))`` then the linear edge wrapper.

    The boosted error corresponds to ``eps0 = 1/2`` at rate scale
    ``1/(Delta+1)``; ``eps1 = eps0 / (1 + sqrt(1.5 (Delta+1)/Delta ln(1/delta) / ln n))``
    and the logical length is ``ceil(2 eps1**-2 Delta ln n)``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    dlt = max(max_degree, 1)
    reps = boost_repetitions(epsilon, dlt)
    if n <= 1:
        return StrategyParams(gamma=math.inf, lie_budget=0, length=0, noise=(1 - epsilon) / 2,
                              confidence=delta, epsilon=epsilon, repeats=reps)
    eps0 = 0.5
    eps1 = eps0 / (1 + math.sqrt(1.5 * (dlt + 1) / dlt * math.log(1 / delta) / math.log(n)))
    base = edge_linear_params(n, dlt, eps1)
    q = max(math.ceil(2 * eps1 ** -2 * dlt * math.log(n)), math.ceil(base.length))
    return StrategyParams(gamma=base.gamma, lie_budget=math.floor(base.rate * q), length=q,
                          rate=base.rate, noise=(1 - epsilon) / 2, confidence=delta,
                          epsilon=eps1, repeats=reps)


@dataclass
class PruningParams:
    rate: float
    threshold: float
    gamma: float
    q0: float
    slack: float

    @property
    def cap(self) -> float:
        return self.slack * self.q0


def pruning_params(n: int, max_degree: int, epsilon: float, slack: float = 2.0) -> PruningParams:
    """``H = 2 Delta / eps``, ``Gamma = 1 + Delta eps / (2 (Delta - 1))``, rate ``(1 - eps)/Delta``.

    ``q0 = 8 (Delta - 1) eps**-2 ln n`` is the leading term of the round
    budget; runs are checked against ``slack * q0``.
    """
    if not 0.0 < epsilon <= 1.0:
        raise ValueError("epsilon must lie in (0, 1]")
    if max_degree < 2:
        raise ValueError("pruning needs max degree >= 2")
    dlt = max_degree
    return PruningParams(
        rate=(1 - epsilon) / dlt,
        threshold=2 * dlt / epsilon,
        gamma=1 + dlt * epsilon / (2 * (dlt - 1)),
        q0=8 * (dlt - 1) * epsilon ** -2 * math.log(max(n, 2)),
        slack=slack,
    )


def prefix_safe_repeats(elapsed: int, rate: float, floor_k: int = 1) -> int:
    """Smallest odd ``k >= floor_k`` whose majority survives any prefix-legal liar.

    ``k`` repetitions in rounds ``t+1 .. t+k`` see at most ``r (t + k)``
    lies, fewer than ``k / 2`` once ``k > 2 r t / (1 - 2 r)``.
    """
    if not 0.0 <= rate < 0.5:
        raise ValueError("rate must satisfy 0 <= r < 1/2")
    k = odd_ceil(floor_k)
    while math.floor(rate * (elapsed + k) + 1e-9) >= k / 2:
        k += 2
    return k
