"""Experiment orchestration, bound verification and the graph corpus.

Every trial draws its seed from ``SeedSequence(master, spawn_key=(i,))`` so
results do not depend on how trials are scheduled.  Bounds are recomputed
here from formula strings, independently of the strategy code, and each
report row carries the formula and the substituted values.
"""

from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from . import strategies as st
from . import unbounded as ub
from .bounds import entropy
from .graph import Graph, GraphSpace, generate_graph, graph_from_json, parse_graph
from .responders import (
    Budget,
    BudgetViolation,
    GreedyAdversary,
    IIDResponder,
    TruthfulResponder,
    annotate_lies,
    check_budget,
)

__all__ = [
    "SCHEMA_VERSION",
    "TRIAL_COLUMNS",
    "FORMULAS",
    "STRATEGIES",
    "ExperimentConfig",
    "BoundReport",
    "trial_seed",
    "wilson_interval",
    "evaluate_bound",
    "resolve_graph",
    "build_corpus",
    "connected_graphs",
    "run_trial",
    "search_once",
    "load_trials",
    "run_experiment",
    "verify_bounds",
    "write_report",
]

SCHEMA_VERSION = 1
TRIAL_COLUMNS = ("schema_version", "config", "trial", "seed", "target", "found", "success",
                 "rounds", "logical_rounds", "budget_ok", "error", "n", "max_degree",
                 "gamma", "lies", "rate", "noise", "delta", "epsilon", "mode")


# -- formulas -----------------------------------------------------------------

def _vertex_prob_q(n, p, delta):
    if n <= 1:
        return 0
    if p == 0:
        return math.ceil(math.log2(n))
    e0 = (1 - 2 * p) / (1 + math.sqrt(2 * math.log(1 / delta) / math.log(n)))
    r = (1 - e0) / 2
    return max(math.ceil(math.log2(n) / (1 - entropy(r))), math.ceil(e0 ** -2 * math.log(n)))


_NS = {
    "log": math.log, "log2": math.log2, "sqrt": math.sqrt, "ceil": math.ceil,
    "floor": math.floor, "pi": math.pi, "inf": math.inf, "max": max, "min": min,
    "H": entropy, "vertex_prob_q": _vertex_prob_q,
}

# theorem id -> (kind, variables, formula, special cases [(condition, formula)])
FORMULAS: dict[str, dict] = {
    "vertex-fixed": {
        "kind": "adversarial",
        "vars": ("n", "L", "G"),
        "formula": "ceil((log2(n) + L*log2(G)) / log2(2*G/(G+1)))",
        "special": [("n <= 1", "0"), ("G == inf and L == 0", "ceil(log2(n))")],
    },
    "edge-fixed": {
        "kind": "adversarial",
        "vars": ("n", "L", "G", "D"),
        "formula": "ceil((log(n) + L*log(G)) / log(1 + (G-1)/(G*D+1)))",
        "special": [("n <= 1", "0"), ("G == inf and L == 0", "ceil(log(n) / log(1 + 1/D))")],
    },
    "edge-errorless": {
        "kind": "adversarial",
        "vars": ("n", "D"),
        "formula": "ceil(log(n/D) / log(D/(D-1))) + D",
        "special": [("n <= 1", "0"), ("D == 1", "n - 1")],
    },
    "vertex-linear": {
        "kind": "adversarial",
        "vars": ("n", "r"),
        "formula": "ceil(log2(n) / (1 - H(r)))",
        "special": [("n <= 1", "0")],
    },
    "edge-linear": {
        "kind": "adversarial",
        "vars": ("n", "eps", "D"),
        "formula": "ceil(2 * eps**-2 * D * log(n))",
        "special": [("n <= 1", "0")],
    },
    "vertex-prob": {
        "kind": "probabilistic",
        "vars": ("n", "p", "delta"),
        "formula": "vertex_prob_q(n, p, delta)",
        "special": [],
    },
    "edge-prob": {
        "kind": "probabilistic",
        "vars": ("n", "eps", "delta", "D"),
        "formula": "eps**-2 * (log(n) + log(1/delta))",
        "special": [],
    },
    "pruning": {
        "kind": "adversarial",
        "vars": ("n", "eps", "D", "slack"),
        "formula": "slack * 8 * (D-1) * eps**-2 * log(n)",
        "special": [("D <= 1", "0")],
    },
    "prefix": {
        "kind": "shape",
        "vars": ("n", "eps"),
        "formula": "eps**-4 * log(n)",
        "special": [],
    },
    "unbounded-fixed-ternary": {
        "kind": "adversarial",
        "vars": ("N", "L", "G"),
        "formula": "(log(pi**2/6) + 2*log(N) + L*log(G)) / log(2*G/(G+1))",
        "special": [],
    },
    "unbounded-fixed-binary": {
        "kind": "adversarial",
        "vars": ("N", "L", "G"),
        "formula": "(log(pi**2/6) + 2*log(N) + L*log(G)) / log(3*G/(2*G+1))",
        "special": [],
    },
    "unbounded-linear": {
        "kind": "shape",
        "vars": ("N", "eps"),
        "formula": "2 * eps**-2 * 2 * log(N)",
        "special": [],
    },
    "unbounded-prob": {
        "kind": "probabilistic",
        "vars": ("N", "eps", "delta"),
        "formula": "eps**-2 * (log(N) + log(1/delta))",
        "special": [],
    },
    "unbounded-prefix": {
        "kind": "shape",
        "vars": ("N", "eps"),
        "formula": "eps**-4 * log(N)",
        "special": [],
    },
}


def evaluate_bound(theorem: str, **values) -> tuple[float, str, dict]:
    """Evaluate a registered bound; returns ``(value, formula, substituted values)``."""
    if theorem not in FORMULAS:
        raise ValueError(f"unknown theorem id {theorem!r}")
    spec = FORMULAS[theorem]
    ns = dict(_NS)
    used = {k: values[k] for k in spec["vars"]}
    ns.update(used)
    formula = spec["formula"]
    for cond, alt in spec["special"]:
        if eval(cond, {"__builtins__": {}}, ns):
            formula = alt
            break
    return float(eval(formula, {"__builtins__": {}}, ns)), formula, used


# -- strategies -----------------------------------------------------------------

@dataclass(frozen=True)
class StrategySpec:
    theorem: str
    domain: str  # "graph" or "line"
    budget: str  # budget kind an adversary uses


STRATEGIES: dict[str, StrategySpec] = {
    "vertex-fixed": StrategySpec("vertex-fixed", "graph", "fixed"),
    "edge-fixed": StrategySpec("edge-fixed", "graph", "fixed"),
    "edge-errorless": StrategySpec("edge-errorless", "graph", "fixed"),
    "vertex-linear": StrategySpec("vertex-linear", "graph", "linear"),
    "edge-linear": StrategySpec("edge-linear", "graph", "linear"),
    "vertex-prob": StrategySpec("vertex-prob", "graph", "iid"),
    "edge-prob": StrategySpec("edge-prob", "graph", "iid"),
    "pruning": StrategySpec("pruning", "graph", "prefix"),
    "prefix": StrategySpec("prefix", "graph", "prefix"),
    "unbounded-fixed": StrategySpec("unbounded-fixed", "line", "fixed"),
    "unbounded-linear": StrategySpec("unbounded-linear", "line", "prefix"),
    "unbounded-prob": StrategySpec("unbounded-prob", "line", "iid"),
    "unbounded-prefix": StrategySpec("unbounded-prefix", "line", "prefix"),
}


def _theorem_for(strategy: str, params: dict) -> str:
    th = STRATEGIES[strategy].theorem
    if th == "unbounded-fixed":
        return f"unbounded-fixed-{params.get('mode') or 'ternary'}"
    return th


def _rate(strategy: str, params: dict, g: Graph | None) -> float:
    """Lie rate an adversary should use for ``strategy``."""
    if params.get("rate") is not None:
        return params["rate"]
    eps = params.get("epsilon")
    if eps is None:
        return 0.0
    if strategy == "edge-linear":
        return (1 - eps) / (g.max_degree + 1)
    if strategy in ("pruning", "prefix"):
        return (1 - eps) / max(g.max_degree, 2)
    if strategy == "unbounded-prefix":
        return (1 - eps) / 2
    if strategy == "unbounded-linear":
        return (1 - eps) / (2 if params.get("mode", "ternary") == "ternary" else 3)
    return 0.0


# -- config and report -------------------------------------------------------------

@dataclass
class ExperimentConfig:
    """One experiment: a strategy on a graph against a responder, over a parameter grid.

    Parameters given as lists in ``params`` span a grid; ``targets`` is
    ``"all"``, ``"random"`` or an explicit list, cycled over the trials.
    """

    strategy: str
    graph: str | None = None
    responder: str = "truthful"
    params: dict = field(default_factory=dict)
    trials: int = 1
    seed: int = 0
    targets: Any = "all"
    out: str | None = None
    workers: int = 1

    def validate(self) -> None:
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {sorted(STRATEGIES)}")
        if self.responder not in ("truthful", "iid", "adversary", "adversary-targeted"):
            raise ValueError(f"unknown responder {self.responder!r}")
        if STRATEGIES[self.strategy].domain == "graph" and not self.graph:
            raise ValueError("graph strategies need a graph spec")
        if self.trials < 0:
            raise ValueError("trials must be >= 0")

    def grid(self) -> list[dict]:
        keys = sorted(self.params)
        vals = [v if isinstance(v, (list, tuple)) else [v] for v in (self.params[k] for k in keys)]
        return [dict(zip(keys, combo)) for combo in itertools.product(*vals)]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class BoundReport:
    rows: list[dict]
    trials: list[dict]
    config: dict

    @property
    def passed(self) -> bool:
        return all(r["pass"] for r in self.rows)

    def to_json(self) -> str:
        return json.dumps({"schema_version": SCHEMA_VERSION, "config": self.config,
                           "rows": self.rows, "passed": self.passed}, indent=2, default=str)


def trial_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(index,)).generate_state(1, np.uint64)[0])


def wilson_interval(failures: int, trials: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials == 0:
        return 0.0, 1.0
    ph = failures / trials
    den = 1 + z * z / trials
    mid = (ph + z * z / (2 * trials)) / den
    half = z * math.sqrt(ph * (1 - ph) / trials + z * z / (4 * trials * trials)) / den
    lo = 0.0 if failures == 0 else max(0.0, mid - half)
    hi = 1.0 if failures == trials else min(1.0, mid + half)
    return lo, hi


# -- graphs ------------------------------------------------------------------------

def resolve_graph(spec: str) -> Graph:
    """A file path (edge list or ``.json``) or ``kind:key=value,...``."""
    if os.path.exists(spec):
        with open(spec) as fh:
            text = fh.read()
        return graph_from_json(text) if spec.endswith(".json") else parse_graph(text)
    kind, _, rest = spec.partition(":")
    kw: dict[str, Any] = {}
    for item in filter(None, rest.split(",")):
        key, _, val = item.partition("=")
        key = key.strip().replace("-", "_")
        if key == "weights":
            lo, hi = val.split("..")
            kw[key] = (int(lo), int(hi))
        elif key == "p":
            kw[key] = float(val)
        else:
            kw[key] = int(val)
    return generate_graph(kind, **kw)


def build_corpus(sizes: Sequence[int] = (2, 3, 4, 5, 8, 13, 21, 34, 64), seed: int = 0,
                 weighted: bool = False) -> list[tuple[str, Graph]]:
    """Paths, cycles, stars, random trees, grids and random connected graphs."""
    out = []
    for n in sizes:
        w = (1, 4) if weighted else None
        out.append((f"path:n={n}", generate_graph("path", n=n, weights=w, seed=seed)))
        if n >= 3:
            out.append((f"cycle:n={n}", generate_graph("cycle", n=n, weights=w, seed=seed)))
        out.append((f"star:leaves={n - 1}", generate_graph("star", leaves=n - 1, weights=w, seed=seed)))
        out.append((f"random-tree:n={n},seed={seed + n}",
                    generate_graph("random-tree", n=n, seed=seed + n, weights=w)))
        rows = max(1, int(math.isqrt(n)))
        if rows > 1 and n // rows > 1:
            out.append((f"grid:rows={rows},cols={n // rows}",
                        generate_graph("grid", rows=rows, cols=n // rows, weights=w, seed=seed)))
        out.append((f"random-connected:n={n},p=0.15,seed={seed + n}",
                    generate_graph("random-connected", n=n, p=0.15, seed=seed + n, weights=w)))
    return out


def connected_graphs(n: int) -> list[Graph]:
    """All connected graphs on ``n`` vertices up to isomorphism (small ``n`` only)."""
    if n == 1:
        return [Graph(1, [])]
    pairs = list(itertools.combinations(range(n), 2))
    perms = list(itertools.permutations(range(n)))
    seen = set()
    out = []
    for mask in range(1, 1 << len(pairs)):
        edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
        if len(edges) < n - 1:
            continue
        canon = min(tuple(sorted(tuple(sorted((p[a], p[b]))) for a, b in edges)) for p in perms)
        if canon in seen:
            continue
        seen.add(canon)
        try:
            out.append(Graph(n, list(canon)))
        except ValueError:
            continue
    return out


# -- trials -----------------------------------------------------------------------

def _make_responder(kind, strategy, params, g, target, seed):
    spec = STRATEGIES[strategy]
    if kind == "truthful":
        return TruthfulResponder(target, seed)
    if kind == "iid":
        p = params.get("noise")
        if p is None:
            eps = params.get("epsilon")
            p = (1 - eps) / 2 if eps is not None else 0.0
        return IIDResponder(target, p, seed)
    bkind = spec.budget if spec.budget != "iid" else "fixed"
    if bkind == "fixed":
        budget = Budget.fixed(int(params.get("lies") or 0))
    elif bkind == "linear":
        budget = Budget.linear(_rate(strategy, params, g))
    else:
        budget = Budget.prefix(_rate(strategy, params, g))
    if kind == "adversary-targeted" or spec.domain == "line":
        return GreedyAdversary(budget, target=target, gamma=params.get("gamma"), seed=seed)
    return GreedyAdversary(budget, gamma=params.get("gamma"), seed=seed)


def _dispatch(strategy, g, params, resp, trace=False):
    G = params.get("gamma")
    L = int(params.get("lies") or 0)
    eps = params.get("epsilon")
    mode = params.get("mode") or "ternary"
    if strategy == "vertex-fixed":
        return st.run_vertex_fixed(g, L, G, resp, trace=trace)
    if strategy == "edge-fixed":
        return st.run_edge_fixed(g, L, G, resp, trace=trace)
    if strategy == "edge-errorless":
        return st.run_edge_errorless(g, resp, trace=trace)
    if strategy == "vertex-linear":
        return st.run_vertex_linear(g, params["rate"], resp, trace=trace)
    if strategy == "edge-linear":
        return st.run_edge_linear(g, eps, resp, trace=trace)
    if strategy == "vertex-prob":
        return st.run_vertex_prob(g, params["noise"], params["delta"], resp, trace=trace)
    if strategy == "edge-prob":
        return st.run_edge_prob(g, eps, params["delta"], resp, trace=trace)
    if strategy == "pruning":
        pr = st.run_pruning(g, eps, resp, slack=params.get("slack", 2.0))
        found = min(pr.candidates) if len(pr.candidates) == 1 else None
        return st.SearchResult(found=found, rounds=pr.rounds, transcript=pr.transcript,
                               bound=math.nan, info={"C": sorted(pr.C), "D": sorted(pr.D),
                                                     "max_D": pr.max_D, "exceeded": pr.exceeded})
    if strategy == "prefix":
        return st.run_prefix_bounded(g, eps, resp, slack=params.get("slack", 2.0))
    if strategy == "unbounded-fixed":
        return ub.run_unbounded_fixed(mode, L, G, resp, trace=trace)
    if strategy == "unbounded-linear":
        return ub.run_unbounded_linear(mode, _rate(strategy, params, None), resp, trace=trace)
    if strategy == "unbounded-prob":
        return ub.run_unbounded_prob(params["noise"], params["delta"], resp)
    if strategy == "unbounded-prefix":
        return ub.run_unbounded_prefix(eps, resp)
    raise ValueError(f"unknown strategy {strategy!r}")


def _normalize(params: dict) -> dict:
    out = dict(params)
    g = out.get("gamma")
    if isinstance(g, str):
        out["gamma"] = math.inf if g.lower() in ("inf", "infinity") else float(g)
    return out


def search_once(strategy: str, g: Graph | None, responder: str, params: dict, target,
                seed: int, trace: bool = False):
    """Run a single search; returns ``(result, responder)``.  Strategy errors propagate."""
    params = _normalize(params)
    resp = _make_responder(responder, strategy, params, g, target, seed)
    return _dispatch(strategy, g, params, resp, trace), resp


def run_trial(strategy: str, g: Graph | None, responder: str, params: dict, target,
              seed: int) -> dict:
    """One seeded run; strategy failures are recorded in ``error``."""
    params = _normalize(params)
    resp = _make_responder(responder, strategy, params, g, target, seed)
    row = {"target": target, "seed": seed, "found": None, "success": False, "rounds": None,
           "logical_rounds": None, "budget_ok": True, "error": ""}
    try:
        res = _dispatch(strategy, g, params, resp)
    except (st.ResponderContractError, st.SearchAborted, st.FinisherExhausted,
            BudgetViolation) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
        row["rounds"] = getattr(exc, "rounds", None) or resp.rounds
        return row
    row.update(found=res.found, rounds=res.rounds, logical_rounds=res.logical_rounds)
    space = resp.space if resp.space is not None else (GraphSpace(g) if g is not None else None)
    if resp.targeted:
        truth = target
        row["success"] = res.found == target
    else:
        survivors = resp.survivors()
        truth = res.found if res.found in survivors else (int(survivors[0]) if len(survivors) else None)
        row["success"] = res.found is not None and res.found in survivors
        row["target"] = truth
    if strategy == "pruning":
        row["success"] = truth in set(res.info["C"]) | set(res.info["D"])
        row["max_D"] = res.info["max_D"]
        row["exceeded"] = res.info["exceeded"]
    if responder != "iid" and truth is not None and space is not None:
        recs = annotate_lies(resp.records, space, truth)
        ok, msg = check_budget(recs, resp.budget)
        row["budget_ok"] = ok
        if not ok:
            row["error"] = f"budget violation: {msg}"
    return row


def _targets(cfg: ExperimentConfig, g: Graph | None, count: int, seeds: list[int]):
    if cfg.responder == "adversary" and STRATEGIES[cfg.strategy].domain == "graph":
        return [None] * count
    t = cfg.targets
    if isinstance(t, (list, tuple)):
        return [t[i % len(t)] for i in range(count)]
    if t == "all" and g is not None:
        return [i % g.n for i in range(count)]
    if g is None:
        raise ValueError("unbounded experiments need explicit targets")
    return [int(np.random.default_rng(s).integers(g.n)) for s in seeds]


def _trial_job(args):
    return run_trial(*args)


def _row_bound(theorem: str, row: dict, g: Graph | None) -> tuple[float, str, dict]:
    vals = {
        "n": row.get("n"), "D": row.get("max_degree"), "L": row.get("lies") or 0,
        "G": row.get("gamma") if row.get("gamma") is not None else math.inf,
        "r": row.get("rate") or 0.0, "p": row.get("noise") or 0.0,
        "delta": row.get("delta"), "eps": row.get("epsilon"),
        "slack": row.get("slack", 2.0), "N": row.get("target") or row.get("found"),
    }
    if isinstance(vals["G"], str):
        vals["G"] = math.inf if vals["G"] in ("inf", "infinity") else float(vals["G"])
    if theorem in ("unbounded-prob",) and vals["p"] is not None:
        vals["eps"] = 1 - 2 * vals["p"]
    if theorem == "unbounded-linear" and vals["eps"] is None:
        vals["eps"] = 1 - 2 * vals["r"] if row.get("mode", "ternary") == "ternary" else 1 - 3 * vals["r"]
    return evaluate_bound(theorem, **vals)


def run_experiment(cfg: ExperimentConfig) -> BoundReport:
    """Run every grid point for ``cfg.trials`` trials and aggregate a report.

    Writes ``trials.csv`` and ``report.json`` under ``cfg.out`` when set.
    """
    cfg.validate()
    spec = STRATEGIES[cfg.strategy]
    g = resolve_graph(cfg.graph) if spec.domain == "graph" else None
    trials: list[dict] = []
    rows: list[dict] = []
    for ci, params in enumerate(cfg.grid()):
        params = _normalize(params)
        seeds = [trial_seed(cfg.seed, ci * 1_000_003 + i) for i in range(cfg.trials)]
        targets = _targets(cfg, g, cfg.trials, seeds)
        jobs = [(cfg.strategy, g, cfg.responder, params, t, s) for t, s in zip(targets, seeds)]
        if cfg.workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(cfg.workers) as ex:
                results = list(ex.map(_trial_job, jobs, chunksize=16))
        else:
            results = [_trial_job(j) for j in jobs]
        for i, res in enumerate(results):
            res.update(schema_version=SCHEMA_VERSION, config=ci, trial=i,
                       n=g.n if g is not None else None,
                       max_degree=g.max_degree if g is not None else 2,
                       **{k: params.get(k) for k in ("gamma", "lies", "rate", "noise",
                                                     "delta", "epsilon", "mode")})
            if "slack" in params:
                res["slack"] = params["slack"]
        trials.extend(results)
        if results:
            rows.append(_aggregate(cfg.strategy, params, results, g))
    report = BoundReport(rows=rows, trials=trials, config=cfg.to_dict())
    if cfg.out:
        write_report(report, cfg.out)
    return report


def _aggregate(strategy, params, results, g) -> dict:
    theorem = _theorem_for(strategy, params)
    kind = FORMULAS[theorem]["kind"]
    valid = [r for r in results if r["budget_ok"]]
    excluded = [r for r in results if not r["budget_ok"]]
    rounds = [r["rounds"] for r in valid if r["rounds"] is not None]
    failures = [r for r in valid if not r["success"]]
    row = {"strategy": strategy, "theorem": theorem, "kind": kind, "params": params,
           "trials": len(results), "excluded": len(excluded),
           "max_rounds": max(rounds) if rounds else None,
           "mean_rounds": float(np.mean(rounds)) if rounds else None,
           "failures": len(failures), "failure_rate": len(failures) / len(valid) if valid else 0.0}
    lo, hi = wilson_interval(len(failures), len(valid))
    row["wilson_low"], row["wilson_high"] = lo, hi
    # per-trial bounds; the unbounded formulas depend on the target
    bound_val, formula, values = None, FORMULAS[theorem]["formula"], {}
    violations = []
    for r in valid:
        if r["rounds"] is None:
            continue
        try:
            b, formula, values = _row_bound(theorem, {**r, **params}, g)
        except (TypeError, ValueError, ZeroDivisionError):
            continue
        bound_val = b if bound_val is None else max(bound_val, b)
        if kind == "adversarial" and r["rounds"] > math.ceil(b - 1e-9):
            violations.append(r)
    row.update(bound=bound_val, formula=formula, values=values)
    if kind == "adversarial":
        row["pass"] = not failures and not violations
        if violations:
            worst = max(violations, key=lambda r: r["rounds"])
            row["offending_seed"] = worst["seed"]
        elif failures:
            row["offending_seed"] = failures[0]["seed"]
    elif kind == "probabilistic":
        delta = params.get("delta")
        row["pass"] = hi <= delta if delta is not None else not failures
    else:
        row["pass"] = not failures
        if rounds and bound_val:
            row["fitted_c"] = max(rounds) / bound_val
    return row


def write_report(report: BoundReport, out: str) -> None:
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "trials.csv"), "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=TRIAL_COLUMNS, extrasaction="ignore")
        w.writeheader()
        for r in report.trials:
            w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in TRIAL_COLUMNS})
    with open(os.path.join(out, "report.json"), "w") as fh:
        fh.write(report.to_json())


# -- verification ---------------------------------------------------------------------

def _coerce(row: dict) -> dict:
    out = {}
    for k, v in row.items():
        if v == "" or v is None:
            out[k] = None
            continue
        if k in ("trial", "seed", "rounds", "logical_rounds", "n", "max_degree", "lies",
                 "found", "target", "config", "schema_version"):
            try:
                out[k] = int(v)
            except (TypeError, ValueError):
                out[k] = v
        elif k in ("gamma", "rate", "noise", "delta", "epsilon", "slack"):
            out[k] = float(v)
        elif k in ("success", "budget_ok"):
            out[k] = v if isinstance(v, bool) else str(v) == "True"
        else:
            out[k] = v
    return out


def load_trials(path: str) -> tuple[list[dict], str | None]:
    """Trial rows from ``trials.csv``, a report directory or ``report.json``."""
    if os.path.isdir(path):
        path = os.path.join(path, "trials.csv")
    if path.endswith(".json"):
        with open(path) as fh:
            obj = json.load(fh)
        strategy = obj.get("config", {}).get("strategy")
        csv_path = os.path.join(os.path.dirname(path), "trials.csv")
        path = csv_path
    else:
        strategy = None
        rep = os.path.join(os.path.dirname(path), "report.json")
        if os.path.exists(rep):
            with open(rep) as fh:
                strategy = json.load(fh).get("config", {}).get("strategy")
    with open(path, newline="") as fh:
        rows = [_coerce(r) for r in csv.DictReader(fh)]
    return rows, strategy


def verify_bounds(results: Iterable[dict] | BoundReport, theorem: str,
                  strategy: str | None = None) -> list[dict]:
    """Compare each trial against the bound of ``theorem``, recomputed here.

    Rows whose responder broke its budget are excluded and listed with
    ``status='excluded'``.  Raises ``ValueError`` if ``strategy`` does not
    belong to ``theorem``.
    """
    if isinstance(results, BoundReport):
        strategy = strategy or results.config.get("strategy")
        results = results.trials
    if theorem not in FORMULAS:
        raise ValueError(f"unknown theorem id {theorem!r}")
    if strategy is not None:
        params = {}
        if theorem.startswith("unbounded-fixed-"):
            params["mode"] = theorem.rsplit("-", 1)[1]
        if _theorem_for(strategy, params) != theorem:
            raise ValueError(f"strategy {strategy!r} is not covered by theorem {theorem!r}")
    kind = FORMULAS[theorem]["kind"]
    out = []
    for r in results:
        r = _coerce(r) if any(isinstance(v, str) for v in r.values()) else r
        entry = {"trial": r.get("trial"), "seed": r.get("seed"), "rounds": r.get("rounds")}
        if not r.get("budget_ok", True):
            entry.update(status="excluded", reason=r.get("error"))
            out.append(entry)
            continue
        if r.get("rounds") is None:
            entry.update(status="fail", reason=r.get("error") or "no result")
            out.append(entry)
            continue
        b, formula, values = _row_bound(theorem, r, None)
        entry.update(bound=b, formula=formula, values=values)
        if kind == "adversarial":
            ok = r["rounds"] <= math.ceil(b - 1e-9) and bool(r.get("success", True))
        else:
            ok = bool(r.get("success", True))
        entry["status"] = "pass" if ok else "fail"
        out.append(entry)
    return out
