"""End-to-end acceptance checks at full scale.

Each test prints one ``C<k> PASS|FAIL`` line; the lines are repeated in the
terminal summary.  Bounds are re-derived here from their closed forms rather
than taken from ``liarsearch.bounds``.
"""

import contextlib
import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from conftest import ACCEPTANCE_LINES
from liarsearch import (
    GreedyAdversary,
    IIDResponder,
    TruthfulResponder,
    generate_graph,
    minimax_oracle,
    run_edge_errorless,
    run_edge_fixed,
    run_edge_linear,
    run_edge_prob,
    run_unbounded_fixed,
    run_unbounded_prob,
    run_vertex_fixed,
    run_vertex_linear,
    run_vertex_prob,
)
from liarsearch.bounds import edge_prob_params, entropy_gap, pruning_params, vertex_prob_params
from liarsearch.graph import GraphSpace
from liarsearch.harness import build_corpus, connected_graphs, trial_seed, wilson_interval
from liarsearch.responders import Budget, annotate_lies, check_budget
from liarsearch.strategies import GraphEngine, edge_loop, run_pruning, vertex_loop

pytestmark = pytest.mark.acceptance

GAMMAS = (1.5, 2.0, 3.0)
LIES = (0, 1, 2, 3)
SMALL_SIZES = range(2, 65)
LARGE_SIZES = (128, 512)
SAMPLED_TARGETS = 16


@contextlib.contextmanager
def criterion(tag, title):
    info = {}
    start = time.perf_counter()
    ok = False
    try:
        yield info
        ok = True
    finally:
        detail = ", ".join(f"{k}={v}" for k, v in info.items())
        line = (f"{tag} {'PASS' if ok else 'FAIL'} {title} "
                f"[{detail}; {time.perf_counter() - start:.1f}s]")
        ACCEPTANCE_LINES.append(line)
        print(line)


def H(p):
    return 0.0 if p in (0, 1) else -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def ceil_bound(x):
    return math.ceil(x - 1e-9)


def vertex_bound(n, L, G):
    return ceil_bound((math.log2(n) + L * math.log2(G)) / math.log2(2 * G / (G + 1)))


def edge_bound(n, L, G, D):
    return ceil_bound((math.log(n) + L * math.log(G)) / math.log(1 + (G - 1) / (G * D + 1)))


def corpus():
    """The finite-graph corpus: ``(name, graph, targets)`` triples."""
    out = []
    seen = set()
    for name, g in build_corpus(SMALL_SIZES):
        if name not in seen:
            seen.add(name)
            out.append((name, g, list(range(g.n))))
    for name, g in build_corpus(LARGE_SIZES):
        out.append((name, g, sorted(random.Random(name).sample(range(g.n), SAMPLED_TARGETS))))
    return out


@pytest.fixture(scope="module")
def graphs():
    return corpus()


def sweep(graphs, run, bound_of, configs):
    """Truthful and targeted adversary on every listed target, plus a target-free adversary.

    Returns ``(runs, violations, worst slack)``; ``violations`` lists the
    first few failing cases.
    """
    runs, bad, worst = 0, [], -math.inf
    for name, g, targets in graphs:
        for cfg in configs:
            bnd = bound_of(g, *cfg)
            L = cfg[0]
            responders = [(t, TruthfulResponder(t, seed=t)) for t in targets]
            responders += [(t, GreedyAdversary(Budget.fixed(L), target=t, seed=t)) for t in targets]
            responders.append((None, GreedyAdversary(Budget.fixed(L), seed=0)))
            for t, resp in responders:
                res = run(g, *cfg, resp)
                runs += 1
                found_ok = res.found == t if t is not None else bool(resp.alive[res.found])
                worst = max(worst, res.rounds - bnd)
                if res.rounds > bnd or not found_ok:
                    bad.append((name, cfg, t, res.rounds, bnd, res.found))
    return runs, bad, worst


class TestAcceptance:
    def test_c1_vertex_fixed(self, graphs):
        weighted = [(f"{n}:w", g, list(range(g.n)))
                    for n, g in build_corpus((8, 16, 32, 64), seed=3, weighted=True)
                    if not g.is_unit]
        with criterion("C1", "vertex queries, fixed lies") as info:
            t0 = time.perf_counter()
            runs, bad, worst = sweep(graphs + weighted, run_vertex_fixed,
                                     lambda g, L, G: vertex_bound(g.n, L, G),
                                     [(L, G) for G in GAMMAS for L in LIES])
            elapsed = time.perf_counter() - t0
            info.update(graphs=len(graphs) + len(weighted), runs=runs, violations=len(bad),
                        max_rounds_minus_bound=worst, runtime=f"{elapsed:.0f}s")
            assert not bad, bad[:5]
            assert elapsed < 300

    @pytest.mark.parametrize("kind", ["path", "random-tree"])
    def test_c2_vertex_linear(self, kind):
        g = generate_graph(kind, n=1024, seed=11)
        with criterion("C2", f"vertex queries, linear lies on {kind} n=1024") as info:
            assert ceil_bound(math.log2(1024) / (1 - H(0.25))) == 53
            runs, bad, maxima = 0, [], {}
            for r in (0.1, 0.25, 0.4):
                bnd = ceil_bound(math.log2(1024) / (1 - H(r)))
                maxima[r] = (0, bnd)
                resps = [(t, GreedyAdversary(Budget.linear(r), target=t, seed=t))
                         for t in range(g.n)]
                resps.append((None, GreedyAdversary(Budget.linear(r), seed=0)))
                for t, resp in resps:
                    res = run_vertex_linear(g, r, resp)
                    runs += 1
                    maxima[r] = (max(maxima[r][0], res.rounds), bnd)
                    if res.rounds > bnd or (t is not None and res.found != t):
                        bad.append((r, t, res.rounds, bnd, res.found))
            info.update(runs=runs, violations=len(bad),
                        max_rounds_vs_bound={r: f"{m}/{b}" for r, (m, b) in maxima.items()})
            assert not bad, bad[:5]

    def test_c3_edge_fixed_and_linear(self, graphs):
        with criterion("C3", "edge queries, fixed and linear lies") as info:
            runs, bad, worst = sweep(graphs, run_edge_fixed,
                                     lambda g, L, G: edge_bound(g.n, L, G, g.max_degree),
                                     [(L, G) for G in GAMMAS for L in LIES])
            lin_runs, lin_bad = 0, []
            for name, g, targets in graphs:
                D = g.max_degree
                for eps in (0.5, 0.75):
                    bnd = ceil_bound(2 * eps ** -2 * D * math.log(g.n))
                    r = (1 - eps) / (D + 1)
                    resps = [(t, TruthfulResponder(t, seed=t)) for t in targets]
                    resps += [(t, GreedyAdversary(Budget.linear(r), target=t, seed=t))
                              for t in targets]
                    resps.append((None, GreedyAdversary(Budget.linear(r), seed=0)))
                    for t, resp in resps:
                        res = run_edge_linear(g, eps, resp)
                        lin_runs += 1
                        if res.rounds > bnd or (t is not None and res.found != t):
                            lin_bad.append((name, eps, t, res.rounds, bnd, res.found))
            info.update(fixed_runs=runs, fixed_violations=len(bad),
                        max_rounds_minus_bound=worst, linear_runs=lin_runs,
                        linear_violations=len(lin_bad))
            assert not bad, bad[:5]
            assert not lin_bad, lin_bad[:5]

    def test_c4_edge_errorless(self, graphs):
        with criterion("C4", "error-less edge search") as info:
            runs, bad, tight = 0, [], 0
            for name, g, targets in graphs:
                D = g.max_degree
                if D == 1:
                    bnd = g.n - 1
                else:
                    bnd = ceil_bound(math.log(g.n / D) / math.log(D / (D - 1))) + D
                for t in targets:
                    res = run_edge_errorless(g, TruthfulResponder(t, seed=t))
                    runs += 1
                    tight += res.rounds == bnd
                    if res.rounds > bnd or res.found != t:
                        bad.append((name, t, res.rounds, bnd, res.found))
            info.update(runs=runs, violations=len(bad), runs_at_bound=tight)
            assert not bad, bad[:5]

    @pytest.mark.parametrize("p", [0.1, 0.25])
    def test_c5_vertex_prob(self, p):
        trials, delta = 2000, 0.1
        with criterion("C5", f"probabilistic vertex search p={p}") as info:
            for kind in ("path", "random-tree"):
                g = generate_graph(kind, n=512, seed=5)
                Q = vertex_prob_params(512, p, delta).length
                fails, lengths = 0, set()
                for i in range(trials):
                    seed = trial_seed(2024, i)
                    t = random.Random(seed).randrange(g.n)
                    res = run_vertex_prob(g, p, delta, IIDResponder(t, p, seed=seed))
                    fails += res.found != t
                    lengths.add(res.rounds)
                lo, hi = wilson_interval(fails, trials)
                info[kind] = f"Q={Q} failures={fails}/{trials} wilson_hi={hi:.4f}"
                assert lengths == {Q}
                assert hi <= delta

    def test_c6_edge_prob_path(self):
        n, eps, delta, trials = 1024, 0.5, 0.1, 2000
        noise = (1 - eps) / 2
        g = generate_graph("path", n=n)
        prm = edge_prob_params(n, g.max_degree, eps, delta)
        with criterion("C6", "noisy binary search on P_1024") as info:
            fails, rounds = 0, []
            for i in range(trials):
                seed = trial_seed(77, i)
                t = random.Random(seed).randrange(n)
                res = run_edge_prob(g, eps, delta, IIDResponder(t, noise, seed=seed))
                fails += res.found != t
                rounds.append(res.rounds)
            lo, hi = wilson_interval(fails, trials)
            scale = eps ** -2 * (math.log(n) + math.log(1 / delta))
            c = max(rounds) / scale
            info.update(noise=noise, repeats=prm.repeats, logical=prm.length,
                        rounds=max(rounds), failures=f"{fails}/{trials}",
                        wilson_hi=f"{hi:.4f}", fitted_c=f"{c:.2f}")
            assert hi <= delta
            assert set(rounds) == {prm.length * prm.repeats}
            assert math.isfinite(c) and max(rounds) <= math.ceil(c * scale)

    def test_c7_pruning(self):
        fams = []
        for n in (4, 8, 16, 32, 64):
            fams.append(generate_graph("path", n=n))
            fams.append(generate_graph("cycle", n=n))
            for D in (3, 4):
                fams.append(generate_graph("random-tree", n=n, max_degree=D, seed=n + D))
        fams += [generate_graph("grid", rows=2, cols=c) for c in (3, 8, 20)]
        fams += [generate_graph("grid", rows=r, cols=c) for r, c in ((3, 3), (4, 6), (8, 8))]
        fams = [g for g in fams if g.max_degree in (2, 3, 4)]
        with criterion("C7", "pruning under prefix-bounded lies") as info:
            trials, bad, max_ratio, degrees = 0, [], 0.0, set()
            for g in fams:
                D = g.max_degree
                degrees.add(D)
                space = GraphSpace(g)
                for eps in (0.5, 1.0):
                    r = (1 - eps) / D
                    H_ = 2 * D / eps
                    q0 = 8 * (D - 1) * eps ** -2 * math.log(g.n)
                    assert pruning_params(g.n, D, eps).cap == pytest.approx(2 * q0)
                    resps = [(t, GreedyAdversary(Budget.prefix(r), target=t, seed=t))
                             for t in range(g.n)]
                    resps.append((None, GreedyAdversary(Budget.prefix(r), seed=0)))
                    for t, resp in resps:
                        pr = run_pruning(g, eps, resp)
                        trials += 1
                        max_ratio = max(max_ratio, pr.rounds / q0)
                        cand = pr.candidates
                        if t is None:
                            legal = [v for v in range(g.n) if check_budget(
                                annotate_lies(pr.transcript, space, v), Budget.prefix(r))[0]]
                        else:
                            legal = [t]
                        ok = (not pr.exceeded and pr.rounds <= 2 * q0 and pr.max_D <= H_ + 1e-9
                              and len(pr.D) <= H_ + 1e-9 and all(v in cand for v in legal))
                        if not ok:
                            bad.append((g, eps, t, pr.rounds, q0, pr.max_D, sorted(cand)))
            info.update(graphs=len(fams), degrees=sorted(degrees), trials=trials,
                        failures=len(bad), max_rounds_over_q0=f"{max_ratio:.3f}")
            assert degrees == {2, 3, 4}
            assert not bad, bad[:3]

    def test_c8_unbounded(self):
        G = 2.0
        with criterion("C8", "unbounded domain") as info:
            bad, runs = [], 0
            for mode, step in (("ternary", 2 * G / (G + 1)), ("binary", 3 * G / (2 * G + 1))):
                for N in (1, 2, 3, 10, 10 ** 3, 10 ** 6):
                    for L in (0, 1, 2):
                        bnd = ceil_bound((math.log(math.pi ** 2 / 6) + 2 * math.log(N)
                                          + L * math.log(G)) / math.log(step))
                        for resp in (TruthfulResponder(N, seed=N),
                                     GreedyAdversary(Budget.fixed(L), target=N, seed=N)):
                            res = run_unbounded_fixed(mode, L, G, resp)
                            runs += 1
                            if res.found != N or res.rounds > bnd:
                                bad.append((mode, N, L, res.rounds, bnd, res.found))
            means, rates = [], []
            Ns = (3, 100, 10 ** 4)
            for N in Ns:
                ok, rounds = 0, []
                for i in range(1000):
                    res = run_unbounded_prob(0.25, 0.1, IIDResponder(N, 0.25, seed=trial_seed(N, i)))
                    ok += res.found == N
                    rounds.append(res.rounds)
                rates.append(ok / 1000)
                means.append(float(np.mean(rounds)))
            fit = stats.linregress(np.log(Ns), means)
            info.update(fixed_runs=runs, fixed_violations=len(bad),
                        success=dict(zip(Ns, rates)),
                        mean_rounds={N: round(m, 1) for N, m in zip(Ns, means)},
                        slope=f"{fit.slope:.1f}", r2=f"{fit.rvalue ** 2:.4f}")
            assert not bad, bad[:5]
            assert min(rates) >= 0.9
            assert means[0] < means[1] < means[2]
            assert fit.slope > 0

    def test_c9_oracle(self):
        with criterion("C9", "minimax oracle sandwich") as info:
            cases, bad, short = 0, [], 0
            for n in range(1, 6):
                for g in connected_graphs(n):
                    for L in (0, 1):
                        opt = minimax_oracle(g, L)
                        for G in GAMMAS:
                            bnd = vertex_bound(n, L, G) if n > 1 else 0
                            res = run_vertex_fixed(
                                g, L, G, GreedyAdversary(Budget.fixed(L), lookahead=True))
                            plain = run_vertex_fixed(g, L, G, GreedyAdversary(Budget.fixed(L)))
                            cases += 1
                            short += plain.rounds < opt
                            if not opt <= res.rounds <= bnd:
                                bad.append((g.edges, L, G, opt, res.rounds, bnd))
            p2 = minimax_oracle(generate_graph("path", n=2), 1, "edge")
            info.update(cases=cases, violations=len(bad), p2_edge_L1=p2,
                        weight_only_greedy_below_oracle=short)
            assert not bad, bad[:5]
            assert p2 == 3

    def test_c10_lemma_suite(self):
        target_rounds = 100_000
        rng = random.Random(10)
        kinds = ("path", "cycle", "star", "random-tree", "grid", "random-connected")
        counts: dict[str, int] = {}
        with criterion("C10", "per-round lemma checks in exact arithmetic") as info:
            rounds = 0
            while rounds < target_rounds:
                kind = rng.choice(kinds)
                n = rng.randint(2, 32)
                if kind == "grid":
                    r = rng.randint(1, 5)
                    g = generate_graph("grid", rows=r, cols=max(2, n // r))
                elif kind == "cycle":
                    g = generate_graph("cycle", n=max(3, n))
                elif kind == "star":
                    g = generate_graph("star", leaves=n - 1)
                elif kind == "random-connected":
                    g = generate_graph(kind, n=n, p=rng.choice((0.05, 0.2, 0.5)),
                                       seed=rng.randrange(10 ** 6))
                else:
                    g = generate_graph(kind, n=n, seed=rng.randrange(10 ** 6))
                gamma = rng.choice((Fraction(5, 4), Fraction(3, 2), Fraction(2), Fraction(3)))
                seed = rng.randrange(10 ** 9)
                t = rng.randrange(g.n)
                who = rng.randrange(3)
                if who == 0:
                    resp = IIDResponder(t, rng.choice((0.0, 0.2, 0.4)), seed=seed)
                elif who == 1:
                    resp = TruthfulResponder(t, seed=seed)
                else:
                    resp = GreedyAdversary(Budget.fixed(rng.randint(0, 3)), seed=seed)
                eng = GraphEngine(g, gamma, resp, check=True)
                length = rng.randint(1, 40)
                loop = vertex_loop if rng.random() < 0.5 else edge_loop
                loop(eng, lambda: eng.logical >= length)
                for k, v in eng.checker.counts.items():
                    counts[k] = counts.get(k, 0) + v
                rounds += eng.logical
            xs = np.round(np.arange(0.05, 1.0001, 0.05), 10)
            alphas = np.round(np.arange(0.05, 0.9501, 0.05), 10)
            grid_bad = [(x, a) for x in xs for a in alphas
                        if entropy_gap(x) / entropy_gap(a * x) > 1 / entropy_gap(a) + 1e-12]
            info.update(rounds=rounds, checks=dict(sorted(counts.items())),
                        entropy_grid=f"{len(xs) * len(alphas) - len(grid_bad)}/"
                                     f"{len(xs) * len(alphas)}")
            assert rounds >= target_rounds
            for name in ("no-answer", "yes-answer", "degree-bound", "median-half", "identity"):
                assert counts.get(name, 0) > 0, name
            assert counts["identity"] == rounds
            assert not grid_bad
