import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from liarsearch.bounds import edge_errorless_bound, edge_fixed_bound, vertex_fixed_bound
from liarsearch.graph import EdgeQuery, VertexQuery, generate_graph
from liarsearch.responders import (
    Budget,
    GreedyAdversary,
    IIDResponder,
    ReplayResponder,
    ReplyRecord,
    TruthfulResponder,
)
from liarsearch.strategies import (
    GraphEngine,
    ResponderContractError,
    run_edge_errorless,
    run_edge_fixed,
    run_edge_linear,
    run_edge_prob,
    run_prefix_bounded,
    run_pruning,
    run_vertex_fixed,
    run_vertex_linear,
    run_vertex_prob,
)
from liarsearch.weights import LieState, find_median


@st.composite
def small_graphs(draw, max_n=16):
    n = draw(st.integers(2, max_n))
    seed = draw(st.integers(0, 2**31))
    kind = draw(st.sampled_from(["path", "random-tree", "random-connected", "cycle", "star"]))
    if kind == "cycle" and n < 3:
        kind = "path"
    if kind == "star":
        return generate_graph("star", leaves=n - 1)
    if kind == "random-connected":
        return generate_graph(kind, n=n, p=0.2, seed=seed)
    return generate_graph(kind, n=n, seed=seed)


def within(rounds, bound):
    return rounds <= math.ceil(bound - 1e-9)


class TestVertexFixed:
    def test_p2(self):
        res = run_vertex_fixed(generate_graph("path", n=2), 0, 3.0, TruthfulResponder(1))
        assert res.found == 1 and res.rounds == 1
        assert res.transcript[0].query == VertexQuery(0)

    def test_p8_errorless(self):
        g = generate_graph("path", n=8)
        for t in range(8):
            res = run_vertex_fixed(g, 0, math.inf, TruthfulResponder(t))
            assert res.found == t and res.rounds <= 3

    def test_single_vertex(self):
        res = run_vertex_fixed(generate_graph("path", n=1), 2, 2.0, TruthfulResponder(0))
        assert res.found == 0 and res.rounds == 0

    def test_contract_violation(self):
        g = generate_graph("path", n=5)
        # the second reply contradicts the first, so no vertex has 0 lies
        script = [(VertexQuery(2), 1), (VertexQuery(1), 2)]
        recs = [ReplyRecord(i + 1, q, r) for i, (q, r) in enumerate(script)]
        with pytest.raises(ResponderContractError):
            run_vertex_fixed(g, 0, 2.0, ReplayResponder(recs))

    def test_weighted_graph_allowed(self):
        g = generate_graph("random-connected", n=12, p=0.3, seed=3, weights=(1, 5))
        for t in range(12):
            res = run_vertex_fixed(g, 1, 2.0, GreedyAdversary(Budget.fixed(1), target=t))
            assert res.found == t
            assert within(res.rounds, vertex_fixed_bound(12, 1, 2.0))

    @given(small_graphs(), st.integers(0, 3), st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 10**6))
    def test_sound_and_bounded(self, g, L, gamma, seed):
        t = seed % g.n
        res = run_vertex_fixed(g, L, gamma, GreedyAdversary(Budget.fixed(L), target=t, seed=seed))
        assert res.found == t
        assert within(res.rounds, vertex_fixed_bound(g.n, L, gamma))

    @given(small_graphs(max_n=10), st.integers(0, 2), st.integers(0, 10**6))
    def test_lemmas_exact(self, g, L, seed):
        res = run_vertex_fixed(g, L, Fraction(2), GreedyAdversary(Budget.fixed(L), seed=seed),
                               check=True)
        assert res.rounds == 0 or res.info["checks"]["identity"] == res.rounds

    @given(small_graphs(), st.integers(0, 2), st.integers(0, 10**6))
    def test_replay_idempotent(self, g, L, seed):
        adv = GreedyAdversary(Budget.fixed(L), seed=seed)
        first = run_vertex_fixed(g, L, 2.0, adv)
        again = run_vertex_fixed(g, L, 2.0, ReplayResponder(first.transcript))
        assert [r.query for r in again.transcript] == [r.query for r in first.transcript]
        assert again.found == first.found


class TestEdgeFixed:
    def test_p4(self):
        res = run_edge_fixed(generate_graph("path", n=4), 0, 2.0, TruthfulResponder(3))
        assert res.found == 3 and res.rounds <= 8

    def test_star_starts_with_edge_median(self):
        g = generate_graph("star", leaves=3)
        res = run_edge_fixed(g, 0, 2.0, TruthfulResponder(2))
        want = find_median(LieState(4, 2.0), g.distances, "edge")
        assert res.transcript[0].query == EdgeQuery(*want)
        assert res.info.get("heavy_activations", 0) >= 0

    def test_single_vertex(self):
        assert run_edge_fixed(generate_graph("path", n=1), 0, 2.0, TruthfulResponder(0)).rounds == 0

    def test_weighted_rejected(self):
        g = generate_graph("path", n=4, weights=(2, 3), seed=1)
        with pytest.raises(ValueError):
            run_edge_fixed(g, 0, 2.0, TruthfulResponder(0))

    @given(small_graphs(), st.integers(0, 3), st.sampled_from([1.5, 2.0, 3.0]), st.integers(0, 10**6))
    def test_sound_and_bounded(self, g, L, gamma, seed):
        t = seed % g.n
        res = run_edge_fixed(g, L, gamma, GreedyAdversary(Budget.fixed(L), target=t, seed=seed))
        assert res.found == t
        assert within(res.rounds, edge_fixed_bound(g.n, L, gamma, g.max_degree))

    @given(small_graphs(max_n=10), st.integers(0, 2), st.integers(0, 10**6))
    def test_lemmas_exact(self, g, L, seed):
        run_edge_fixed(g, L, Fraction(3, 2), GreedyAdversary(Budget.fixed(L), seed=seed), check=True)


def brute_greedy_order(eng, v):
    """Re-evaluate every union from scratch at each step."""
    w = eng.state.weights()
    far = {u: eng.space.compatible(EdgeQuery(min(u, v), max(u, v)), u, strict=True)
           for u in eng.g.adjacency[v]}
    covered = np.zeros(eng.g.n, dtype=bool)
    order, left = [], list(eng.g.adjacency[v])
    while left:
        sums = [w[covered | far[u]].sum() for u in left]
        best = max(sums)
        u = next(u for u, s in zip(left, sums) if s == best)
        left.remove(u)
        covered |= far[u]
        order.append(EdgeQuery(min(u, v), max(u, v)))
    return order


class TestGreedyOrder:
    @given(small_graphs(max_n=14), st.lists(st.integers(0, 3), min_size=14, max_size=14))
    def test_matches_brute_force_exact(self, g, lies):
        eng = GraphEngine(g, Fraction(3, 2), TruthfulResponder(0))
        eng.state.lies[:] = lies[:g.n]
        for v in range(g.n):
            assert eng.greedy_order(v) == brute_greedy_order(eng, v)

    def test_grid_corner_and_centre(self):
        g = generate_graph("grid", rows=3, cols=3)
        eng = GraphEngine(g, 2.0, TruthfulResponder(0))
        # Uniform weights: the top row first (smallest id), then the bottom row
        # adds three new vertices while either column adds only two.
        assert [e.v if e.u == 4 else e.u for e in eng.greedy_order(4)] == [1, 7, 3, 5]
        eng.state.lies[:] = [3, 3, 3, 3, 0, 0, 3, 3, 0]
        assert eng.greedy_order(4)[0] == EdgeQuery(4, 5)


class TestErrorless:
    def test_p8(self):
        g = generate_graph("path", n=8)
        assert all(run_edge_errorless(g, TruthfulResponder(t)).rounds <= 4 for t in range(8))

    def test_star(self):
        g = generate_graph("star", leaves=5)
        for t in range(6):
            res = run_edge_errorless(g, TruthfulResponder(t))
            assert res.found == t and res.rounds <= 5

    def test_two_vertices(self):
        res = run_edge_errorless(generate_graph("path", n=2), TruthfulResponder(0))
        assert res.rounds == 1 and res.found == 0

    @given(small_graphs(max_n=24), st.integers(0, 10**6))
    def test_bound(self, g, seed):
        t = seed % g.n
        res = run_edge_errorless(g, TruthfulResponder(t, seed))
        assert res.found == t and within(res.rounds, edge_errorless_bound(g.n, g.max_degree))


class TestLinear:
    def test_vertex_p1024(self):
        g = generate_graph("path", n=1024)
        res = run_vertex_linear(g, 0.25, GreedyAdversary(Budget.linear(0.25)))
        assert res.bound == 53 and res.rounds <= 53

    def test_vertex_errorless(self):
        res = run_vertex_linear(generate_graph("path", n=100), 0.0, TruthfulResponder(42))
        assert res.found == 42 and res.rounds <= 7

    def test_vertex_single(self):
        assert run_vertex_linear(generate_graph("path", n=1), 0.2, TruthfulResponder(0)).rounds == 0

    def test_vertex_rejects(self):
        with pytest.raises(ValueError):
            run_vertex_linear(generate_graph("path", n=4), 0.5, TruthfulResponder(0))

    @pytest.mark.parametrize("eps, cap", [(1.0, 22), (0.5, 88)])
    def test_edge_p256(self, eps, cap):
        g = generate_graph("path", n=256)
        r = (1 - eps) / 3
        for t in (0, 17, 128, 255):
            res = run_edge_linear(g, eps, GreedyAdversary(Budget.linear(r), target=t))
            assert res.found == t and res.rounds <= cap

    def test_edge_single(self):
        assert run_edge_linear(generate_graph("path", n=1), 0.5, TruthfulResponder(0)).rounds == 0

    def test_edge_rejects(self):
        with pytest.raises(ValueError):
            run_edge_linear(generate_graph("path", n=4), 0.0, TruthfulResponder(0))


class TestProbabilistic:
    def test_vertex_query_count_and_determinism(self):
        g = generate_graph("path", n=128)
        a = run_vertex_prob(g, 0.25, 0.1, IIDResponder(77, 0.25, seed=5))
        b = run_vertex_prob(g, 0.25, 0.1, IIDResponder(77, 0.25, seed=5))
        assert a.rounds == a.bound == b.rounds
        assert [(r.query, r.reply) for r in a.transcript] == [(r.query, r.reply) for r in b.transcript]

    def test_vertex_errorless(self):
        g = generate_graph("path", n=512)
        res = run_vertex_prob(g, 0.0, 0.1, TruthfulResponder(300))
        assert res.rounds == 9 and res.found == 300

    def test_vertex_success_rate(self):
        g = generate_graph("random-tree", n=64, seed=2)
        ok = sum(run_vertex_prob(g, 0.25, 0.1, IIDResponder(s % 64, 0.25, seed=s)).found == s % 64
                 for s in range(200))
        assert ok >= 180

    def test_edge_noisy_binary_search(self):
        g = generate_graph("path", n=128)
        wins = 0
        for s in range(40):
            res = run_edge_prob(g, 0.5, 0.1, IIDResponder(s * 3 % 128, 0.25, seed=s))
            wins += res.found == s * 3 % 128
            assert res.rounds == res.logical_rounds * res.params.repeats
        assert wins >= 36

    def test_edge_determinism(self):
        g = generate_graph("path", n=64)
        a = run_edge_prob(g, 0.5, 0.1, IIDResponder(9, 0.25, seed=1))
        b = run_edge_prob(g, 0.5, 0.1, IIDResponder(9, 0.25, seed=1))
        assert [r.reply for r in a.transcript] == [r.reply for r in b.transcript]

    def test_edge_boost_skipped(self):
        res = run_edge_prob(generate_graph("path", n=64), 0.8, 0.1, IIDResponder(5, 0.1))
        assert res.params.repeats == 1


class TestPruning:
    def test_params(self):
        res = run_pruning(generate_graph("path", n=50), 0.5, TruthfulResponder(20))
        assert res.params.threshold == 8 and res.params.gamma == pytest.approx(1.5)

    @pytest.mark.parametrize("t", [0, 7, 33, 49])
    def test_truthful(self, t):
        C, D, rounds = run_pruning(generate_graph("path", n=50), 0.5, TruthfulResponder(t))
        assert t in C | D
        if t not in D:
            assert C == {t}

    def test_two_vertices(self):
        res = run_pruning(generate_graph("path", n=2), 0.5, TruthfulResponder(1))
        assert 1 in res.candidates and res.rounds <= 2

    @given(st.integers(3, 40), st.sampled_from([2, 3, 4]), st.sampled_from([0.5, 1.0]),
           st.integers(0, 10**6))
    def test_adversarial(self, n, dlt, eps, seed):
        g = generate_graph("random-tree", n=n, max_degree=dlt, seed=seed)
        t = seed % n
        adv = GreedyAdversary(Budget.prefix((1 - eps) / g.max_degree), target=t, seed=seed)
        res = run_pruning(g, eps, adv, check=True)
        assert t in res.candidates
        assert res.max_D <= 2 * g.max_degree / eps
        assert len(res.C) <= 1


class TestPrefixBounded:
    def test_path_1024(self):
        g = generate_graph("path", n=1024)
        adv = GreedyAdversary(Budget.prefix(0.25), target=700, seed=1)
        res = run_prefix_bounded(g, 0.5, adv)
        assert res.found == 700

    def test_truthful(self):
        res = run_prefix_bounded(generate_graph("path", n=64), 0.5, TruthfulResponder(10))
        assert res.found == 10 and len(res.info["candidates"]) <= 2 * 2 / 0.5 + 1

    def test_single_candidate_no_finisher(self):
        res = run_prefix_bounded(generate_graph("path", n=8), 1.0, TruthfulResponder(3))
        assert res.info["candidates"] == [3]
        assert res.found == 3 and res.rounds == res.info["pruning_rounds"]

    @pytest.mark.parametrize("eps", [0.5, 1.0])
    def test_single_edge(self, eps):
        g = generate_graph("path", n=2)
        for t in (0, 1):
            adv = GreedyAdversary(Budget.prefix((1 - eps) / 2), target=t)
            assert run_prefix_bounded(g, eps, adv).found == t

    @given(st.integers(3, 60), st.sampled_from([2, 3]), st.sampled_from([0.5, 1.0]),
           st.integers(0, 10**6))
    def test_found_under_prefix_adversary(self, n, dlt, eps, seed):
        g = generate_graph("random-tree", n=n, max_degree=dlt, seed=seed)
        t = seed % n
        adv = GreedyAdversary(Budget.prefix((1 - eps) / g.max_degree), target=t, seed=seed)
        assert run_prefix_bounded(g, eps, adv).found == t
