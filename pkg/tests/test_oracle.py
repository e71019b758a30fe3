import networkx as nx
import pytest

from liarsearch.bounds import vertex_fixed_bound
from liarsearch.graph import Graph, generate_graph
from liarsearch.harness import connected_graphs
from liarsearch.oracle import GameValue, minimax_oracle, strategy_worst_case
from liarsearch.responders import Budget, GreedyAdversary
from liarsearch.strategies import run_vertex_fixed


def p(n):
    return generate_graph("path", n=n)


class TestOracle:
    def test_p2_vertex(self):
        assert minimax_oracle(p(2), 0, "vertex") == 1

    def test_p4_edge(self):
        assert minimax_oracle(p(4), 0, "edge") == 2

    def test_p2_one_lie_edge(self):
        assert minimax_oracle(p(2), 1, "edge") == 3

    def test_single_vertex(self):
        assert minimax_oracle(Graph(1, []), 2) == 0

    def test_errorless_binary_search(self):
        for n in range(2, 9):
            assert minimax_oracle(p(n), 0, "edge") == (n - 1).bit_length()

    def test_too_large(self):
        with pytest.raises(ValueError):
            minimax_oracle(p(9), 0)
        with pytest.raises(ValueError):
            minimax_oracle(p(3), 3)

    def test_mode(self):
        with pytest.raises(ValueError):
            minimax_oracle(p(3), 0, "face")

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_dominance_on_all_graphs(self, n):
        for g in connected_graphs(n):
            for L in (0, 1):
                opt = minimax_oracle(g, L)
                worst = strategy_worst_case(g, L, 2.0)
                assert opt <= worst <= vertex_fixed_bound(n, L, 2.0) + 1e-9


class TestLookaheadAdversary:
    def test_pure_greedy_can_end_early(self):
        # The weight-greedy reply on P2 with one lie concedes after two rounds.
        r = run_vertex_fixed(p(2), 1, 3.0, GreedyAdversary(Budget.fixed(1)))
        assert r.rounds == 2 < minimax_oracle(p(2), 1)

    def test_lookahead_reaches_game_value(self):
        r = run_vertex_fixed(p(2), 1, 3.0, GreedyAdversary(Budget.fixed(1), lookahead=True))
        assert r.rounds == 3

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_dominance_against_lookahead(self, n):
        for g in connected_graphs(n):
            for L in (0, 1):
                opt = minimax_oracle(g, L)
                for gamma in (1.5, 3.0):
                    adv = GreedyAdversary(Budget.fixed(L), lookahead=True)
                    r = run_vertex_fixed(g, L, gamma, adv)
                    assert opt <= r.rounds <= strategy_worst_case(g, L, gamma)

    def test_ignored_when_too_large(self):
        adv = GreedyAdversary(Budget.fixed(1), lookahead=True)
        r = run_vertex_fixed(p(9), 1, 2.0, adv)
        assert adv._games is None and r.found is not None

    def test_game_value_from_midgame_state(self):
        game = GameValue(p(2), 1, "vertex")
        assert game((0, 0)) == 3
        assert game((1, 0)) == 2
        assert game((2, 0)) == 0 and game((5, 0)) == 0


class TestCorpusEnumeration:
    def test_counts_match_atlas(self):
        atlas = {}
        for h in nx.graph_atlas_g()[1:]:
            if nx.is_connected(h):
                atlas[h.number_of_nodes()] = atlas.get(h.number_of_nodes(), 0) + 1
        for n in range(1, 6):
            assert len(connected_graphs(n)) == atlas[n]
