"""Exact game values on tiny graphs next to what the search actually spends.

The minimax oracle solves the liar game exhaustively.  A weight-greedy
adversary sometimes gives up early; with exact lookahead it always forces
at least the game value, and the search never exceeds its bound.
"""

import math

from liarsearch import GreedyAdversary, minimax_oracle, run_vertex_fixed
from liarsearch.bounds import vertex_fixed_bound
from liarsearch.harness import connected_graphs
from liarsearch.responders import Budget


def main():
    gamma = 2.0
    print(f"{'n':>2} {'L':>2} {'graphs':>6} {'sum opt':>8} {'greedy':>7} {'lookahead':>9} {'bound':>6}")
    for n in range(2, 6):
        graphs = connected_graphs(n)
        for L in (0, 1):
            opt = greedy = look = 0
            for g in graphs:
                opt += minimax_oracle(g, L)
                greedy += run_vertex_fixed(g, L, gamma, GreedyAdversary(Budget.fixed(L))).rounds
                look += run_vertex_fixed(g, L, gamma,
                                         GreedyAdversary(Budget.fixed(L), lookahead=True)).rounds
            bound = math.ceil(vertex_fixed_bound(n, L, gamma) - 1e-9) * len(graphs)
            print(f"{n:>2} {L:>2} {len(graphs):>6} {opt:>8} {greedy:>7} {look:>9} {bound:>6}")


if __name__ == "__main__":
    main()
