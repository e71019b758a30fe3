"""Prefix-bounded lies: prune to a handful of candidates, then vote.

PRUNING keeps a set ``C`` of vertices with few lies and a set ``D`` of
recently answered vertices; the majority finisher then searches ``C | D``.
"""

import argparse

from liarsearch import GreedyAdversary, generate_graph, run_prefix_bounded
from liarsearch.responders import Budget
from liarsearch.strategies import run_pruning


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=6)
    ap.add_argument("--cols", type=int, default=6)
    ap.add_argument("--target", type=int, default=20)
    args = ap.parse_args()

    g = generate_graph("grid", rows=args.rows, cols=args.cols)
    D = g.max_degree
    for eps in (1.0, 0.75, 0.5):
        r = (1 - eps) / D
        pr = run_pruning(g, eps, GreedyAdversary(Budget.prefix(r), target=args.target))
        full = run_prefix_bounded(g, eps, GreedyAdversary(Budget.prefix(r), target=args.target))
        print(f"eps={eps:.2f} rate={r:.3f}: pruning {pr.rounds} rounds "
              f"(q0 cap {pr.params.cap:.0f}), |C|={len(pr.C)} |D|={len(pr.D)} "
              f"max|D|={pr.max_D} <= {2 * D / eps:.0f}; "
              f"finished at {full.found} after {full.rounds} rounds")


if __name__ == "__main__":
    main()
