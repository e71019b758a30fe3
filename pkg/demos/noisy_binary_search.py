"""Noisy binary search on a path: how many repetitions buy how much accuracy.

Each edge query is repeated ``P`` times and decided by majority; the table
compares the plain i.i.d. error rate with the boosted one and the final
success rate of the search.
"""

import argparse
import random

import numpy as np

from liarsearch import IIDResponder, generate_graph, run_edge_prob
from liarsearch.bounds import edge_prob_params
from liarsearch.harness import trial_seed, wilson_interval


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=256)
    ap.add_argument("--delta", type=float, default=0.1)
    ap.add_argument("--trials", type=int, default=200)
    args = ap.parse_args()

    g = generate_graph("path", n=args.n)
    print(f"{'eps':>5} {'p':>6} {'P':>4} {'Q':>5} {'rounds':>7} {'fail':>6} {'wilson hi':>9}")
    for eps in (1.0, 0.8, 0.6, 0.5):
        p = (1 - eps) / 2
        prm = edge_prob_params(g.n, g.max_degree, eps, args.delta)
        fails, rounds = 0, []
        for i in range(args.trials):
            seed = trial_seed(9, i)
            t = random.Random(seed).randrange(g.n)
            res = run_edge_prob(g, eps, args.delta, IIDResponder(t, p, seed=seed))
            fails += res.found != t
            rounds.append(res.rounds)
        hi = wilson_interval(fails, args.trials)[1]
        print(f"{eps:>5.2f} {p:>6.3f} {prm.repeats:>4} {prm.length:>5} "
              f"{int(np.mean(rounds)):>7} {fails:>6} {hi:>9.4f}")


if __name__ == "__main__":
    main()
