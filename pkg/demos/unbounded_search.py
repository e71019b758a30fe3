"""Searching the positive integers without an upper limit.

The fixed-lie searches use the prior ``mu0(k) ~ k**-2``, so their cost
grows like ``2 log N``; the probabilistic search runs over squaring ranges.
"""

import argparse

import numpy as np

from liarsearch import GreedyAdversary, IIDResponder, run_unbounded_fixed, run_unbounded_prob
from liarsearch.harness import trial_seed
from liarsearch.responders import Budget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lies", type=int, default=1)
    ap.add_argument("--trials", type=int, default=50)
    args = ap.parse_args()

    print("fixed lies, greedy adversary, gamma=2")
    print(f"{'N':>9} {'ternary':>8} {'bound':>6} {'binary':>7} {'bound':>6}")
    for N in (1, 7, 100, 5000, 10 ** 6):
        row = [N]
        for mode in ("ternary", "binary"):
            res = run_unbounded_fixed(mode, args.lies, 2.0,
                                      GreedyAdversary(Budget.fixed(args.lies), target=N))
            assert res.found == N
            row += [res.rounds, int(np.ceil(res.bound - 1e-9))]
        print("{:>9} {:>8} {:>6} {:>7} {:>6}".format(*row))

    print("\ni.i.d. noise p=0.25, delta=0.1")
    for N in (3, 100, 10 ** 4):
        rounds, ok = [], 0
        for i in range(args.trials):
            res = run_unbounded_prob(0.25, 0.1, IIDResponder(N, 0.25, seed=trial_seed(N, i)))
            ok += res.found == N
            rounds.append(res.rounds)
        print(f"N={N:>6}: success {ok}/{args.trials}, mean rounds {np.mean(rounds):.0f}")


if __name__ == "__main__":
    main()
