"""Watch the weighted-median search corner a lying responder on a tree.

Every round prints the queried vertex, the reply, how much of the total
weight survived, and the vertices that are still within the lie budget.
"""

import argparse
import math

from liarsearch import GreedyAdversary, generate_graph, run_vertex_fixed
from liarsearch.bounds import vertex_fixed_bound
from liarsearch.responders import Budget


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=40)
    ap.add_argument("--lies", type=int, default=2)
    ap.add_argument("--gamma", type=float, default=2.0)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    g = generate_graph("random-tree", n=args.n, seed=args.seed)
    adv = GreedyAdversary(Budget.fixed(args.lies), seed=args.seed)
    res = run_vertex_fixed(g, args.lies, args.gamma, adv, trace=True)

    print(f"random tree, n={g.n}, max degree {g.max_degree}, L={args.lies}, gamma={args.gamma}")
    print(f"{'round':>5} {'query':>12} {'reply':>5} {'factor':>7}  alive")
    lies = [0] * g.n
    for snap, rec in zip(res.trace, res.transcript):
        ok = adv.space.compatible(rec.query, rec.reply)
        lies = [c + (not k) for c, k in zip(lies, ok)]
        alive = sum(c <= args.lies for c in lies)
        print(f"{snap.round:>5} {str(snap.query):>12} {snap.reply:>5} {snap.factor:>7.3f}  {alive}")
    bound = math.ceil(vertex_fixed_bound(g.n, args.lies, args.gamma) - 1e-9)
    print(f"found {res.found} after {res.rounds} rounds (bound {bound})")
    print("lies told against the found vertex:",
          sum(not adv.space.compatible(r.query, r.reply)[res.found] for r in res.transcript))


if __name__ == "__main__":
    main()
