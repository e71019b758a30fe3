"""Command-line entry point: ``liarsearch {search,bench,verify,oracle,gen}``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys

from . import harness
from .graph import format_graph, graph_to_json
from .oracle import minimax_oracle
from .responders import annotate_lies

TRANSCRIPT_COLUMNS = ("round", "query_kind", "query", "reply", "was_lie")
TRACE_COLUMNS = ("round", "query", "reply", "factor", "heavy")
_PARAM_FLAGS = ("gamma", "lies", "rate", "noise", "delta", "epsilon", "mode")


class UsageError(Exception):
    pass


def _number(text: str):
    t = text.strip()
    if t.lower() in ("inf", "infinity"):
        return math.inf
    try:
        return int(t)
    except ValueError:
        pass
    try:
        return float(t)
    except ValueError:
        return t


def _values(text: str | None, grid: bool):
    if text is None:
        return None
    items = [_number(x) for x in text.split(",") if x.strip()]
    if not grid and len(items) != 1:
        raise UsageError(f"expected a single value, got {text!r}")
    return items if grid and len(items) > 1 else items[0]


def _params(args, grid: bool) -> dict:
    out = {}
    for k in _PARAM_FLAGS:
        v = _values(getattr(args, k), grid)
        if v is not None:
            out[k] = v
    return out


def _add_common(p: argparse.ArgumentParser, grid: bool) -> None:
    hint = " (comma-separated values span a grid)" if grid else ""
    p.add_argument("--graph", help="graph file or generator spec such as path:n=64")
    p.add_argument("--strategy", required=True, choices=sorted(harness.STRATEGIES))
    p.add_argument("--responder", default="truthful",
                   choices=("truthful", "iid", "adversary", "adversary-targeted"))
    p.add_argument("--gamma", help="weight multiplier, or inf" + hint)
    p.add_argument("--lies", help="lie budget L" + hint)
    p.add_argument("--rate", help="linear lie rate r" + hint)
    p.add_argument("--noise", help="i.i.d. error probability p" + hint)
    p.add_argument("--delta", help="failure probability" + hint)
    p.add_argument("--epsilon", help="rate slack epsilon" + hint)
    p.add_argument("--mode", help="ternary or binary (unbounded searches)" + hint)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="liarsearch", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("search", help="single run; prints the transcript")
    _add_common(s, grid=False)
    s.add_argument("--target", type=int, help="hidden vertex (targeted responders)")
    s.add_argument("--out", help="transcript CSV path (default: stdout)")
    s.add_argument("--trace", help="write the per-round weight trace CSV here")

    b = sub.add_parser("bench", help="run an experiment grid and write a bound report")
    _add_common(b, grid=True)
    b.add_argument("--trials", type=int, default=1)
    b.add_argument("--targets", default="all", help="all, random, or a comma-separated list")
    b.add_argument("--out", help="report directory")
    b.add_argument("--workers", type=int, default=1)

    v = sub.add_parser("verify", help="check a results file against a theorem bound")
    v.add_argument("--results", required=True, help="trials.csv, report.json or report directory")
    v.add_argument("--theorem", required=True, choices=sorted(harness.FORMULAS))

    o = sub.add_parser("oracle", help="exact minimax value on a tiny instance")
    o.add_argument("--graph", required=True)
    o.add_argument("--lies", type=int, default=0)
    o.add_argument("--mode", default="vertex", choices=("vertex", "edge"))

    g = sub.add_parser("gen", help="write a generated graph to a file")
    g.add_argument("--graph", required=True)
    g.add_argument("--out", help="output path; .json selects JSON (default: stdout)")
    return ap


def _write_csv(path, columns, rows) -> None:
    fh = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(fh)
        w.writerow(columns)
        w.writerows(rows)
    finally:
        if path:
            fh.close()


def _cmd_search(args) -> int:
    spec = harness.STRATEGIES[args.strategy]
    g = harness.resolve_graph(args.graph) if spec.domain == "graph" else None
    if spec.domain == "graph" and g is None:
        raise UsageError("--graph is required for this strategy")
    target = args.target
    if args.responder != "adversary" or spec.domain == "line":
        if target is None:
            raise UsageError("--target is required for this responder")
    params = _params(args, grid=False)
    res, resp = harness.search_once(args.strategy, g, args.responder, params, target,
                                    args.seed, trace=bool(args.trace))
    records = resp.records
    if not resp.targeted and res.found is not None and resp.space is not None:
        records = annotate_lies(records, resp.space, res.found)
    _write_csv(args.out, TRANSCRIPT_COLUMNS,
               [(r.round, r.query.kind, str(r.query), r.reply,
                 "" if r.was_lie is None else int(r.was_lie)) for r in records])
    if args.trace:
        _write_csv(args.trace, TRACE_COLUMNS,
                   [(s.round, str(s.query), s.reply, repr(s.factor),
                     "" if s.heavy is None else s.heavy) for s in (res.trace or [])])
    bound = res.bound
    msg = f"found={res.found} rounds={res.rounds} bound={bound:.6g}"
    print(msg, file=sys.stderr if args.out is None else sys.stdout)
    kind = harness.FORMULAS[harness._theorem_for(args.strategy, params)]["kind"]
    ok = True
    if resp.targeted:
        ok = res.found == target
    if kind == "adversarial" and not math.isnan(bound):
        ok = ok and res.rounds <= math.ceil(bound - 1e-9)
    return 0 if ok else 1


def _cmd_bench(args) -> int:
    targets = args.targets
    if targets not in ("all", "random"):
        targets = [int(x) for x in targets.split(",")]
    cfg = harness.ExperimentConfig(
        strategy=args.strategy, graph=args.graph, responder=args.responder,
        params=_params(args, grid=True), trials=args.trials, seed=args.seed,
        targets=targets, out=args.out, workers=args.workers)
    report = harness.run_experiment(cfg)
    for row in report.rows:
        status = "PASS" if row["pass"] else "FAIL"
        line = (f"{status} {row['theorem']} {json.dumps(row['params'], default=str)} "
                f"max={row['max_rounds']} mean={row['mean_rounds']} bound={row['bound']} "
                f"failures={row['failures']}/{row['trials'] - row['excluded']}")
        if row["kind"] == "probabilistic":
            line += f" wilson=[{row['wilson_low']:.4f},{row['wilson_high']:.4f}]"
        if row.get("offending_seed") is not None:
            line += f" offending_seed={row['offending_seed']}"
        print(line)
    return 0 if report.passed else 1


def _cmd_verify(args) -> int:
    rows, strategy = harness.load_trials(args.results)
    listing = harness.verify_bounds(rows, args.theorem, strategy)
    failed = False
    for e in listing:
        if e["status"] == "excluded":
            print(f"EXCLUDED trial={e['trial']} seed={e['seed']} ({e['reason']})")
            continue
        if e["status"] == "fail":
            failed = True
            extra = f" bound={e['bound']:.6g}" if "bound" in e else f" ({e.get('reason')})"
            print(f"FAIL trial={e['trial']} rounds={e['rounds']}{extra} offending seed={e['seed']}")
        else:
            print(f"PASS trial={e['trial']} rounds={e['rounds']} bound={e['bound']:.6g}")
    return 1 if failed else 0


def _cmd_oracle(args) -> int:
    g = harness.resolve_graph(args.graph)
    print(minimax_oracle(g, args.lies, args.mode))
    return 0


def _cmd_gen(args) -> int:
    g = harness.resolve_graph(args.graph)
    text = graph_to_json(g) if args.out and args.out.endswith(".json") else format_graph(g)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


_COMMANDS = {"search": _cmd_search, "bench": _cmd_bench, "verify": _cmd_verify,
             "oracle": _cmd_oracle, "gen": _cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except (UsageError, ValueError, KeyError, FileNotFoundError) as exc:
        print(f"liarsearch {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
