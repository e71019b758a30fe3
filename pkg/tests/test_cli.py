import csv
import io
import json
import subprocess
import sys

import pytest

from liarsearch.cli import TRACE_COLUMNS, TRANSCRIPT_COLUMNS, main


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


class TestSearch:
    def test_transcript_and_trace(self, tmp_path, capsys):
        tr = tmp_path / "trace.csv"
        code, out, err = run(["search", "--graph", "path:n=16", "--strategy", "vertex-fixed",
                              "--responder", "adversary-targeted", "--gamma", "2", "--lies", "1",
                              "--target", "5", "--trace", str(tr)], capsys)
        assert code == 0 and "found=5" in err
        rows = list(csv.reader(io.StringIO(out)))
        assert tuple(rows[0]) == TRANSCRIPT_COLUMNS
        assert all(r[4] in ("0", "1") for r in rows[1:])
        trace = list(csv.reader(tr.open()))
        assert tuple(trace[0]) == TRACE_COLUMNS and len(trace) == len(rows)

    def test_unbounded(self, capsys):
        code, out, err = run(["search", "--strategy", "unbounded-fixed", "--responder", "adversary",
                              "--gamma", "2", "--lies", "1", "--mode", "binary",
                              "--target", "1000"], capsys)
        assert code == 0 and "found=1000" in err

    def test_missing_target(self, capsys):
        code, _, err = run(["search", "--graph", "path:n=4", "--strategy", "vertex-fixed"], capsys)
        assert code == 2 and "target" in err

    def test_bad_strategy(self, capsys):
        assert run(["search", "--strategy", "nope"], capsys)[0] == 2

    def test_grid_value_rejected(self, capsys):
        code, _, _ = run(["search", "--graph", "path:n=4", "--strategy", "vertex-fixed",
                          "--gamma", "2,3", "--target", "1"], capsys)
        assert code == 2


class TestBench:
    def test_bench_then_verify(self, tmp_path, capsys):
        out_dir = tmp_path / "rep"
        code, out, _ = run(["bench", "--graph", "path:n=1024", "--strategy", "vertex-linear",
                            "--responder", "adversary", "--rate", "0.1,0.25,0.4", "--trials", "2",
                            "--out", str(out_dir)], capsys)
        assert code == 0 and out.count("PASS") == 3 and "bound=53" in out
        code, out, _ = run(["verify", "--results", str(out_dir), "--theorem", "vertex-linear"], capsys)
        assert code == 0 and "FAIL" not in out
        code, _, err = run(["verify", "--results", str(out_dir), "--theorem", "vertex-fixed"], capsys)
        assert code == 2 and "not covered" in err

    def test_verify_failure_exit(self, tmp_path, capsys):
        out_dir = tmp_path / "rep"
        run(["bench", "--graph", "path:n=1024", "--strategy", "vertex-linear", "--responder",
             "adversary", "--rate", "0.25", "--trials", "1", "--out", str(out_dir)], capsys)
        path = out_dir / "trials.csv"
        rows = list(csv.DictReader(path.open()))
        rows[0]["rounds"] = "54"
        with path.open("w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        code, out, _ = run(["verify", "--results", str(path), "--theorem", "vertex-linear"], capsys)
        assert code == 1 and f"offending seed={rows[0]['seed']}" in out

    def test_zero_trials(self, capsys):
        code, out, _ = run(["bench", "--graph", "path:n=4", "--strategy", "vertex-fixed",
                            "--trials", "0"], capsys)
        assert code == 0 and out == ""

    def test_json_report(self, tmp_path, capsys):
        run(["bench", "--graph", "star:leaves=4", "--strategy", "edge-errorless", "--trials", "5",
             "--out", str(tmp_path)], capsys)
        obj = json.loads((tmp_path / "report.json").read_text())
        assert obj["passed"] and obj["rows"][0]["formula"]


class TestOracleGen:
    def test_oracle(self, capsys):
        code, out, _ = run(["oracle", "--graph", "path:n=2", "--lies", "1", "--mode", "edge"], capsys)
        assert code == 0 and out.strip() == "3"

    def test_gen(self, tmp_path, capsys):
        f = tmp_path / "g.json"
        assert run(["gen", "--graph", "grid:rows=2,cols=3", "--out", str(f)], capsys)[0] == 0
        assert json.loads(f.read_text())["n"] == 6
        code, out, _ = run(["gen", "--graph", "path:n=3"], capsys)
        assert out.splitlines()[0] == "3 2"

    def test_gen_bad(self, capsys):
        assert run(["gen", "--graph", "blob:n=3"], capsys)[0] == 2


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "liarsearch", "oracle", "--graph", "path:n=4",
                           "--mode", "edge"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.strip() == "2"
