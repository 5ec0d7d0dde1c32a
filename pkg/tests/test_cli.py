import json
import logging

import pytest

from commcsl.cli import main, parse_cmdline
from commcsl.semantics import trace_logger as trace_logger_

COUNTER = """
spec Counter {
  type Int
  alpha : Int = v
  shared Add(arg : Int) = v + arg requires low(arg)
}
"""

ASSIGN = """\
//@ bounds ints 0..1 heap 2
//@ { low(x) }
y := x + 1
//@ { low(y) }
"""

LEAK = """\
//@ bounds ints 0..1 heap 2
//@ ni high_in h low_out y
//@ { true }
y := h
//@ { low(y) }
"""

RACE = "//@ { true }\n(x := 1 || x := 2)\n//@ { true }\n"


@pytest.fixture
def write(tmp_path):
    def write_(name, text):
        path = tmp_path / name
        path.write_text(text)
        return str(path)

    return write_


def run_main(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def test_check_spec(capsys, write):
    path = write("counter.cspec", COUNTER)
    code, out, err = run_main(capsys, "check-spec", path, "--int-range", "0..1")
    assert code == 0
    assert out.splitlines()[0] == "spec Counter: holds"
    assert "  A.Add: holds" in out.splitlines()


def test_check_spec_fails(capsys, write):
    path = write("counter.cspec", COUNTER.replace("requires low(arg)", ""))
    code, out, err = run_main(
        capsys, "check-spec", path, "--int-range", "0..1", "--json"
    )
    assert code == 1
    report = json.loads(out)
    assert report["verdict"] == "fails"
    (spec,) = report["specs"]
    assert spec["domain"]["ints"] == [0, 1]


def test_verify(capsys, write):
    path = write("prog.ccsl", ASSIGN)
    code, out, err = run_main(capsys, "verify", path)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == f"{path}: bounded-accept"
    assert lines[1] == "  line 3: Assign: holds (bounded)"


def test_verify_reject(capsys, write):
    path = write("prog.ccsl", LEAK)
    code, out, err = run_main(capsys, "verify", path, "--json", "--timing")
    assert code == 1
    report = json.loads(out)
    assert report["verdict"] == "reject"
    assert "elapsed" in report["points"][0]


def test_verify_out(capsys, write, tmp_path):
    path = write("prog.ccsl", ASSIGN)
    out_path = tmp_path / "report.json"
    code, out, err = run_main(
        capsys, "verify", path, "--json", "--out", str(out_path)
    )
    assert code == 0
    assert out == ""
    assert json.loads(out_path.read_text())["verdict"] == "bounded-accept"


def test_run(capsys, write):
    path = write("prog.ccsl", RACE)
    code, out, err = run_main(capsys, "run", path, "--schedule", "RL")
    assert code == 0
    status, state = out.splitlines()
    assert status == "done after 3 steps"
    assert json.loads(state) == {"store": {"x": 1}, "heap": {}}


def test_run_set(capsys, write):
    path = write("prog.ccsl", "//@ { true }\ny := x + 1\n//@ { true }\n")
    code, out, err = run_main(capsys, "run", path, "--set", "x=4", "--json")
    assert code == 0
    report = json.loads(out)
    assert report["config"]["status"] == "done"
    assert report["config"]["store"] == {"x": 4, "y": 5}


def test_run_abort(capsys, write):
    path = write("prog.ccsl", "//@ { true }\ny := [3]\n//@ { true }\n")
    code, out, err = run_main(capsys, "run", path)
    assert code == 1
    assert out.startswith("aborted after 1 steps")


def test_run_fuel(capsys, write):
    text = "//@ { true }\nwhile (true) { x := x + 1 }\n//@ { true }\n"
    path = write("prog.ccsl", text)
    code, out, err = run_main(capsys, "run", path, "--max-steps", "10")
    assert code == 2
    assert out.startswith("running after 10 steps")


def test_explore(capsys, write):
    path = write("prog.ccsl", RACE)
    code, out, err = run_main(capsys, "explore", path, "--json")
    assert code == 0
    report = json.loads(out)
    assert sorted(t["store"]["x"] for t in report["terminals"]) == [1, 2]
    assert not report["truncated"]


def test_oracle(capsys, write):
    path = write("prog.ccsl", LEAK)
    code, out, err = run_main(capsys, "oracle", path)
    assert code == 1
    assert out.startswith("leak (2 initial stores)")

    code, out, err = run_main(capsys, "oracle", path, "--json")
    report = json.loads(out)
    assert report["verdict"] == "leak"
    assert report["witness"]["variable"] == "y"


def test_oracle_secure(capsys, write):
    path = write("prog.ccsl", LEAK.replace("y := h", "y := 1"))
    code, out, err = run_main(capsys, "oracle", path, "--workers", "2")
    assert code == 0
    assert out.startswith("secure")


def test_emit_smt(capsys, write, tmp_path):
    path = write("counter.cspec", COUNTER)
    outdir = tmp_path / "smt"
    code, out, err = run_main(capsys, "emit-smt", path, "--out", str(outdir))
    assert code == 0
    assert out.splitlines()[0] == f"2 scripts written to {outdir}"
    assert sorted(p.name for p in outdir.iterdir()) == [
        "Counter.A.Add.smt2",
        "Counter.B.Add.Add.smt2",
    ]


def test_emit_smt_solve(capsys, write, tmp_path):
    pytest.importorskip("z3")
    path = write("counter.cspec", COUNTER)
    outdir = str(tmp_path / "smt")
    code, out, err = run_main(
        capsys, "emit-smt", path, "--out", outdir, "--solve", "--json"
    )
    assert code == 0
    assert set(json.loads(out)["scripts"].values()) == {"unsat"}


@pytest.fixture
def trace_logger():
    yield trace_logger_
    for h in trace_logger_.handlers[:]:
        trace_logger_.removeHandler(h)
        h.close()
    trace_logger_.setLevel(logging.NOTSET)
    trace_logger_.propagate = True


def test_trace(capsys, write, tmp_path, trace_logger):
    path = write("prog.ccsl", RACE)
    trace = tmp_path / "trace.jsonl"
    code, out, err = run_main(capsys, "explore", path, "--trace", str(trace))
    assert code == 0
    for h in trace_logger.handlers:
        h.flush()
    lines = trace.read_text().splitlines()
    assert lines
    for line in lines:
        json.loads(line)


@pytest.mark.parametrize(
    "args",
    [
        [],
        ["frobnicate"],
        ["verify"],
        ["verify", "x.ccsl", "--mode", "magic"],
        ["oracle", "x.ccsl", "--workers", "0"],
        ["check-spec", "x.cspec", "--heap-max", "-1"],
    ],
)
def test_usage_error(capsys, args):
    code, out, err = run_main(capsys, *args)
    assert code == 3
    assert err.startswith("commcsl: ")


@pytest.mark.parametrize(
    "args",
    [
        ["verify", "{dir}/nope.ccsl"],
        ["run", "{prog}", "--schedule", "LX"],
        ["run", "{prog}", "--set", "x"],
        ["run", "{prog}", "--set", "x=1 +"],
        ["verify", "{prog}", "--int-range", "3..1"],
        ["oracle", "{prog}"],
        ["corpus", "--corpus-dir", "{dir}/nope"],
    ],
)
def test_input_error(capsys, write, tmp_path, args):
    prog = write("prog.ccsl", RACE)
    args = [a.format(dir=tmp_path, prog=prog) for a in args]
    code, out, err = run_main(capsys, *args)
    assert code == 3
    assert err.startswith("commcsl: error: ")


def test_parse_cmdline_defaults():
    opt = parse_cmdline(["verify", "prog.ccsl"])
    assert opt.mode == "bounded"
    assert opt.workers is None
    assert not opt.json
    opt = parse_cmdline(["corpus"])
    assert opt.pattern == "*"
    assert opt.corpus_dir is None
