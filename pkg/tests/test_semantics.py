import json
import logging

import pytest

from commcsl import Side, Status
from commcsl import errors as e
from commcsl.bounds import ExploreBounds
from commcsl.parser import parse_program
from commcsl.semantics import PlainState, Config, ABORTED, step, run, explore
from commcsl.semantics import successors, parse_schedule, round_robin


def final_values(exploration, name):
    return sorted(s.store[name] for s in exploration.terminals)


def test_alloc_lowest_free():
    assert PlainState().alloc() == 0
    assert PlainState(heap={0: 1, 2: 2}).alloc() == 1


def test_state_immutable():
    s = PlainState({"x": 1}, {0: 0})
    s2 = s.assign("x", 2).write(0, 3)
    assert s.store == {"x": 1}
    assert s.heap == {0: 0}
    assert s2 == PlainState({"x": 2}, {0: 3})
    assert hash(s2) == hash(PlainState({"x": 2}, {0: 3}))


def test_run_sequential():
    cmd = parse_program("x := alloc(5); y := [x]; [x] := y + 1")
    rv = run(cmd, PlainState())
    assert rv.config.status is Status.DONE
    assert rv.config.state == PlainState({"x": 0, "y": 5}, {0: 6})
    assert rv.schedule == ()


def test_run_abort():
    rv = run(parse_program("y := [3]"), PlainState())
    assert rv.config == ABORTED
    assert rv.steps == 1
    rv = run(parse_program("[3] := 1"), PlainState())
    assert rv.config.status is Status.ABORTED


def test_run_schedule():
    cmd = parse_program("(x := 1 || x := 2)")
    rv = run(cmd, PlainState(), parse_schedule("RL"))
    assert rv.config.state.store == {"x": 1}
    assert rv.schedule == (Side.RIGHT,)
    assert rv.steps == 3
    assert rv.to_json()["schedule"] == "R"

    rv = run(cmd, PlainState())
    assert rv.config.state.store == {"x": 2}
    assert rv.schedule == (Side.LEFT,)


def test_run_fuel():
    cmd = parse_program("while (true) { x := x + 1 }")
    rv = run(cmd, PlainState({"x": 0}), fuel=10)
    assert rv.config.status is Status.RUNNING
    assert rv.steps == 10
    with pytest.raises(e.InterfaceError):
        run(cmd, PlainState(), fuel=0)


def test_round_robin():
    it = round_robin((Side.RIGHT, Side.RIGHT))
    got = [next(it) for _ in range(5)]
    assert got == [Side.RIGHT, Side.RIGHT, Side.LEFT, Side.RIGHT, Side.LEFT]


@pytest.mark.parametrize(
    "text, sched",
    [
        ("", ()),
        ("L", (Side.LEFT,)),
        ("lLr", (Side.LEFT, Side.LEFT, Side.RIGHT)),
        (" RL ", (Side.RIGHT, Side.LEFT)),
    ],
)
def test_parse_schedule(text, sched):
    assert parse_schedule(text) == sched


@pytest.mark.parametrize("text", ["LX", "1", "L R"])
def test_parse_schedule_bad(text):
    with pytest.raises(e.InterfaceError):
        parse_schedule(text)


def test_step_done():
    config = Config.running(parse_program("skip"), PlainState())
    assert config.status is Status.DONE
    with pytest.raises(ValueError):
        step(config)


def test_step_par_choice():
    cmd = parse_program("(x := 1 || y := 2)")
    config = step(Config.running(cmd, PlainState()), Side.RIGHT)
    assert config.is_running
    assert config.state.store == {"y": 2}


def test_successors():
    cmd = parse_program("(x := 1 || y := [0])")
    succs = successors(cmd, PlainState())
    assert [s for s, _ in succs] == [(Side.LEFT,), (Side.RIGHT,)]
    assert succs[0][1].state.store == {"x": 1}
    assert succs[1][1] == ABORTED


def test_atomic_callback():
    seen = []
    cmd = parse_program("x := alloc(1); atomic { v := [x]; [x] := v + 1 }")
    rv = run(
        cmd,
        PlainState(),
        on_atomic=lambda body, before, after: seen.append((before, after)),
    )
    assert rv.config.state.heap == {0: 2}
    assert len(seen) == 1
    assert seen[0][0].heap == {0: 1}
    assert seen[0][1].heap == {0: 2}


def test_atomic_not_terminating(caplog):
    caplog.set_level(logging.WARNING, logger="commcsl")
    cmd = parse_program("atomic { while (true) { skip } }")
    config = Config.running(cmd, PlainState())
    assert step(config) == config
    assert "not terminating" in caplog.records[0].message


def test_explore_race():
    cmd = parse_program(
        "(t := x; x := t + 1 || u := x; x := u + 1)"
    )
    rv = explore(cmd, PlainState({"x": 0}))
    assert not rv.truncated
    assert not rv.aborted
    assert sorted(set(final_values(rv, "x"))) == [1, 2]
    for state, sched in rv.schedules.items():
        assert run(cmd, PlainState({"x": 0}), sched).config.state == state


def test_explore_atomic():
    cmd = parse_program(
        "(atomic { t := x; x := t + 1 } || atomic { u := x; x := u + 1 })"
    )
    rv = explore(cmd, PlainState({"x": 0}))
    assert set(final_values(rv, "x")) == {2}


def test_explore_interleavings():
    rv = explore(parse_program("(x := 1 || x := 2)"), PlainState())
    assert final_values(rv, "x") == [1, 2]


def test_explore_abort():
    cmd = parse_program("(y := [0] || x := alloc(1))")
    rv = explore(cmd, PlainState())
    assert rv.aborted
    assert rv.abort_schedule == (Side.LEFT,)
    assert rv.terminals == frozenset([PlainState({"x": 0, "y": 1}, {0: 1})])


def test_explore_skip():
    rv = explore(parse_program("skip"), PlainState({"x": 1}))
    assert rv.terminals == frozenset([PlainState({"x": 1})])
    assert rv.configs == 1


def test_explore_loops():
    cmd = parse_program(
        "(i := 0; while (i < 2) { i := i + 1 } || j := 5)"
    )
    rv = explore(cmd, PlainState())
    assert rv.terminals == frozenset([PlainState({"i": 2, "j": 5})])


@pytest.mark.parametrize(
    "bounds", [ExploreBounds(max_steps=10), ExploreBounds(max_configs=3)]
)
def test_explore_truncated(bounds):
    cmd = parse_program("while (true) { x := x + 1 }")
    rv = explore(cmd, PlainState({"x": 0}), bounds)
    assert rv.truncated
    assert not rv.terminals


def test_explore_bad_bounds():
    with pytest.raises(e.InterfaceError):
        explore(parse_program("skip"), PlainState(), ExploreBounds(0, 1))


def test_trace(caplog):
    caplog.set_level(logging.DEBUG, logger="commcsl.trace")
    run(parse_program("x := 1"), PlainState())
    records = [r for r in caplog.records if r.name == "commcsl.trace"]
    assert len(records) == 2
    first = json.loads(records[0].getMessage())
    assert first["status"] == "running"
    assert first["command"] == "x := 1"
    last = json.loads(records[-1].getMessage())
    assert last == {"status": "done", "store": {"x": 1}, "heap": {}}


def test_config_json():
    config = Config.running(parse_program("x := [0]"), PlainState({}, {0: 1}))
    assert config.to_json() == {
        "status": "running",
        "command": "x := [0]",
        "store": {},
        "heap": {"0": 1},
    }


@pytest.mark.parametrize(
    "text",
    [
        "x := alloc(1); [x] := 2; y := [x]",
        "(t := [0]; [0] := t + 1 || u := [0])",
        "(atomic { t := [0]; [0] := t + 1 } || x := alloc(3))",
    ],
)
def test_explore_frame(text):
    cmd = parse_program(text)
    frame = {10: 5, 11: 6}
    small = explore(cmd, PlainState(heap={0: 0}))
    big = explore(cmd, PlainState(heap={0: 0, **frame}))
    assert not small.aborted and not big.aborted
    assert big.terminals == frozenset(
        PlainState(s.store, {**s.heap, **frame}) for s in small.terminals
    )
