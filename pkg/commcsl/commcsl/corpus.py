"""
Regression corpus of annotated programs.

Each entry is a directory containing ``prog.ccsl``, optionally
``spec.cspec``, and ``expected.json`` with the verdicts the tools are
expected to return. Keys of ``expected.json``:

- ``specs``: map from spec name to its validity verdict;
- ``outline``: the verdict of the proof outline check;
- ``guards``: whether the shared resources of terminating runs end up
  consistent with the actions performed, recorded as the guards would;
- ``oracle``: the verdict of the non-interference oracle;
- ``notes``: free text about the scaling of the entry.
"""

# Copyright (C) 2022 The CommCSL Team

import os
import json
import time
import logging
from fnmatch import fnmatch
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

from . import errors as e
from ._enums import Side, Status, Verdict
from ._workers import map_ordered
from .bounds import Domain, get_workers
from .values import MSet, Seq, Value
from .syntax import NOPOS, Atomic, Command, PointsTo, Pos, Var, star_conjuncts
from .evaluate import eval_expr
from .resource import check_validity
from .outline import AtomicTag, OStmt, Outline, OutlineItem, Point
from .outline import ResourceContext, ShareTag, UnshareTag, load_outline
from .checker import check_outline
from .consistency import consistent_from
from .oracle import check_ni, ni_spec
from .semantics import PlainState, run

logger = logging.getLogger(__name__)

PROGRAM_FILE = "prog.ccsl"
EXPECTED_FILE = "expected.json"


class CorpusEntry(NamedTuple):
    name: str
    path: str
    expected: Dict[str, Any]

    @property
    def program(self) -> str:
        return os.path.join(self.path, PROGRAM_FILE)

    @property
    def notes(self) -> str:
        return str(self.expected.get("notes", ""))


class StageResult(NamedTuple):
    """The outcome of one stage of a corpus entry."""

    stage: str
    expected: Optional[str]
    actual: str
    elapsed: float = 0.0

    @property
    def passed(self) -> bool:
        return self.expected == self.actual

    def to_json(self) -> Dict[str, Any]:
        return {
            "stage": self.stage,
            "expected": self.expected,
            "actual": self.actual,
            "passed": self.passed,
        }


class EntryResult(NamedTuple):
    name: str
    stages: List[StageResult]
    error: str = ""

    @property
    def passed(self) -> bool:
        return not self.error and all(s.passed for s in self.stages)

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "name": self.name,
            "passed": self.passed,
            "stages": [s.to_json() for s in self.stages],
        }
        if self.error:
            rv["error"] = self.error
        return rv


class CorpusReport(NamedTuple):
    """The outcome of `run_corpus()`."""

    entries: List[EntryResult]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.entries)

    @property
    def mismatches(self) -> List[str]:
        rv = []
        for r in self.entries:
            if r.error:
                rv.append(f"{r.name}: {r.error}")
            for s in r.stages:
                if not s.passed:
                    rv.append(
                        f"{r.name}, {s.stage}: expected {s.expected},"
                        f" got {s.actual}"
                    )
        return rv

    def table(self) -> str:
        """Return a pass/fail table of the stages."""
        rows = [("entry", "stage", "expected", "actual", "")]
        for r in self.entries:
            if r.error:
                rows.append((r.name, "-", "-", "error", "FAIL"))
            for s in r.stages:
                rows.append(
                    (
                        r.name,
                        s.stage,
                        s.expected or "-",
                        s.actual,
                        "ok" if s.passed else "FAIL",
                    )
                )
        widths = [max(len(row[i]) for row in rows) for i in range(5)]
        return "\n".join(
            "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
            for row in rows
        )

    def to_json(self) -> Dict[str, Any]:
        return {
            "passed": self.passed,
            "entries": [r.to_json() for r in self.entries],
        }


def default_root() -> str:
    """Return the corpus directory: ``COMMCSL_CORPUS`` or ``./corpus``."""
    return os.environ.get("COMMCSL_CORPUS", "corpus")


def load_entries(root: str, pattern: str = "*") -> List[CorpusEntry]:
    """Return the entries of the corpus in *root* whose name match *pattern*."""
    try:
        names = sorted(os.listdir(root))
    except OSError as ex:
        raise e.InterfaceError(
            f"can't read corpus {root}: {ex.strerror}"
        ) from None

    rv = []
    for name in names:
        path = os.path.join(root, name)
        if not fnmatch(name, pattern) or not os.path.isdir(path):
            continue
        if not os.path.exists(os.path.join(path, PROGRAM_FILE)):
            logger.warning("corpus entry %s has no %s", name, PROGRAM_FILE)
            continue
        expected: Dict[str, Any] = {}
        exp_path = os.path.join(path, EXPECTED_FILE)
        if os.path.exists(exp_path):
            with open(exp_path, encoding="utf-8") as f:
                try:
                    expected = json.load(f)
                except ValueError as ex:
                    raise e.InterfaceError(f"bad {exp_path}: {ex}") from None
        rv.append(CorpusEntry(name, path, expected))
    return rv


def actual_verdicts(
    entry: CorpusEntry, *, workers: Optional[int] = None
) -> Dict[str, Any]:
    """Run the tools on *entry*; return the verdicts as in expected.json."""
    return _verdicts(entry, load_outline(entry.program), workers)[0]


def _verdicts(
    entry: CorpusEntry, outline: Outline, workers: Optional[int]
) -> Tuple[Dict[str, Any], Dict[str, float]]:
    rv: Dict[str, Any] = {}
    times: Dict[str, float] = {}
    domain = outline.get_domain()

    specs = {}
    for name, spec in outline.specs.items():
        t0 = time.monotonic()
        validity = check_validity(spec, domain, workers=workers)
        specs[name] = validity.verdict.value
        times[f"spec {name}"] = time.monotonic() - t0
    if specs:
        rv["specs"] = specs

    if any(isinstance(item, Point) for item in outline.items):
        t0 = time.monotonic()
        checked = check_outline(outline, domain, workers=workers)
        rv["outline"] = checked.verdict.value
        times["outline"] = time.monotonic() - t0

    t0 = time.monotonic()
    guards = check_recorded_actions(outline, domain)
    if guards is not None:
        rv["guards"] = guards.value
        times["guards"] = time.monotonic() - t0

    if outline.ni is not None:
        t0 = time.monotonic()
        result = check_ni(ni_spec(outline, domain), workers=workers)
        rv["oracle"] = result.verdict.value
        times["oracle"] = time.monotonic() - t0
    return rv, times


def run_entry(
    entry: CorpusEntry, *, workers: Optional[int] = None
) -> EntryResult:
    """Check one entry of the corpus against its expected verdicts."""
    logger.info("corpus entry %s", entry.name)
    try:
        outline = load_outline(entry.program)
        actual, times = _verdicts(entry, outline, workers)
    except e.Error as ex:
        logger.error("corpus entry %s: %s", entry.name, ex)
        return EntryResult(entry.name, [], str(ex))

    stages = []
    expected_specs = entry.expected.get("specs", {})
    for name, verdict in actual.get("specs", {}).items():
        stages.append(
            StageResult(
                f"spec {name}",
                expected_specs.get(name),
                verdict,
                times[f"spec {name}"],
            )
        )
    for stage in ("outline", "guards", "oracle"):
        if stage in actual or stage in entry.expected:
            stages.append(
                StageResult(
                    stage,
                    entry.expected.get(stage),
                    actual.get(stage, "missing"),
                    times.get(stage, 0.0),
                )
            )
    return EntryResult(entry.name, stages)


def run_corpus(
    pattern: str = "*",
    root: Optional[str] = None,
    *,
    workers: Optional[int] = None,
) -> CorpusReport:
    """
    Check the corpus entries matching *pattern*.

    The entries are independent and are checked in parallel by *workers*;
    each entry is checked on a single thread.
    """
    entries = load_entries(root or default_root(), pattern)
    if not entries:
        raise e.InterfaceError(f"no corpus entry matching {pattern!r}")
    results = map_ordered(
        lambda entry: run_entry(entry, workers=1), entries, get_workers(workers)
    )
    rv = CorpusReport(results)
    for m in rv.mismatches:
        logger.warning("mismatch: %s", m)
    return rv


# Action recording

# Schedules of the recorded runs: left thread first, right thread first.
RECORD_SCHEDULES: Tuple[Tuple[Side, ...], ...] = ((), (Side.RIGHT,))

ActionSites = Dict[Pos, Tuple[ResourceContext, AtomicTag]]


def action_sites(outline: Outline) -> ActionSites:
    """
    Return the atomic blocks of *outline* tagged with an action.

    The blocks are identified by the position of their body.
    """
    rv: ActionSites = {}

    def walk(
        items: Sequence[OutlineItem], ctx: Optional[ResourceContext]
    ) -> None:
        tag = None
        for item in items:
            if isinstance(item, ShareTag):
                ctx = outline.contexts.get(item.context)
            elif isinstance(item, UnshareTag):
                ctx = None
            elif isinstance(item, AtomicTag):
                tag = item
            elif isinstance(item, OStmt):
                cmd = item.cmd
                if tag is not None and ctx is not None and isinstance(
                    cmd, Atomic
                ):
                    if cmd.body.pos != NOPOS:
                        rv[cmd.body.pos] = (ctx, tag)
                tag = None
                for block in item.blocks:
                    walk(block, ctx)

    walk(outline.items, None)
    return rv


class ActionRecorder:
    """
    Record the actions performed on shared resources during a run.

    Pass the object as *on_atomic* to `semantics.run()`: the arguments of
    the tagged atomic blocks are collected like the guards of the proof
    would, the resource values are read from the heap through the context
    invariant.
    """

    def __init__(self, sites: ActionSites):
        self.sites = sites
        self.contexts: Dict[str, ResourceContext] = {}
        self.start: Dict[str, Value] = {}
        self.end: Dict[str, Value] = {}
        self.shared: Dict[str, List[Value]] = {}
        self.unique: Dict[str, Dict[str, List[Value]]] = {}

    def __call__(
        self, body: Command, before: PlainState, after: PlainState
    ) -> None:
        site = self.sites.get(body.pos)
        if site is None:
            return
        ctx, tag = site
        v0 = resource_value(ctx, before)
        v1 = resource_value(ctx, after)
        if v0 is None or v1 is None:
            logger.warning("resource %s not found in the heap", ctx.name)
            return

        name = ctx.name
        self.contexts[name] = ctx
        self.start.setdefault(name, v0)
        self.end[name] = v1
        arg = eval_expr(tag.arg, before.store)
        if tag.action is None:
            self.shared.setdefault(name, []).append(arg)
        else:
            args = self.unique.setdefault(name, {})
            args.setdefault(tag.action, []).append(arg)

    def check(self) -> Verdict:
        """Check the final resource values against the recorded actions."""
        rv = Verdict.HOLDS
        for name, v0 in self.start.items():
            verdict = consistent_from(
                self.contexts[name].spec,
                v0,
                self.end[name],
                MSet(self.shared.get(name, ())),
                {k: Seq(v) for k, v in self.unique.get(name, {}).items()},
            )
            if verdict is Verdict.FAILS:
                logger.warning("resource %s: inconsistent final value", name)
                return verdict
            if verdict is Verdict.UNKNOWN:
                rv = verdict
        return rv


def resource_value(ctx: ResourceContext, state: PlainState) -> Optional[Value]:
    """
    Return the value of a shared resource in *state*.

    The invariant must contain a points-to conjunct whose value is the
    resource value, otherwise return `!None`.
    """
    for conj in star_conjuncts(ctx.invariant):
        if isinstance(conj, PointsTo) and conj.value == Var(ctx.param):
            loc = eval_expr(conj.addr, state.store)
            if not isinstance(loc, int):
                return None
            return state.heap.get(loc)
    return None


def check_recorded_actions(
    outline: Outline, domain: Optional[Domain] = None
) -> Optional[Verdict]:
    """
    Run the program on the initial stores of its ``ni`` directive and check
    that every shared resource ends up consistent with the actions recorded.

    Return `!None` if the program has no tagged atomic blocks or no ``ni``
    directive. Runs not terminating within the bounds are ignored; if no run
    terminates the verdict is `!Verdict.UNKNOWN`.
    """
    sites = action_sites(outline)
    if not sites or outline.ni is None:
        return None
    ni = ni_spec(outline, domain)

    rv = Verdict.HOLDS
    done = 0
    for low in ni.low_assignments():
        for store in ni.initial_stores(low):
            for schedule in RECORD_SCHEDULES:
                recorder = ActionRecorder(sites)
                result = run(
                    ni.command,
                    PlainState(store),
                    schedule,
                    ni.bounds.max_steps,
                    on_atomic=recorder,
                )
                if result.config.status is not Status.DONE:
                    continue
                done += 1
                verdict = recorder.check()
                if verdict is Verdict.FAILS:
                    return verdict
                if verdict is Verdict.UNKNOWN:
                    rv = verdict
    return rv if done else Verdict.UNKNOWN
