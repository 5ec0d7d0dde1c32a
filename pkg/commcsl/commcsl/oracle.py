"""
Bounded non-interference oracle.

Two executions of a program starting from stores equal on the low inputs
must end with equal low outputs, whatever the high inputs and the
interleavings. The oracle explores every schedule of every initial store
within the bounds and compares the final states pairwise.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from itertools import product
from typing import Any, Dict, Iterator, List, Mapping, NamedTuple, Optional
from typing import Sequence, Tuple

from . import errors as e
from ._enums import NIVerdict, Status
from ._workers import map_ordered
from .bounds import Domain, ExploreBounds, enumerate_values, get_workers
from .types import Type, INT, default_value
from .values import Value, sort_key, to_json
from .syntax import Command, free_vars, mod_set
from .semantics import PlainState, Schedule, Exploration, explore, run
from .outline import Outline

logger = logging.getLogger(__name__)

Store = Dict[str, Value]


class NISpec(NamedTuple):
    """
    A non-interference question about a program.

    The inputs map to their finite domain of values. Variables of the
    program which are not inputs start with the default value of their
    type.
    """

    command: Command
    low_in: Dict[str, Tuple[Value, ...]]
    high_in: Dict[str, Tuple[Value, ...]]
    low_out: Tuple[str, ...]
    bounds: ExploreBounds = ExploreBounds()
    types: Dict[str, Type] = {}

    def check(self) -> "NISpec":
        """Return the spec itself, raise `SpecError` if inconsistent."""
        both = sorted(set(self.low_in) & set(self.high_in))
        if both:
            raise e.SpecError(f"inputs both low and high: {', '.join(both)}")
        if not self.low_out:
            raise e.SpecError("no low output given")
        names = free_vars(self.command) | mod_set(self.command)
        missing = [v for v in self.low_out if v not in names]
        if missing:
            raise e.SpecError(
                f"outputs not in the program: {', '.join(missing)}"
            )
        for name, values in list(self.low_in.items()) + list(
            self.high_in.items()
        ):
            if not values:
                raise e.SpecError(f"empty domain for input {name}")
        self.bounds.check()
        return self

    def variables(self) -> List[str]:
        names = set(free_vars(self.command)) | mod_set(self.command)
        names.update(self.types)
        names.update(self.low_in)
        names.update(self.high_in)
        return sorted(names)

    def initial_stores(self, low: Mapping[str, Value]) -> Iterator[Store]:
        """Generate the initial stores with the low inputs *low*."""
        base = {
            name: default_value(self.types.get(name, INT))
            for name in self.variables()
        }
        base.update(low)
        names = sorted(self.high_in)
        for values in product(*(self.high_in[n] for n in names)):
            rv = dict(base)
            rv.update(zip(names, values))
            yield rv

    def low_assignments(self) -> Iterator[Store]:
        names = sorted(self.low_in)
        for values in product(*(self.low_in[n] for n in names)):
            yield dict(zip(names, values))


def ni_spec(
    outline: Outline,
    domain: Optional[Domain] = None,
    bounds: Optional[ExploreBounds] = None,
) -> NISpec:
    """
    Return the non-interference question declared by an annotated program.

    Inputs declared without values range over their type within *domain*.
    Raise `SpecError` if the program has no ``ni`` directive.
    """
    if outline.ni is None:
        raise e.SpecError(f"{outline.source}: no ni directive")
    if domain is None:
        domain = outline.get_domain()
    if bounds is None:
        bounds = outline.get_explore()
    types = outline.decls

    def resolve(
        inputs: Mapping[str, Optional[Tuple[Value, ...]]]
    ) -> Dict[str, Tuple[Value, ...]]:
        rv = {}
        for name, values in inputs.items():
            if values is None:
                values = enumerate_values(types.get(name, INT), domain)
            rv[name] = values
        return rv

    ni = outline.ni
    return NISpec(
        outline.command,
        resolve(ni.low_in),
        resolve(ni.high_in),
        ni.low_out,
        bounds,
        dict(types),
    ).check()


class LeakWitness(NamedTuple):
    """
    Two executions from stores equal on the low inputs, disagreeing on the
    low output `variable`.
    """

    store1: Store
    store2: Store
    schedule1: Schedule
    schedule2: Schedule
    final1: PlainState
    final2: PlainState
    variable: str

    def to_json(self) -> Dict[str, Any]:
        return {
            "variable": self.variable,
            "runs": [
                {
                    "initial": {k: to_json(v) for k, v in sorted(s.items())},
                    "schedule": "".join(str(c) for c in sched),
                    "final": f.to_json(),
                }
                for s, sched, f in (
                    (self.store1, self.schedule1, self.final1),
                    (self.store2, self.schedule2, self.final2),
                )
            ],
        }

    def replay(self, command: Command, fuel: int) -> bool:
        """Return `!True` if running both schedules reproduces the leak."""
        finals = []
        for store, sched in (
            (self.store1, self.schedule1),
            (self.store2, self.schedule2),
        ):
            res = run(command, PlainState(store), sched, fuel)
            if res.config.status is not Status.DONE:
                return False
            finals.append(res.config.state)
        if finals != [self.final1, self.final2]:
            return False
        v1 = self.final1.store.get(self.variable)
        v2 = self.final2.store.get(self.variable)
        return sort_key(v1) != sort_key(v2)


class NIResult(NamedTuple):
    """The outcome of `check_ni()`."""

    verdict: NIVerdict
    witness: Optional[LeakWitness] = None
    runs: int = 0
    truncated: int = 0
    aborted: int = 0
    note: str = ""

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "verdict": self.verdict.value,
            "runs": self.runs,
            "truncated": self.truncated,
            "aborted": self.aborted,
        }
        if self.witness is not None:
            rv["witness"] = self.witness.to_json()
        if self.note:
            rv["note"] = self.note
        return rv


def check_ni(spec: NISpec, *, workers: Optional[int] = None) -> NIResult:
    """
    Decide bounded non-interference of a program.

    Every pair of initial stores equal on the low inputs is explored with
    every schedule. A leak is reported with the smallest witness in
    lexicographic order, even if some exploration was truncated; otherwise
    the verdict is `!NIVerdict.TRUNCATED` if any exploration hit the bounds.
    Aborting runs are not compared.
    """
    spec.check()
    nworkers = get_workers(workers)
    groups = [list(spec.initial_stores(low)) for low in spec.low_assignments()]
    stores = [s for g in groups for s in g]

    def explore_one(store: Store) -> Exploration:
        return explore(spec.command, PlainState(store), spec.bounds, workers=1)

    results = map_ordered(explore_one, stores, nworkers)
    truncated = sum(1 for r in results if r.truncated)
    aborted = sum(1 for r in results if r.aborted)

    witness = None
    i = 0
    for group in groups:
        explored = list(zip(group, results[i : i + len(group)]))
        i += len(group)
        witness = _find_leak(explored, spec.low_out)
        if witness is not None:
            break

    notes = []
    if aborted:
        notes.append(f"{aborted} initial stores have aborting runs")
    if truncated:
        notes.append(f"{truncated} explorations truncated")
    note = "; ".join(notes)

    if witness is not None:
        logger.info("leak on %s", witness.variable)
        return NIResult(
            NIVerdict.LEAK, witness, len(stores), truncated, aborted, note
        )
    verdict = NIVerdict.TRUNCATED if truncated else NIVerdict.SECURE
    logger.info("non-interference: %s over %s runs", verdict.value, len(stores))
    return NIResult(verdict, None, len(stores), truncated, aborted, note)


def _find_leak(
    explored: Sequence[Tuple[Store, Exploration]], outputs: Sequence[str]
) -> Optional[LeakWitness]:
    """
    Return the smallest leak among stores sharing their low inputs.

    Pairs are ordered by the initial stores, then by output, then by final
    states. A store is also paired with itself: a low output depending on
    the schedule alone is a leak too.
    """
    ordered = sorted(explored, key=lambda se: _store_key(se[0]))
    finals = [sorted(ex.terminals) for _, ex in ordered]
    for a in range(len(ordered)):
        for b in range(a, len(ordered)):
            for var in outputs:
                pair = _differing(finals[a], finals[b], var)
                if pair is None:
                    continue
                (s1, ex1), (s2, ex2) = ordered[a], ordered[b]
                t1, t2 = pair
                return LeakWitness(
                    s1,
                    s2,
                    ex1.schedules[t1],
                    ex2.schedules[t2],
                    t1,
                    t2,
                    var,
                )
    return None


def _differing(
    ts1: Sequence[PlainState], ts2: Sequence[PlainState], var: str
) -> Optional[Tuple[PlainState, PlainState]]:
    for t1 in ts1:
        k1 = sort_key(t1.store.get(var))
        for t2 in ts2:
            if sort_key(t2.store.get(var)) != k1:
                return t1, t2
    return None


def _store_key(s: Store) -> Tuple[Any, ...]:
    return tuple((k, sort_key(v)) for k, v in sorted(s.items()))
