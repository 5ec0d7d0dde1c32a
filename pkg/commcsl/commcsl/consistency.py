"""
Consistency of resource values with the recorded action arguments.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from functools import lru_cache
from typing import Dict, FrozenSet, Mapping, NamedTuple, Optional, Tuple

from . import errors as e
from ._enums import Verdict
from .resource import ResourceSpec
from .assertions import pre_holds
from .values import Value, Seq, MSet, same_value, sort_key, to_json

logger = logging.getLogger(__name__)

DEFAULT_BOUND = 8

UniqueArgs = Mapping[str, Seq]


class History(NamedTuple):
    """The arguments recorded in the guards of one execution."""

    shared: MSet = MSet()
    unique: Mapping[str, Seq] = {}

    @property
    def size(self) -> int:
        return len(self.shared) + sum(len(s) for s in self.unique.values())

    def to_json(self) -> Dict[str, object]:
        return {
            "shared": to_json(self.shared),
            "unique": {k: to_json(v) for k, v in sorted(self.unique.items())},
        }


def final_values(
    spec: ResourceSpec,
    v0: Value,
    args_s: MSet,
    args_u: Optional[UniqueArgs] = None,
    bound: int = DEFAULT_BOUND,
) -> Optional[FrozenSet[Value]]:
    """
    Return the values obtained applying the recorded actions to *v0*.

    The shared action is applied once per item of *args_s*, in any order;
    each unique action once per item of its sequence, in order; the two kinds
    can interleave. Return `!None` if there are more than *bound* actions to
    apply.
    """
    args_u = dict(args_u or {})
    for name in args_u:
        if spec.get_action(name) is None:
            raise e.InterfaceError(f"spec {spec.name} has no action {name}")
    if args_s and spec.shared is None:
        raise e.InterfaceError(f"spec {spec.name} has no shared action")

    names = sorted(args_u)
    seqs = tuple(args_u[n] for n in names)
    total = len(args_s) + sum(len(s) for s in seqs)
    if total > bound:
        logger.warning(
            "%s actions to replay exceed the bound of %s", total, bound
        )
        return None

    shared = spec.shared
    uniques = [spec.unique[n] for n in names]

    @lru_cache(maxsize=None)
    def search(
        rest: MSet, cursors: Tuple[int, ...], v: Value
    ) -> FrozenSet[Value]:
        if not rest and all(c == len(s) for c, s in zip(cursors, seqs)):
            return frozenset([v])
        rv: FrozenSet[Value] = frozenset()
        if shared is not None:
            for arg in sorted(set(rest.items), key=sort_key):
                rv |= search(rest.remove(arg), cursors, shared.apply(v, arg))
        for i, (c, s) in enumerate(zip(cursors, seqs)):
            if c < len(s):
                new = cursors[:i] + (c + 1,) + cursors[i + 1 :]
                rv |= search(rest, new, uniques[i].apply(v, s.items[c]))
        return rv

    return search(args_s, tuple(0 for _ in seqs), v0)


def consistent_from(
    spec: ResourceSpec,
    v0: Value,
    v: Value,
    args_s: MSet,
    args_u: Optional[UniqueArgs] = None,
    bound: int = DEFAULT_BOUND,
) -> Verdict:
    """
    Check if *v* can be reached from *v0* by the recorded actions.

    Return `Verdict.UNKNOWN` if the number of actions exceeds *bound*.
    """
    finals = final_values(spec, v0, args_s, args_u, bound)
    if finals is None:
        return Verdict.UNKNOWN
    if any(same_value(v, f) for f in finals):
        return Verdict.HOLDS
    return Verdict.FAILS


class Agreement(NamedTuple):
    """Outcome of `check_agreement()`."""

    verdict: Verdict
    finals: Optional[Tuple[Value, Value]] = None
    note: str = ""

    def to_json(self) -> Dict[str, object]:
        rv: Dict[str, object] = {"verdict": self.verdict.value}
        if self.finals is not None:
            rv["finals"] = [to_json(v) for v in self.finals]
        if self.note:
            rv["note"] = self.note
        return rv


def check_agreement(
    spec: ResourceSpec,
    v1: Value,
    v2: Value,
    h1: History,
    h2: History,
    bound: int = DEFAULT_BOUND,
) -> Agreement:
    """
    Check that two executions end up with low abstract resource values.

    The executions start from *v1* and *v2*, with the same abstraction, and
    record the arguments *h1* and *h2*, related by the action preconditions.
    Every pair of values consistent with the records must have the same
    abstraction. On failure the two final values are returned.
    """
    if spec.abstract(v1) != spec.abstract(v2):
        raise e.InterfaceError("the start values have different abstractions")
    if spec.shared is not None and not pre_holds(
        spec, None, h1.shared, h2.shared
    ):
        raise e.InterfaceError("the shared arguments don't satisfy the pre")
    for name in spec.unique:
        empty = Seq()
        if not pre_holds(
            spec, name, h1.unique.get(name, empty), h2.unique.get(name, empty)
        ):
            raise e.InterfaceError(
                f"the arguments of {name} don't satisfy the pre"
            )

    finals1 = final_values(spec, v1, h1.shared, h1.unique, bound)
    finals2 = final_values(spec, v2, h2.shared, h2.unique, bound)
    if finals1 is None or finals2 is None:
        return Agreement(Verdict.UNKNOWN, note=f"more than {bound} actions")

    for f1 in sorted(finals1, key=sort_key):
        a1 = spec.abstract(f1)
        for f2 in sorted(finals2, key=sort_key):
            if spec.abstract(f2) != a1:
                return Agreement(Verdict.FAILS, (f1, f2))
    return Agreement(Verdict.HOLDS)
