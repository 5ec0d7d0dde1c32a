"""
Enum values for commcsl

The string values are the ones used in the JSON reports.
"""

# Copyright (C) 2022 The CommCSL Team

from enum import Enum, IntEnum
from typing import Iterable


class Verdict(str, Enum):
    """
    Outcome of a bounded check.
    """

    __module__ = "commcsl"

    HOLDS = "holds"
    """The property holds on every case within the bounds."""
    FAILS = "fails"
    """A counterexample was found."""
    UNKNOWN = "unknown"
    """The bounds were hit before a decision could be made."""

    @classmethod
    def combine(cls, verdicts: Iterable["Verdict"]) -> "Verdict":
        """Return the verdict of a conjunction of checks."""
        rv = cls.HOLDS
        for v in verdicts:
            if v is cls.FAILS:
                return cls.FAILS
            if v is cls.UNKNOWN:
                rv = cls.UNKNOWN
        return rv


class Side(IntEnum):
    """
    Branch choice at a parallel composition.
    """

    __module__ = "commcsl"

    LEFT = 0
    """Step the left thread (rule Par1)."""
    RIGHT = 1
    """Step the right thread (rule Par2)."""

    def __str__(self) -> str:
        return "L" if self is Side.LEFT else "R"


class Status(str, Enum):
    """
    Kind of an execution configuration.
    """

    __module__ = "commcsl"

    RUNNING = "running"
    DONE = "done"
    ABORTED = "aborted"


class NIVerdict(str, Enum):
    """
    Outcome of a bounded non-interference check.
    """

    __module__ = "commcsl"

    SECURE = "secure"
    """No pair of executions within bounds disagrees on a low output."""
    LEAK = "leak"
    """A replayable pair of executions disagrees on a low output."""
    TRUNCATED = "truncated"
    """No leak found, but some exploration was cut by the bounds."""


class OutlineVerdict(str, Enum):
    """
    Overall outcome of a proof outline check.
    """

    __module__ = "commcsl"

    ACCEPT = "accept"
    """Every point holds, no bounded check was involved."""
    BOUNDED_ACCEPT = "bounded-accept"
    """Every point holds, some of them only within the bounds."""
    REJECT = "reject"
    """Some point fails or could not be decided."""


class Property(str, Enum):
    """
    Assertion properties decided by `~commcsl.classify.classify()`.
    """

    __module__ = "commcsl"

    UNARY = "unary"
    PRECISE = "precise"
    UNAMBIGUOUS = "unambiguous"


class ActionKind(str, Enum):
    """
    Kind of a resource action.
    """

    __module__ = "commcsl"

    SHARED = "shared"
    UNIQUE = "unique"


class Mode(str, Enum):
    """
    How entailments are discharged.
    """

    __module__ = "commcsl"

    BOUNDED = "bounded"
    SMT = "smt"
