"""
commcsl -- non-interference of concurrent programs via abstract commutativity
"""

# Copyright (C) 2022 The CommCSL Team

import logging

from ._enums import Verdict, NIVerdict, OutlineVerdict, Property, Mode, Side
from ._enums import Status, ActionKind
from .errors import Error, InterfaceError, ProgramError, ParseError
from .errors import TypeCheckError, SpecError, OutlineError, NotSupportedError
from .bounds import Domain, ExploreBounds
from .values import Pair, Seq, MSet, FMap
from .heaps import ExtendedHeap, heap_add, heap_sub, compatible
from .parser import parse_program, parse_expr, parse_assertion
from .semantics import PlainState, Config, step, run, explore
from .assertions import StatePair, sat_pair, pre_holds
from .classify import classify
from .entailment import check_entailment
from .resource import ResourceSpec, Action, check_validity, parse_spec
from .consistency import consistent_from, check_agreement
from .outline import Outline, ResourceContext, parse_outline, load_outline
from .checker import RuleInstance, check_outline, check_side_conditions
from .oracle import NISpec, LeakWitness, check_ni
from .corpus import run_corpus
from .smtlib import emit_smtlib

from .version import __version__ as __version__  # noqa: F401

# Set the logger to a quiet default, can be enabled if needed
logger = logging.getLogger("commcsl")
if logger.level == logging.NOTSET:
    logger.setLevel(logging.WARNING)

__all__ = [
    "Action",
    "ActionKind",
    "Config",
    "Domain",
    "Error",
    "ExploreBounds",
    "ExtendedHeap",
    "FMap",
    "InterfaceError",
    "LeakWitness",
    "MSet",
    "Mode",
    "NISpec",
    "NIVerdict",
    "NotSupportedError",
    "Outline",
    "OutlineError",
    "OutlineVerdict",
    "Pair",
    "ParseError",
    "PlainState",
    "ProgramError",
    "Property",
    "ResourceContext",
    "ResourceSpec",
    "RuleInstance",
    "Seq",
    "Side",
    "SpecError",
    "StatePair",
    "Status",
    "TypeCheckError",
    "Verdict",
    "check_agreement",
    "check_entailment",
    "check_ni",
    "check_outline",
    "check_side_conditions",
    "check_validity",
    "classify",
    "compatible",
    "consistent_from",
    "emit_smtlib",
    "explore",
    "heap_add",
    "heap_sub",
    "load_outline",
    "parse_assertion",
    "parse_expr",
    "parse_outline",
    "parse_program",
    "parse_spec",
    "pre_holds",
    "run",
    "run_corpus",
    "sat_pair",
    "step",
]
