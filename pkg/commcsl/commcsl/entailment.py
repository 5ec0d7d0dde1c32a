"""
Entailment between relational assertions.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from typing import TYPE_CHECKING, Any, Dict, NamedTuple, Optional, Union

from . import errors as e
from ._enums import Mode, Verdict
from .bounds import Domain
from .syntax import Assertion, Emp, Star, And, contains
from .evaluate import is_pure_relational
from .assertions import Hints, StatePair, sat_pair
from .models import Env, assertion_env, pair_models
from .smtlib import entailment_script

if TYPE_CHECKING:
    from .resource import ResourceSpec

logger = logging.getLogger(__name__)


class Entailment(NamedTuple):
    """
    The outcome of `check_entailment()`.

    In bounded mode `counterexample` is a pair of states satisfying the
    premise but not the conclusion. `exact` is `!True` if the verdict
    doesn't depend on the bounds. In SMT mode the verdict is
    `!Verdict.UNKNOWN` and `script` contains the text to run.
    """

    verdict: Verdict
    counterexample: Optional[StatePair] = None
    script: str = ""
    note: str = ""
    checked: int = 0
    exact: bool = False

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "verdict": self.verdict.value,
            "checked": self.checked,
        }
        if self.exact:
            rv["exact"] = True
        if self.counterexample is not None:
            rv["counterexample"] = self.counterexample.to_json()
        if self.script:
            rv["script"] = self.script
        if self.note:
            rv["note"] = self.note
        return rv


def check_entailment(
    p: Assertion,
    q: Assertion,
    domain: Domain = Domain(),
    mode: Union[Mode, str] = Mode.BOUNDED,
    *,
    env: Optional[Env] = None,
    spec: Optional["ResourceSpec"] = None,
    hints: Optional[Hints] = None,
) -> Entailment:
    """
    Check that every pair of states satisfying *p* satisfies *q*.

    In bounded mode the pairs of states satisfying *p* are enumerated within
    *domain*; *hints* suggest witnesses for the existentials in *q*. In SMT
    mode a script is returned; only assertions constraining the stores can
    be exported.
    """
    mode = Mode(mode)
    types = assertion_env(And(p, q), env)
    if mode is Mode.SMT:
        # `emp` in the conclusion constrains the heaps
        if not (is_pure_relational(p) and is_pure_relational(q)) or contains(
            q, Emp
        ):
            raise e.NotSupportedError(
                "only assertions without heap and guards can be exported"
            )
        return Entailment(
            Verdict.UNKNOWN, script=entailment_script(p, q, types)
        )

    domain.check()
    if p == q:
        return Entailment(Verdict.HOLDS, note="same assertion", exact=True)
    if _conjunct_of(q, p):
        return Entailment(
            Verdict.HOLDS, note="conclusion among the premises", exact=True
        )

    ms = pair_models(p, types, domain, spec)
    unknown = 0
    for sp in ms.models:
        verdict = sat_pair(q, sp, spec, domain, hints)
        if verdict is Verdict.FAILS:
            logger.debug("entailment %s => %s fails", p, q)
            return Entailment(Verdict.FAILS, sp, checked=len(ms.models))
        if verdict is Verdict.UNKNOWN:
            unknown += 1

    if unknown:
        return Entailment(
            Verdict.UNKNOWN,
            note=f"{unknown} states with existential witnesses not found",
            checked=len(ms.models),
        )
    if not ms.complete:
        logger.warning("entailment %s => %s: %s", p, q, ms.note)
        return Entailment(
            Verdict.UNKNOWN, note=ms.note, checked=len(ms.models)
        )
    return Entailment(Verdict.HOLDS, checked=len(ms.models))


def _conjunct_of(q: Assertion, p: Assertion) -> bool:
    """
    Return `!True` if *q* is a pure conjunct of *p*.

    Assertions only constraining the stores hold on any heap.
    """
    if not is_pure_relational(q) or contains(q, Emp):
        return False
    todo = [p]
    while todo:
        a = todo.pop()
        if a == q:
            return True
        if isinstance(a, (Star, And)):
            todo.extend((a.left, a.right))
    return False
