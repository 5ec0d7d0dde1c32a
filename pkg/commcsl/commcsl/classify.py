"""
Classification of assertions: unary, precise and unambiguous assertions.

A fast syntactic check is tried first; if it isn't conclusive the property
is checked on the states enumerated within a finite domain.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from typing import TYPE_CHECKING, Any, Dict, FrozenSet, List, NamedTuple
from typing import Optional, Tuple, Union

from . import errors as e
from ._enums import Property, Verdict
from .bounds import Domain
from .heaps import ExtendedHeap, compatible
from .types import INT
from .values import Value, sort_key, to_json
from .syntax import Assertion, Expr, Var, BinOp, Pure, PointsTo, Star
from .syntax import And, Exists, SGuard, UGuard, Implies, Low, NoGuard
from .syntax import AllPre, Emp, contains, free_vars
from .assertions import StatePair, sat_pair
from .models import Env, assertion_env, state_models

if TYPE_CHECKING:
    from .resource import ResourceSpec

logger = logging.getLogger(__name__)


class Classification(NamedTuple):
    """
    The outcome of `classify()`.

    On failure `witness` contains the states showing the property doesn't
    hold: two states satisfying the assertion whose mix doesn't (unary), two
    compatible heaps claimed by it with the same store (precise), the same
    state satisfying it with two values of the variable (unambiguous).
    """

    property: Property
    verdict: Verdict
    witness: Optional[StatePair] = None
    syntactic: bool = False
    note: str = ""
    variable: Optional[str] = None

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "property": self.property.value,
            "verdict": self.verdict.value,
        }
        if self.variable is not None:
            rv["variable"] = self.variable
        if self.syntactic:
            rv["syntactic"] = True
        if self.witness is not None:
            rv["witness"] = self.witness.to_json()
        if self.note:
            rv["note"] = self.note
        return rv


def classify(
    a: Assertion,
    kind: Union[Property, str],
    domain: Domain = Domain(),
    *,
    var: Optional[str] = None,
    env: Optional[Env] = None,
    spec: Optional["ResourceSpec"] = None,
) -> Classification:
    """
    Decide if the assertion *a* has the property *kind*.

    *var* is the variable to check for `!Property.UNAMBIGUOUS`. *env* gives
    the types of the free variables not elaborated in *a*.
    """
    kind = Property(kind)
    domain.check()
    if kind is Property.UNARY:
        rv = _unary(a, domain, env, spec)
    elif kind is Property.PRECISE:
        rv = _precise(a, domain, env, spec)
    else:
        if var is None:
            raise e.InterfaceError("unambiguous requires a variable")
        rv = _unambiguous(a, var, domain, env, spec)

    logger.info(
        "%s%s: %s%s",
        kind.value,
        f"({var})" if var else "",
        rv.verdict.value,
        " (syntactic)" if rv.syntactic else "",
    )
    return rv


# Syntactic checks


def syntactically_unary(a: Assertion) -> bool:
    """
    Return `!True` if *a* constrains each state independently.

    Assertions without ``low()``, ``allpre()`` and implications (whose
    condition must be low) are unary.
    """
    return not contains(a, Low, AllPre, Implies)


def syntactically_precise(
    a: Assertion, bound: FrozenSet[str] = frozenset()
) -> bool:
    """
    Return `!True` if *a* claims a single sub-heap of any heap.

    Points-to and guard assertions whose location and arguments don't depend
    on the existential variables in *bound* claim a single sub-heap, and so
    does `!emp`. Boolean, ``low()`` and ``allpre()`` assertions hold on any
    heap: they only keep a conjunction precise, not a separating one.
    """
    if isinstance(a, Emp):
        return True
    if isinstance(a, PointsTo):
        return not free_vars(a.addr) & bound
    if isinstance(a, (SGuard, UGuard)):
        return not free_vars(a.args) & bound
    if isinstance(a, Star):
        return syntactically_precise(a.left, bound) and syntactically_precise(
            a.right, bound
        )
    if isinstance(a, And):
        return syntactically_precise(a.left, bound) or syntactically_precise(
            a.right, bound
        )
    if isinstance(a, NoGuard):
        return syntactically_precise(a.body, bound)
    if isinstance(a, Exists):
        return syntactically_precise(a.body, bound | {a.name})
    return False


def syntactically_unambiguous(a: Assertion, var: str) -> bool:
    """
    Return `!True` if a conjunct of *a* fixes the value of *var*.

    The variable is fixed by an equality with an expression not using it,
    by being the value of a cell, or the arguments of a whole guard.
    """
    for conj in _conjuncts(a):
        if isinstance(conj, Pure) and isinstance(conj.expr, BinOp):
            if conj.expr.op == "==" and (
                _is_fixed(conj.expr.left, conj.expr.right, var)
                or _is_fixed(conj.expr.right, conj.expr.left, var)
            ):
                return True
        elif isinstance(conj, PointsTo):
            if _is_var(conj.value, var) and var not in free_vars(conj.addr):
                return True
        elif isinstance(conj, SGuard):
            if conj.frac == 1 and _is_var(conj.args, var):
                return True
        elif isinstance(conj, UGuard):
            if _is_var(conj.args, var):
                return True
    return False


def _is_var(e: Expr, name: str) -> bool:
    return isinstance(e, Var) and e.name == name


def _is_fixed(lhs: Expr, rhs: Expr, var: str) -> bool:
    return _is_var(lhs, var) and var not in free_vars(rhs)


def _conjuncts(a: Assertion) -> List[Assertion]:
    if isinstance(a, (Star, And)):
        return _conjuncts(a.left) + _conjuncts(a.right)
    if isinstance(a, NoGuard):
        return _conjuncts(a.body)
    return [a]


# Bounded checks


def _unary(
    a: Assertion,
    domain: Domain,
    env: Optional[Env],
    spec: Optional["ResourceSpec"],
) -> Classification:
    if syntactically_unary(a):
        return Classification(Property.UNARY, Verdict.HOLDS, syntactic=True)

    ms = state_models(a, assertion_env(a, env), domain, spec)
    models = ms.models
    if len(models) ** 2 > domain.cap:
        return Classification(
            Property.UNARY,
            Verdict.UNKNOWN,
            note=f"{len(models)} states: too many pairs to check",
        )

    unknown = False
    for m1 in models:
        for m2 in models:
            if m1 is m2:
                continue
            sp = StatePair(m1.s1, m1.g1, m2.s1, m2.g1)
            verdict = sat_pair(a, sp, spec, domain)
            if verdict is Verdict.FAILS:
                return Classification(Property.UNARY, Verdict.FAILS, sp)
            if verdict is Verdict.UNKNOWN:
                unknown = True

    if unknown or not ms.complete:
        return Classification(
            Property.UNARY,
            Verdict.UNKNOWN,
            note=ms.note or "some pairs of states couldn't be decided",
        )
    return Classification(Property.UNARY, Verdict.HOLDS)


def _precise(
    a: Assertion,
    domain: Domain,
    env: Optional[Env],
    spec: Optional["ResourceSpec"],
) -> Classification:
    if syntactically_precise(a):
        return Classification(Property.PRECISE, Verdict.HOLDS, syntactic=True)

    # the heaps absorbed by a are sub-heaps satisfying it too
    ms = state_models(a, assertion_env(a, env), domain, spec)
    by_store: Dict[Tuple[Any, ...], List[StatePair]] = {}
    for m in ms.models:
        by_store.setdefault(_store_key(m.s1), []).append(m)

    for group in by_store.values():
        heaps: List[ExtendedHeap] = []
        for m in group:
            if m.g1 not in heaps:
                heaps.append(m.g1)
        for i, h1 in enumerate(heaps):
            for h2 in heaps[i + 1 :]:
                if compatible(h1, h2):
                    s = group[0].s1
                    return Classification(
                        Property.PRECISE,
                        Verdict.FAILS,
                        StatePair(s, h1, s, h2),
                    )

    if not ms.complete:
        return Classification(Property.PRECISE, Verdict.UNKNOWN, note=ms.note)
    return Classification(Property.PRECISE, Verdict.HOLDS)


def _unambiguous(
    a: Assertion,
    var: str,
    domain: Domain,
    env: Optional[Env],
    spec: Optional["ResourceSpec"],
) -> Classification:
    if syntactically_unambiguous(a, var):
        return Classification(
            Property.UNAMBIGUOUS, Verdict.HOLDS, syntactic=True, variable=var
        )

    types = assertion_env(a, env)
    if var not in types:
        types[var] = (env or {}).get(var, INT)
    ms = state_models(a, types, domain, spec)

    seen: Dict[Tuple[Any, ...], Value] = {}
    for m in ms.models:
        rest = {k: v for k, v in m.s1.items() if k != var}
        key = (_store_key(rest), m.g1)
        value = m.s1[var]
        if key not in seen:
            seen[key] = value
        elif sort_key(seen[key]) != sort_key(value):
            s1 = dict(rest, **{var: seen[key]})
            return Classification(
                Property.UNAMBIGUOUS,
                Verdict.FAILS,
                StatePair(s1, m.g1, m.s1, m.g1),
                variable=var,
                note=f"{var} can be {to_json(seen[key])} or {to_json(value)}",
            )

    if not ms.complete:
        return Classification(
            Property.UNAMBIGUOUS, Verdict.UNKNOWN, note=ms.note, variable=var
        )
    return Classification(Property.UNAMBIGUOUS, Verdict.HOLDS, variable=var)


def _store_key(s: Any) -> Tuple[Any, ...]:
    return tuple((k, sort_key(v)) for k, v in sorted(s.items()))


__all__ = [
    "Classification",
    "classify",
    "syntactically_unary",
    "syntactically_precise",
    "syntactically_unambiguous",
]
