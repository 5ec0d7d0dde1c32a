"""
Resource specifications and their validity check.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from collections import OrderedDict
from typing import Any, Callable, Dict, List, NamedTuple
from typing import Optional, Sequence, Set, Tuple

from . import errors as e
from ._enums import ActionKind, Verdict
from ._workers import map_ordered
from .bounds import Domain, count_values, enumerate_values, get_workers
from .types import Type
from .values import Value, to_json
from .syntax import Expr, Var, Assertion, TRUE, free_vars, subst
from .parser import Parser
from .evaluate import eval_expr, holds_relational, is_pure_relational
from .typecheck import check_expr, check_assertion

logger = logging.getLogger(__name__)


class Action:
    """
    An action allowed on a shared resource.

    :param body: the new resource value, an expression over ``v`` (the
        current value) and ``arg``.
    :param pre: the relational precondition on the pair of arguments of two
        executions, a pure relational assertion over ``arg``.
    """

    __slots__ = ("name", "kind", "arg_type", "body", "pre")

    def __init__(
        self,
        name: str,
        kind: ActionKind,
        arg_type: Type,
        body: Expr,
        pre: Assertion = TRUE,
    ):
        self.name = name
        self.kind = kind
        self.arg_type = arg_type
        self.body = body
        self.pre = pre

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.kind.value} {self.name}>"

    @property
    def shared(self) -> bool:
        return self.kind is ActionKind.SHARED

    def apply(self, v: Value, arg: Value) -> Value:
        return eval_expr(self.body, {"v": v, "arg": arg})

    def pre_holds(self, arg1: Value, arg2: Value) -> bool:
        return holds_relational(self.pre, {"arg": arg1}, {"arg": arg2})


class ResourceSpec:
    """
    A resource specification: an abstraction function, at most one shared
    action and a family of unique actions, indexed by name.
    """

    def __init__(
        self,
        name: str,
        value_type: Type,
        alpha_type: Type,
        alpha: Expr,
        shared: Optional[Action] = None,
        unique: Sequence[Action] = (),
    ):
        self.name = name
        self.value_type = value_type
        self.alpha_type = alpha_type
        self.alpha = alpha
        self.shared = shared
        self.unique: Dict[str, Action] = OrderedDict(
            (a.name, a) for a in unique
        )

    def __repr__(self) -> str:
        names = ", ".join(a.name for a in self.actions)
        return f"<{self.__class__.__name__} {self.name} ({names})>"

    @property
    def actions(self) -> Tuple[Action, ...]:
        """The shared action, if any, followed by the unique ones."""
        rv = tuple(self.unique.values())
        if self.shared is not None:
            rv = (self.shared,) + rv
        return rv

    def get_action(self, name: Optional[str]) -> Optional[Action]:
        """Return the unique action *name*, or the shared action if `!None`."""
        if name is None:
            return self.shared
        return self.unique.get(name)

    def abstract(self, v: Value) -> Value:
        return eval_expr(self.alpha, {"v": v})

    def relevant_pairs(self) -> List[Tuple[Action, Action]]:
        """
        Return the pairs of actions that must commute.

        The shared action is paired with itself and with every unique action;
        every unique action with every other unique action, once per
        unordered pair.
        """
        rv: List[Tuple[Action, Action]] = []
        if self.shared is not None:
            rv.append((self.shared, self.shared))
            rv.extend((self.shared, a) for a in self.unique.values())
        uniques = list(self.unique.values())
        for i, a in enumerate(uniques):
            for b in uniques[i + 1 :]:
                rv.append((a, b))
        return rv


def must_commute(a: Action, b: Action) -> bool:
    """Return `!True` if *a* and *b* form a relevant pair, in either order."""
    return a.shared or b.shared or a.name != b.name


# Validity


class Obligation(NamedTuple):
    """The result of checking one validity condition."""

    condition: str  # "A" or "B"
    actions: Tuple[str, ...]
    verdict: Verdict
    counterexample: Optional[Dict[str, Value]] = None
    note: str = ""

    @property
    def name(self) -> str:
        return ".".join((self.condition,) + self.actions)

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "condition": self.condition,
            "actions": list(self.actions),
            "verdict": self.verdict.value,
        }
        if self.counterexample is not None:
            rv["counterexample"] = {
                k: to_json(v) for k, v in self.counterexample.items()
            }
        if self.note:
            rv["note"] = self.note
        return rv


class ValidityReport(NamedTuple):
    """The outcome of `check_validity()`."""

    spec: str
    domain: Domain
    obligations: List[Obligation]

    @property
    def verdict(self) -> Verdict:
        return Verdict.combine(o.verdict for o in self.obligations)

    @property
    def verdict_a(self) -> Dict[str, Verdict]:
        return {
            o.actions[0]: o.verdict
            for o in self.obligations
            if o.condition == "A"
        }

    @property
    def verdict_b(self) -> Dict[Tuple[str, ...], Verdict]:
        return {
            o.actions: o.verdict for o in self.obligations if o.condition == "B"
        }

    @property
    def checked_pairs(self) -> List[Tuple[str, ...]]:
        return [o.actions for o in self.obligations if o.condition == "B"]

    def get(self, name: str) -> Obligation:
        for o in self.obligations:
            if o.name == name:
                return o
        raise KeyError(name)

    def to_json(self) -> Dict[str, Any]:
        return {
            "spec": self.spec,
            "verdict": self.verdict.value,
            "domain": self.domain.to_json(),
            "checked_pairs": [list(p) for p in self.checked_pairs],
            "obligations": [o.to_json() for o in self.obligations],
        }


def check_validity(
    spec: ResourceSpec,
    domain: Domain = Domain(),
    *,
    workers: Optional[int] = None,
) -> ValidityReport:
    """
    Check the validity of *spec* by exhaustive enumeration within *domain*.

    Condition (A) is checked for every action, condition (B) for every
    relevant pair, on every pair of arguments of the domain: actions
    defined only on some arguments must be made total. On failure the
    smallest counterexample in enumeration order is reported.
    """
    domain.check()
    todo: List[Tuple[str, Tuple[Action, ...]]] = [
        ("A", (a,)) for a in spec.actions
    ]
    todo.extend(("B", pair) for pair in spec.relevant_pairs())

    checker = _ValidityChecker(spec, domain)
    obligations = map_ordered(checker.check, todo, get_workers(workers))
    rv = ValidityReport(spec.name, domain, obligations)
    logger.info("spec %s: %s", spec.name, rv.verdict.value)
    for o in obligations:
        if o.verdict is Verdict.UNKNOWN:
            logger.warning("spec %s, %s: unknown: %s", spec.name, o.name, o.note)
    return rv


class _ValidityChecker:
    """Shared state of the obligations of one spec."""

    def __init__(self, spec: ResourceSpec, domain: Domain):
        self.spec = spec
        self.domain = domain
        self.too_big = _too_big(spec.value_type, domain)
        self.values: Tuple[Value, ...] = ()
        self.classes: List[List[int]] = []
        if not self.too_big:
            self.values = enumerate_values(spec.value_type, domain)
            alphas = [spec.abstract(v) for v in self.values]
            groups: Dict[Value, List[int]] = {}
            for i, a in enumerate(alphas):
                groups.setdefault(a, []).append(i)
            self.classes = [groups[a] for a in alphas]

    def check(self, item: Tuple[str, Tuple[Action, ...]]) -> Obligation:
        cond, actions = item
        names = tuple(a.name for a in actions)
        note = self.too_big
        for a in actions:
            note = note or _too_big(a.arg_type, self.domain)
        if note:
            return Obligation(cond, names, Verdict.UNKNOWN, note=note)

        if cond == "A":
            cex = self._check_a(actions[0])
        else:
            cex = self._check_b(actions[0], actions[1])
        if cex is None:
            return Obligation(cond, names, Verdict.HOLDS)
        return Obligation(cond, names, Verdict.FAILS, cex)

    def _check_a(self, a: Action) -> Optional[Dict[str, Value]]:
        args = enumerate_values(a.arg_type, self.domain)
        related = [
            (x, y) for x in args for y in args if a.pre_holds(x, y)
        ]
        after: Dict[Tuple[int, Value], Value] = {}

        def abstract_after(i: int, arg: Value) -> Value:
            try:
                return after[i, arg]
            except KeyError:
                rv = after[i, arg] = self.spec.abstract(
                    a.apply(self.values[i], arg)
                )
                return rv

        for i, v in enumerate(self.values):
            for j in self.classes[i]:
                for x, y in related:
                    if abstract_after(i, x) != abstract_after(j, y):
                        return {
                            "v": v,
                            "v'": self.values[j],
                            "arg": x,
                            "arg'": y,
                        }
        return None

    def _check_b(self, a: Action, b: Action) -> Optional[Dict[str, Value]]:
        args_a = enumerate_values(a.arg_type, self.domain)
        args_b = enumerate_values(b.arg_type, self.domain)
        abstract = self.spec.abstract
        for i, v in enumerate(self.values):
            for j in self.classes[i]:
                w = self.values[j]
                for x in args_a:
                    vx = a.apply(v, x)
                    for y in args_b:
                        left = abstract(b.apply(vx, y))
                        right = abstract(a.apply(b.apply(w, y), x))
                        if left != right:
                            return {"v": v, "v'": w, "arg": x, "arg'": y}
        return None


def _too_big(ty: Type, domain: Domain) -> str:
    n = count_values(ty, domain)
    if n > domain.cap:
        return f"{n} values of type {ty} exceed the cap of {domain.cap}"
    return ""


# Action sequences

Step = Tuple[Action, Value]


def fold_actions(spec: ResourceSpec, v0: Value, steps: Sequence[Step]) -> Value:
    """Apply the actions in *steps* to *v0* in order."""
    v = v0
    for action, arg in steps:
        v = action.apply(v, arg)
    return v


def swap_closure(
    steps: Sequence[Step], limit: int = 1000
) -> List[Tuple[Step, ...]]:
    """
    Return the sequences obtained from *steps* swapping adjacent relevant
    pairs of actions, *steps* first.

    At most *limit* sequences are generated.
    """
    start = tuple(steps)
    seen: Set[Tuple[Tuple[str, Value], ...]] = {_steps_key(start)}
    rv = [start]
    i = 0
    while i < len(rv) and len(rv) < limit:
        cur = rv[i]
        i += 1
        for k in range(len(cur) - 1):
            if not must_commute(cur[k][0], cur[k + 1][0]):
                continue
            new = cur[:k] + (cur[k + 1], cur[k]) + cur[k + 2 :]
            key = _steps_key(new)
            if key not in seen:
                seen.add(key)
                rv.append(new)
                if len(rv) >= limit:
                    break
    return rv


def _steps_key(steps: Sequence[Step]) -> Tuple[Tuple[str, Value], ...]:
    return tuple((a.name, arg) for a, arg in steps)


# Parsing


def parse_spec(text: str, source: str = "") -> Dict[str, ResourceSpec]:
    """
    Parse the resource specifications in a ``.cspec`` text.

    Return the specifications by name, in the order they are declared.
    """
    p = Parser(text, source)
    rv: Dict[str, ResourceSpec] = OrderedDict()
    while True:
        p.skip_newlines()
        if p.at_eof():
            break
        tok = p.peek()
        spec = _parse_spec_block(p)
        if spec.name in rv:
            raise p.error(f"spec {spec.name} declared twice", tok)
        rv[spec.name] = spec
    if not rv:
        raise p.error("no spec found")
    return rv


def _parse_spec_block(p: Parser) -> ResourceSpec:
    p.expect("spec")
    name = p.name()
    p.skip_newlines()
    p.expect("{")

    value_type: Optional[Type] = None
    alpha: Optional[Tuple[Type, Expr]] = None
    actions: List[Tuple[ActionKind, str, str, Type, Expr, Assertion]] = []
    while True:
        p.skip_newlines()
        if p.accept("}"):
            break
        tok = p.peek()
        if p.accept("type"):
            value_type = p.type()
        elif p.accept("alpha"):
            p.expect(":")
            aty = p.type()
            p.expect("=")
            alpha = (aty, p.expr())
        elif p.at("shared", "unique"):
            kind = ActionKind(p.next().text)
            aname = p.name()
            p.expect("(")
            param = p.name()
            p.expect(":")
            arg_type = p.type()
            p.expect(")")
            p.expect("=")
            body = p.expr()
            pre = TRUE
            if _requires_follows(p):
                p.skip_newlines()
                p.expect("requires")
                pre = p.assertion()
            actions.append((kind, aname, param, arg_type, body, pre))
        else:
            raise p.error(f"unexpected {tok.text!r} in spec {name}")
        if not (p.peek().kind in ("nl", "eof") or p.at("}")):
            raise p.error(f"unexpected {p.peek().text!r} in spec {name}")

    if value_type is None:
        raise e.SpecError(f"spec {name}: missing type declaration")
    if alpha is None:
        raise e.SpecError(f"spec {name}: missing alpha declaration")
    return build_spec(name, value_type, alpha[0], alpha[1], actions)


def _requires_follows(p: Parser) -> bool:
    k = 0
    while p.peek(k).kind == "nl":
        k += 1
    tok = p.peek(k)
    return tok.kind == "name" and tok.text == "requires"


def build_spec(
    name: str,
    value_type: Type,
    alpha_type: Type,
    alpha: Expr,
    actions: Sequence[Tuple[ActionKind, str, str, Type, Expr, Assertion]],
) -> ResourceSpec:
    """
    Type check the components of a spec and return it.

    Raise `SpecError` if the structural requirements are violated.
    """
    extra = free_vars(alpha) - {"v"}
    if extra:
        raise e.SpecError(
            f"spec {name}: alpha can only use v, found {', '.join(sorted(extra))}"
        )
    alpha = check_expr(alpha, {"v": value_type}, alpha_type)

    shared: Optional[Action] = None
    unique: List[Action] = []
    seen: Set[str] = set()
    for kind, aname, param, arg_type, body, pre in actions:
        where = f"spec {name}, action {aname}"
        if aname in seen:
            raise e.SpecError(f"{where}: declared twice")
        seen.add(aname)
        if param == "v":
            raise e.SpecError(f"{where}: the parameter cannot be called v")
        if param != "arg":
            body = subst(body, {param: Var("arg")})
            pre = subst(pre, {param: Var("arg")})

        extra = free_vars(body) - {"v", "arg"}
        if extra:
            raise e.SpecError(
                f"{where}: unknown variables: {', '.join(sorted(extra))}"
            )
        if "v" in free_vars(pre):
            raise e.SpecError(
                f"{where}: the precondition cannot mention the resource value"
            )
        extra = free_vars(pre) - {"arg"}
        if extra:
            raise e.SpecError(
                f"{where}: unknown variables in precondition:"
                f" {', '.join(sorted(extra))}"
            )
        if not is_pure_relational(pre):
            raise e.SpecError(
                f"{where}: the precondition can only use boolean expressions,"
                f" low(), conjunctions and implications"
            )

        body = check_expr(body, {"v": value_type, "arg": arg_type}, value_type)
        pre = check_assertion(pre, {"arg": arg_type})
        action = Action(aname, kind, arg_type, body, pre)
        if kind is ActionKind.SHARED:
            if shared is not None:
                raise e.SpecError(
                    f"{where}: only one shared action is allowed;"
                    " select the operation with the argument"
                )
            shared = action
        else:
            unique.append(action)

    if shared is None and not unique:
        raise e.SpecError(f"spec {name}: no action declared")
    return ResourceSpec(name, value_type, alpha_type, alpha, shared, unique)


def load_specs(
    paths: Sequence[str], reader: Callable[[str], str]
) -> Dict[str, ResourceSpec]:
    """Parse several spec files; names must be unique across them."""
    rv: Dict[str, ResourceSpec] = OrderedDict()
    for path in paths:
        for name, spec in parse_spec(reader(path), path).items():
            if name in rv:
                raise e.SpecError(f"spec {name} declared twice ({path})")
            rv[name] = spec
    return rv

