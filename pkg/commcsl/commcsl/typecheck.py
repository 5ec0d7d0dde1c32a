"""
Bidirectional type checking of expressions, commands and assertions.

Checking returns an elaborated copy of the tree, in which variables, lookups
and container literals carry their type.
"""

# Copyright (C) 2022 The CommCSL Team

from dataclasses import replace
from typing import TYPE_CHECKING, Dict, Mapping, Optional, Tuple, cast

from . import errors as e
from .types import Type, INT, BOOL, PairType, SeqType, MultisetType, MapType
from .syntax import Node, Expr, IntLit, BoolLit, Var, UnOp, BinOp, Cond, Let
from .syntax import PairLit, SeqLit, MSetLit, MapLit, Call, Index, Update
from .syntax import Command, Assign, Read, Write, Alloc, Skip, Compose, If
from .syntax import While, Par, Atomic, Assertion, Emp, Pure, PointsTo, Star
from .syntax import And, Exists, SGuard, UGuard, Implies, Low, NoGuard, AllPre

if TYPE_CHECKING:
    from .resource import ResourceSpec

Env = Mapping[str, Type]

_ARITH = {"+", "-", "*"}
_COMPARE = {"<", "<=", ">", ">="}
_EQUALITY = {"==", "!="}
_LOGIC = {"&&", "||"}


def check_expr(
    expr: Expr, env: Optional[Env] = None, expected: Optional[Type] = None
) -> Expr:
    """Check *expr* against *expected* (if given); return it elaborated."""
    return _Checker(env or {}).check(expr, expected)


def infer_expr(expr: Expr, env: Optional[Env] = None) -> Tuple[Expr, Type]:
    """Return *expr* elaborated and its type."""
    return _Checker(env or {}).infer(expr)


def check_command(cmd: Command, env: Optional[Env] = None) -> Command:
    return _Checker(env or {}).command(cmd)


def check_assertion(
    a: Assertion,
    env: Optional[Env] = None,
    spec: Optional["ResourceSpec"] = None,
) -> Assertion:
    """
    Check an assertion; guard arguments are checked against *spec* if given.
    """
    return _Checker(env or {}, spec).assertion(a)


class _Checker:
    __slots__ = ("env", "spec")

    def __init__(self, env: Env, spec: Optional["ResourceSpec"] = None):
        self.env: Dict[str, Type] = dict(env)
        self.spec = spec

    def _bind(self, name: str, ty: Type) -> "_Checker":
        rv = _Checker(self.env, self.spec)
        rv.env[name] = ty
        return rv

    def _fail(self, msg: str, node: Node) -> "e.TypeCheckError":
        return e.TypeCheckError(msg, str(node))

    def _expect(self, node: Node, expected: Type, actual: Type) -> None:
        if expected != actual:
            raise self._fail(f"expected {expected}, got {actual}", node)

    # Expressions

    def check(self, expr: Expr, expected: Optional[Type] = None) -> Expr:
        if expected is None:
            return self.infer(expr)[0]

        if isinstance(expr, SeqLit) and not expr.items:
            if not isinstance(expected, SeqType):
                raise self._fail(f"expected {expected}, got a sequence", expr)
            return replace(expr, ty=expected)
        if isinstance(expr, MSetLit) and not expr.items:
            if not isinstance(expected, MultisetType):
                raise self._fail(f"expected {expected}, got a multiset", expr)
            return replace(expr, ty=expected)
        if isinstance(expr, MapLit) and not expr.entries:
            if not isinstance(expected, MapType):
                raise self._fail(f"expected {expected}, got a map", expr)
            return replace(expr, ty=expected)
        if isinstance(expr, PairLit) and isinstance(expected, PairType):
            return PairLit(
                self.check(expr.fst, expected.fst),
                self.check(expr.snd, expected.snd),
            )
        if isinstance(expr, Cond):
            return Cond(
                self.check(expr.cond, BOOL),
                self.check(expr.then, expected),
                self.check(expr.orelse, expected),
            )
        if isinstance(expr, Let):
            value, vty = self.infer(expr.value)
            body = self._bind(expr.name, vty).check(expr.body, expected)
            return Let(expr.name, value, body)
        if isinstance(expr, (SeqLit, MSetLit)) and isinstance(
            expected, (SeqType, MultisetType)
        ):
            if type(expected) is not (
                SeqType if isinstance(expr, SeqLit) else MultisetType
            ):
                raise self._fail(f"expected {expected}", expr)
            items = tuple(self.check(i, expected.elem) for i in expr.items)
            return replace(expr, items=items, ty=expected)
        if isinstance(expr, MapLit) and isinstance(expected, MapType):
            entries = tuple(
                (self.check(k, expected.key), self.check(v, expected.value))
                for k, v in expr.entries
            )
            return MapLit(entries, ty=expected)

        rv, ty = self.infer(expr)
        self._expect(expr, expected, ty)
        return rv

    def infer(self, expr: Expr) -> Tuple[Expr, Type]:
        if isinstance(expr, IntLit):
            return expr, INT
        if isinstance(expr, BoolLit):
            return expr, BOOL
        if isinstance(expr, Var):
            ty = self.env.get(expr.name, INT)
            return Var(expr.name, ty=ty), ty
        if isinstance(expr, UnOp):
            ty = INT if expr.op == "-" else BOOL
            return UnOp(expr.op, self.check(expr.arg, ty)), ty
        if isinstance(expr, BinOp):
            return self._binop(expr)
        if isinstance(expr, Cond):
            cond = self.check(expr.cond, BOOL)
            if _is_empty_literal(expr.then):
                orelse, ty = self.infer(expr.orelse)
                then = self.check(expr.then, ty)
            else:
                then, ty = self.infer(expr.then)
                orelse = self.check(expr.orelse, ty)
            return Cond(cond, then, orelse), ty
        if isinstance(expr, Let):
            value, vty = self.infer(expr.value)
            body, ty = self._bind(expr.name, vty).infer(expr.body)
            return Let(expr.name, value, body), ty
        if isinstance(expr, PairLit):
            fst, t1 = self.infer(expr.fst)
            snd, t2 = self.infer(expr.snd)
            return PairLit(fst, snd), PairType(t1, t2)
        if isinstance(expr, (SeqLit, MSetLit)):
            cls = SeqType if isinstance(expr, SeqLit) else MultisetType
            if not expr.items:
                ty = cls(INT)
                return replace(expr, ty=ty), ty
            first, elem = self.infer(expr.items[0])
            items = (first,) + tuple(
                self.check(i, elem) for i in expr.items[1:]
            )
            ty = cls(elem)
            return replace(expr, items=items, ty=ty), ty
        if isinstance(expr, MapLit):
            if not expr.entries:
                ty = MapType(INT, INT)
                return MapLit((), ty=ty), ty
            k0, kty = self.infer(expr.entries[0][0])
            v0, vty = self.infer(expr.entries[0][1])
            entries = ((k0, v0),) + tuple(
                (self.check(k, kty), self.check(v, vty))
                for k, v in expr.entries[1:]
            )
            ty = MapType(kty, vty)
            return MapLit(entries, ty=ty), ty
        if isinstance(expr, Call):
            return self._call(expr)
        if isinstance(expr, Index):
            base, bty = self.infer(expr.base)
            if isinstance(bty, SeqType):
                index = self.check(expr.index, INT)
                return Index(base, index, ty=bty.elem), bty.elem
            if isinstance(bty, MapType):
                index = self.check(expr.index, bty.key)
                return Index(base, index, ty=bty.value), bty.value
            raise self._fail(f"cannot index a value of type {bty}", expr)
        if isinstance(expr, Update):
            base, bty = self.infer(expr.base)
            if not isinstance(bty, MapType):
                raise self._fail(f"cannot update a value of type {bty}", expr)
            return (
                Update(
                    base,
                    self.check(expr.key, bty.key),
                    self.check(expr.value, bty.value),
                ),
                bty,
            )
        raise TypeError(f"not an expression: {expr!r}")

    def _binop(self, expr: BinOp) -> Tuple[Expr, Type]:
        op = expr.op
        if op in _ARITH:
            return (
                BinOp(op, self.check(expr.left, INT), self.check(expr.right, INT)),
                INT,
            )
        if op in _COMPARE:
            return (
                BinOp(op, self.check(expr.left, INT), self.check(expr.right, INT)),
                BOOL,
            )
        if op in _LOGIC:
            return (
                BinOp(
                    op, self.check(expr.left, BOOL), self.check(expr.right, BOOL)
                ),
                BOOL,
            )
        if op in _EQUALITY:
            if _is_empty_literal(expr.left):
                right, ty = self.infer(expr.right)
                left = self.check(expr.left, ty)
            else:
                left, ty = self.infer(expr.left)
                right = self.check(expr.right, ty)
            return BinOp(op, left, right), BOOL
        if op == "++":
            if _is_empty_literal(expr.left):
                right, ty = self.infer(expr.right)
                left = self.check(expr.left, ty)
            else:
                left, ty = self.infer(expr.left)
                right = self.check(expr.right, ty)
            if not isinstance(ty, SeqType):
                raise self._fail(f"cannot concatenate values of type {ty}", expr)
            return BinOp(op, left, right), ty
        raise self._fail(f"unknown operator {op!r}", expr)

    def _call(self, expr: Call) -> Tuple[Expr, Type]:
        fn = expr.fn
        if fn in ("union", "diff"):
            if _is_empty_literal(expr.args[0]):
                right, ty = self.infer(expr.args[1])
                left = self.check(expr.args[0], ty)
            else:
                left, ty = self.infer(expr.args[0])
                right = self.check(expr.args[1], ty)
            if not isinstance(ty, MultisetType):
                raise self._fail(f"{fn} expects multisets, got {ty}", expr)
            return Call(fn, (left, right)), ty

        arg, ty = self.infer(expr.args[0])
        rv = Call(fn, (arg,))
        if fn in ("fst", "snd") and isinstance(ty, PairType):
            return rv, ty.fst if fn == "fst" else ty.snd
        if fn == "len" and isinstance(ty, SeqType):
            return rv, INT
        if fn == "tail" and isinstance(ty, SeqType):
            return rv, ty
        if fn == "card" and isinstance(ty, MultisetType):
            return rv, INT
        if fn == "mset" and isinstance(ty, SeqType):
            return rv, MultisetType(ty.elem)
        if fn == "sum" and isinstance(ty, (SeqType, MultisetType)):
            self._expect(expr, INT, ty.elem)
            return rv, INT
        if fn == "dom" and isinstance(ty, MapType):
            return rv, MultisetType(ty.key)
        raise self._fail(f"{fn} cannot be applied to a value of type {ty}", expr)

    # Commands

    def command(self, cmd: Command) -> Command:
        if isinstance(cmd, Assign):
            ty = self.env.get(cmd.target, INT)
            return replace(cmd, value=self.check(cmd.value, ty))
        if isinstance(cmd, Read):
            return replace(cmd, addr=self.check(cmd.addr, INT))
        if isinstance(cmd, Write):
            return replace(
                cmd, addr=self.check(cmd.addr, INT), value=self.infer(cmd.value)[0]
            )
        if isinstance(cmd, Alloc):
            return replace(cmd, value=self.infer(cmd.value)[0])
        if isinstance(cmd, Skip):
            return cmd
        if isinstance(cmd, (If, While)):
            cmd = replace(cmd, cond=self.check(cmd.cond, BOOL))
        if isinstance(cmd, (Compose, If, While, Par, Atomic)):
            return cmd.map_children(
                lambda c: self.command(cast(Command, c))
                if isinstance(c, Command)
                else c
            )
        raise TypeError(f"not a command: {cmd!r}")

    # Assertions

    def assertion(self, a: Assertion) -> Assertion:
        if isinstance(a, Emp):
            return a
        if isinstance(a, Pure):
            return Pure(self.check(a.expr, BOOL))
        if isinstance(a, PointsTo):
            return PointsTo(
                self.check(a.addr, INT), a.frac, self.infer(a.value)[0]
            )
        if isinstance(a, (Star, And)):
            return type(a)(self.assertion(a.left), self.assertion(a.right))
        if isinstance(a, Exists):
            ty = a.ty or self.env.get(a.name, INT)
            return Exists(a.name, ty, self._bind(a.name, ty).assertion(a.body))
        if isinstance(a, SGuard):
            return SGuard(a.frac, self._guard_args(None, a.args, a))
        if isinstance(a, UGuard):
            return UGuard(a.action, self._guard_args(a.action, a.args, a))
        if isinstance(a, AllPre):
            return AllPre(a.action, self._guard_args(a.action, a.args, a))
        if isinstance(a, Implies):
            return Implies(self.check(a.cond, BOOL), self.assertion(a.body))
        if isinstance(a, Low):
            return Low(self.infer(a.expr)[0])
        if isinstance(a, NoGuard):
            return NoGuard(self.assertion(a.body))
        raise TypeError(f"not an assertion: {a!r}")

    def _guard_args(
        self, action: Optional[str], args: Expr, node: Assertion
    ) -> Expr:
        cls = MultisetType if action is None else SeqType
        if self.spec is not None:
            act = self.spec.get_action(action)
            if act is None:
                what = "shared action" if action is None else f"action {action}"
                raise self._fail(
                    f"{what} not declared in spec {self.spec.name}", node
                )
            return self.check(args, cls(act.arg_type))

        rv, ty = self.infer(args)
        if not isinstance(ty, cls):
            kind = "multiset" if action is None else "sequence"
            raise self._fail(f"guard arguments must be a {kind}", node)
        return rv


def _is_empty_literal(expr: Expr) -> bool:
    return (
        isinstance(expr, (SeqLit, MSetLit))
        and not expr.items
        or isinstance(expr, MapLit)
        and not expr.entries
    )
