"""
Evaluation of expressions and of pure relational assertions.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from typing import Any, Callable, Dict, Mapping

from .types import default_value
from .values import Value, Pair, Seq, MSet, FMap
from .syntax import Expr, IntLit, BoolLit, Var, UnOp, BinOp, Cond, Let
from .syntax import PairLit, SeqLit, MSetLit, MapLit, Call, Index, Update
from .syntax import Assertion, Emp, Pure, Star, And, Implies, Low

logger = logging.getLogger(__name__)

Store = Mapping[str, Value]


def eval_expr(e: Expr, store: Store) -> Value:
    """
    Evaluate *e* in *store*.

    Evaluation is total: unbound variables, out of range sequence indexes and
    lookups outside a map domain return the default value of their type.
    """
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, Var):
        try:
            return store[e.name]
        except KeyError:
            return default_value(e.ty)
    if isinstance(e, BinOp):
        return _binop(e, store)
    if isinstance(e, UnOp):
        arg = eval_expr(e.arg, store)
        return -_int(arg) if e.op == "-" else not arg
    if isinstance(e, Cond):
        if eval_expr(e.cond, store):
            return eval_expr(e.then, store)
        return eval_expr(e.orelse, store)
    if isinstance(e, Let):
        inner = dict(store)
        inner[e.name] = eval_expr(e.value, store)
        return eval_expr(e.body, inner)
    if isinstance(e, PairLit):
        return Pair(eval_expr(e.fst, store), eval_expr(e.snd, store))
    if isinstance(e, SeqLit):
        return Seq(eval_expr(i, store) for i in e.items)
    if isinstance(e, MSetLit):
        return MSet(eval_expr(i, store) for i in e.items)
    if isinstance(e, MapLit):
        return FMap(
            (eval_expr(k, store), eval_expr(v, store)) for k, v in e.entries
        )
    if isinstance(e, Call):
        fn = _BUILTINS[e.fn]
        return fn(*(eval_expr(a, store) for a in e.args))
    if isinstance(e, Index):
        base = eval_expr(e.base, store)
        index = eval_expr(e.index, store)
        default = default_value(e.ty)
        if isinstance(base, Seq):
            return base.get(_int(index), default)
        if isinstance(base, FMap):
            return base.get(index, default)
        raise TypeError(f"cannot index {base!r}")
    if isinstance(e, Update):
        base = eval_expr(e.base, store)
        if not isinstance(base, FMap):
            raise TypeError(f"cannot update {base!r}")
        return base.set(eval_expr(e.key, store), eval_expr(e.value, store))
    raise TypeError(f"not an expression: {e!r}")


def eval_bool(e: Expr, store: Store) -> bool:
    return bool(eval_expr(e, store))


def _int(v: Value) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError(f"integer expected, got {v!r}")
    return v


def _binop(e: BinOp, store: Store) -> Value:
    op = e.op
    if op == "&&":
        return eval_bool(e.left, store) and eval_bool(e.right, store)
    if op == "||":
        return eval_bool(e.left, store) or eval_bool(e.right, store)

    left = eval_expr(e.left, store)
    right = eval_expr(e.right, store)
    if op == "==":
        return left == right
    if op == "!=":
        return left != right
    if op == "++":
        assert isinstance(left, Seq) and isinstance(right, Seq)
        return left.concat(right)
    a = _int(left)
    b = _int(right)
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    if op == "<":
        return a < b
    if op == "<=":
        return a <= b
    if op == ">":
        return a > b
    if op == ">=":
        return a >= b
    raise TypeError(f"unknown operator: {op!r}")


def _sum(c: Any) -> int:
    return sum(_int(i) for i in c)


_BUILTINS: Dict[str, Callable[..., Value]] = {
    "fst": lambda p: p.fst,
    "snd": lambda p: p.snd,
    "len": lambda s: len(s),
    "tail": lambda s: s.tail(),
    "union": lambda a, b: a.union(b),
    "diff": lambda a, b: a.diff(b),
    "card": lambda m: len(m),
    "mset": lambda s: MSet(s),
    "sum": _sum,
    "dom": lambda m: m.domain(),
}


def is_pure_relational(a: Assertion) -> bool:
    """
    Return `!True` if *a* only constrains stores.

    Such assertions are built from boolean expressions, `!low()`, `!emp`,
    conjunctions and implications; they can be checked with
    `holds_relational()`.
    """
    if isinstance(a, (Emp, Pure, Low)):
        return True
    if isinstance(a, (Star, And)):
        return is_pure_relational(a.left) and is_pure_relational(a.right)
    if isinstance(a, Implies):
        return is_pure_relational(a.body)
    return False


def holds_relational(a: Assertion, s1: Store, s2: Store) -> bool:
    """
    Check a pure relational assertion on a pair of stores.

    The heaps are not looked at: *a* must satisfy `is_pure_relational()`.
    """
    if isinstance(a, Emp):
        return True
    if isinstance(a, Pure):
        return eval_bool(a.expr, s1) and eval_bool(a.expr, s2)
    if isinstance(a, Low):
        return eval_expr(a.expr, s1) == eval_expr(a.expr, s2)
    if isinstance(a, (Star, And)):
        return holds_relational(a.left, s1, s2) and holds_relational(
            a.right, s1, s2
        )
    if isinstance(a, Implies):
        b1 = eval_bool(a.cond, s1)
        if b1 != eval_bool(a.cond, s2):
            return False
        return not b1 or holds_relational(a.body, s1, s2)
    raise TypeError(f"not a pure relational assertion: {a}")
