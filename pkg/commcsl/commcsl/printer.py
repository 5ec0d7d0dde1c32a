"""
Canonical printing of expressions, assertions and commands.

The output parses back to the same tree.
"""

# Copyright (C) 2022 The CommCSL Team

from fractions import Fraction
from typing import List

from .syntax import Node, Expr, IntLit, BoolLit, Var, UnOp, BinOp, Cond, Let
from .syntax import PairLit, SeqLit, MSetLit, MapLit, Call, Index, Update
from .syntax import Command, Assign, Read, Write, Alloc, Skip, Compose, If
from .syntax import While, Par, Atomic, Assertion, Emp, Pure, PointsTo, Star
from .syntax import And, Exists, SGuard, UGuard, Implies, Low, NoGuard, AllPre

INDENT = "    "

# Binding strength of the binary operators: (level, left min, right min)
_BINOPS = {
    "||": (1, 1, 2),
    "&&": (2, 2, 3),
    "==": (3, 4, 4),
    "!=": (3, 4, 4),
    "<": (3, 4, 4),
    "<=": (3, 4, 4),
    ">": (3, 4, 4),
    ">=": (3, 4, 4),
    "+": (4, 4, 5),
    "-": (4, 4, 5),
    "++": (4, 4, 5),
    "*": (5, 5, 6),
}


def as_string(node: Node) -> str:
    """Return the canonical text of a syntax node."""
    if isinstance(node, Expr):
        return expr_string(node)
    if isinstance(node, Assertion):
        return assertion_string(node, -1)
    if isinstance(node, Command):
        return "\n".join(command_lines(node))
    raise TypeError(f"not a syntax node: {node!r}")


def format_fraction(r: Fraction) -> str:
    return str(r.numerator) if r.denominator == 1 else f"{r}"


def expr_string(e: Expr, level: int = 0) -> str:
    s, own = _expr(e)
    return f"({s})" if own < level else s


def _expr(e: Expr) -> "tuple[str, int]":
    if isinstance(e, IntLit):
        return str(e.value), 6 if e.value < 0 else 7
    if isinstance(e, BoolLit):
        return ("true" if e.value else "false"), 7
    if isinstance(e, Var):
        return e.name, 7
    if isinstance(e, UnOp):
        if e.op == "-" and isinstance(e.arg, IntLit) and e.arg.value >= 0:
            return f"-({e.arg.value})", 6
        return e.op + expr_string(e.arg, 6), 6
    if isinstance(e, BinOp):
        own, lmin, rmin = _BINOPS[e.op]
        return (
            f"{expr_string(e.left, lmin)} {e.op} {expr_string(e.right, rmin)}",
            own,
        )
    if isinstance(e, Cond):
        return (
            f"{expr_string(e.cond, 1)} ? {expr_string(e.then)}"
            f" : {expr_string(e.orelse)}",
            0,
        )
    if isinstance(e, Let):
        return (
            f"let {e.name} = {expr_string(e.value)} in {expr_string(e.body)}",
            0,
        )
    if isinstance(e, PairLit):
        return f"({expr_string(e.fst)}, {expr_string(e.snd)})", 7
    if isinstance(e, SeqLit):
        return "[" + ", ".join(expr_string(i) for i in e.items) + "]", 7
    if isinstance(e, MSetLit):
        return "{|" + ", ".join(expr_string(i) for i in e.items) + "|}", 7
    if isinstance(e, MapLit):
        entries = ", ".join(
            f"{expr_string(k)}: {expr_string(v)}" for k, v in e.entries
        )
        return "{" + entries + "}", 7
    if isinstance(e, Call):
        return f"{e.fn}(" + ", ".join(expr_string(a) for a in e.args) + ")", 7
    if isinstance(e, Index):
        return f"{expr_string(e.base, 7)}[{expr_string(e.index)}]", 7
    if isinstance(e, Update):
        return (
            f"{expr_string(e.base, 7)}"
            f"[{expr_string(e.key)} := {expr_string(e.value)}]",
            7,
        )
    raise TypeError(f"not an expression: {e!r}")


def assertion_string(a: Assertion, level: int = -1) -> str:
    s, own = _assertion(a)
    return f"({s})" if own < level else s


def _assertion(a: Assertion) -> "tuple[str, int]":
    if isinstance(a, Star):
        return (
            f"{assertion_string(a.left, 0)} ** {assertion_string(a.right, 1)}",
            0,
        )
    if isinstance(a, And):
        return (
            f"{assertion_string(a.left, 1)} /\\ {assertion_string(a.right, 2)}",
            1,
        )
    if isinstance(a, Exists):
        ty = f": {a.ty}" if a.ty is not None else ""
        return f"exists {a.name}{ty}. {assertion_string(a.body)}", -1
    if isinstance(a, Emp):
        return "emp", 2
    if isinstance(a, Pure):
        return expr_string(a.expr), 2
    if isinstance(a, PointsTo):
        arrow = "|->" if a.frac == 1 else f"|->[{format_fraction(a.frac)}]"
        return f"{expr_string(a.addr)} {arrow} {expr_string(a.value)}", 2
    if isinstance(a, SGuard):
        return f"sguard({format_fraction(a.frac)}, {expr_string(a.args)})", 2
    if isinstance(a, UGuard):
        return f"uguard({a.action}, {expr_string(a.args)})", 2
    if isinstance(a, AllPre):
        if a.action is None:
            return f"allpre({expr_string(a.args)})", 2
        return f"allpre({a.action}, {expr_string(a.args)})", 2
    if isinstance(a, Implies):
        return (
            f"{expr_string(a.cond)} ==> {assertion_string(a.body, 2)}",
            2,
        )
    if isinstance(a, Low):
        return f"low({expr_string(a.expr)})", 2
    if isinstance(a, NoGuard):
        return f"noguard({assertion_string(a.body)})", 2
    raise TypeError(f"not an assertion: {a!r}")


def command_lines(c: Command, in_group: bool = False) -> List[str]:
    """Return the lines of the canonical text of *c*, unindented."""
    # Inside a parallel group a top-level disjunction would split threads.
    lvl = 2 if in_group else 0
    if isinstance(c, Compose):
        return command_lines(c.first, in_group) + command_lines(
            c.second, in_group
        )
    if isinstance(c, Assign):
        if isinstance(c.value, SeqLit) and len(c.value.items) == 1:
            return [f"{c.target} := ({expr_string(c.value)})"]
        return [f"{c.target} := {expr_string(c.value, lvl)}"]
    if isinstance(c, Read):
        return [f"{c.target} := [{expr_string(c.addr)}]"]
    if isinstance(c, Write):
        return [f"[{expr_string(c.addr)}] := {expr_string(c.value, lvl)}"]
    if isinstance(c, Alloc):
        return [f"{c.target} := alloc({expr_string(c.value)})"]
    if isinstance(c, Skip):
        return ["skip"]
    if isinstance(c, If):
        rv = [f"if ({expr_string(c.cond)}) {{"]
        rv.extend(_indent(command_lines(c.then)))
        if not isinstance(c.orelse, Skip):
            rv.append("} else {")
            rv.extend(_indent(command_lines(c.orelse)))
        rv.append("}")
        return rv
    if isinstance(c, While):
        rv = [f"while ({expr_string(c.cond)}) {{"]
        rv.extend(_indent(command_lines(c.body)))
        rv.append("}")
        return rv
    if isinstance(c, Atomic):
        rv = ["atomic {"]
        rv.extend(_indent(command_lines(c.body)))
        rv.append("}")
        return rv
    if isinstance(c, Par):
        branches = [c.left]
        right = c.right
        while isinstance(right, Par):
            branches.append(right.left)
            right = right.right
        branches.append(right)
        rv = ["("]
        for i, b in enumerate(branches):
            if i:
                rv.append("||")
            if isinstance(b, Par):
                rv.extend(_indent(command_lines(b)))
            else:
                rv.extend(_indent(command_lines(b, in_group=True)))
        rv.append(")")
        return rv
    raise TypeError(f"not a command: {c!r}")


def _indent(lines: List[str]) -> List[str]:
    return [INDENT + line for line in lines]
