"""
Export of validity obligations and entailments as SMT-LIB v2 scripts.

Every script asserts the negation of what has to be proven: a solver
answering ``unsat`` proves it. Integers and booleans map to the SMT-LIB
theories; pairs to datatypes; maps to arrays of optional values; multisets
to arrays of multiplicities. Sequences and aggregates over containers are
not supported.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from collections import OrderedDict
from typing import Dict, List, NamedTuple, Tuple

from . import errors as e
from .types import Type, IntType, BoolType, PairType, SeqType
from .types import MultisetType, MapType, INT, BOOL
from .syntax import Expr, IntLit, BoolLit, Var, UnOp, BinOp, Cond, Let
from .syntax import PairLit, SeqLit, MSetLit, MapLit, Call, Index, Update
from .syntax import Assertion, Emp, Pure, Star, And, Implies, Low
from .syntax import free_vars
from .resource import Action, ResourceSpec

logger = logging.getLogger(__name__)

# A variable in the script: its term and its type
Term = Tuple[str, Type]
SmtEnv = Dict[str, Term]

_ARITH = {"+": "+", "-": "-", "*": "*"}
_COMPARE = {"<": "<", "<=": "<=", ">": ">", ">=": ">="}
_LOGIC = {"&&": "and", "||": "or"}


def quote(name: str) -> str:
    """Return *name* as a SMT-LIB symbol."""
    if name.isidentifier() and name.isascii():
        return name
    return f"|{name}|"


class Script:
    """
    A SMT-LIB script being built.

    Sorts are declared on demand, before the constants using them.
    Constructs without a direct translation are defined by fresh constants
    and quantified axioms.
    """

    def __init__(self, title: str = ""):
        self.title = title
        self.sorts: Dict[Type, str] = {}
        self.options: Dict[Type, str] = {}
        self.decls: List[str] = []
        self.consts: List[str] = []
        self.asserts: List[str] = []
        self._nfresh = 0

    # Sorts

    def sort(self, ty: Type) -> str:
        if isinstance(ty, IntType):
            return "Int"
        if isinstance(ty, BoolType):
            return "Bool"
        if isinstance(ty, SeqType):
            raise e.NotSupportedError(
                f"sequences ({ty}) can't be exported to SMT-LIB"
            )
        if ty in self.sorts:
            return self.sorts[ty]

        if isinstance(ty, PairType):
            fst, snd = self.sort(ty.fst), self.sort(ty.snd)
            name = quote(str(ty))
            self.decls.append(
                f"(declare-datatypes (({name} 0)) ((({quote(f'mk {ty}')}"
                f" ({quote(f'fst {ty}')} {fst})"
                f" ({quote(f'snd {ty}')} {snd})))))"
            )
        elif isinstance(ty, MultisetType):
            name = f"(Array {self.sort(ty.elem)} Int)"
        elif isinstance(ty, MapType):
            key = self.sort(ty.key)
            name = f"(Array {key} {self._option(ty.value)})"
        else:
            raise e.NotSupportedError(f"type {ty} can't be exported to SMT-LIB")

        self.sorts[ty] = name
        return name

    def _option(self, ty: Type) -> str:
        opt = quote(f"Opt {ty}")
        if ty not in self.options:
            inner = self.sort(ty)
            self.decls.append(
                f"(declare-datatypes (({opt} 0)) (({quote(f'none {ty}')})"
                f" ({quote(f'some {ty}')} ({quote(f'val {ty}')} {inner}))))"
            )
            self.options[ty] = opt
        return opt

    def default(self, ty: Type) -> str:
        """Return the term of the default value of *ty*."""
        if isinstance(ty, IntType):
            return "0"
        if isinstance(ty, BoolType):
            return "false"
        if isinstance(ty, PairType):
            self.sort(ty)
            return (
                f"({quote(f'mk {ty}')} {self.default(ty.fst)}"
                f" {self.default(ty.snd)})"
            )
        if isinstance(ty, MultisetType):
            return f"((as const {self.sort(ty)}) 0)"
        if isinstance(ty, MapType):
            sort = self.sort(ty)
            return f"((as const {sort}) {quote(f'none {ty.value}')})"
        return self.sort(ty)  # raises for sequences

    # Declarations

    def declare(self, name: str, ty: Type) -> str:
        sym = quote(name)
        self.consts.append(f"(declare-const {sym} {self.sort(ty)})")
        return sym

    def fresh(self, ty: Type, hint: str = "aux") -> str:
        self._nfresh += 1
        return self.declare(f"{hint}!{self._nfresh}", ty)

    def add(self, term: str) -> None:
        self.asserts.append(f"(assert {term})")

    def text(self) -> str:
        lines = []
        if self.title:
            lines.append(f"; {self.title}")
        lines.append("(set-logic ALL)")
        lines.extend(self.decls)
        lines.extend(self.consts)
        lines.extend(self.asserts)
        lines.append("(check-sat)")
        lines.append("(get-model)")
        return "\n".join(lines) + "\n"

    # Expressions

    def expr(self, ex: Expr, env: SmtEnv) -> Term:
        """Translate *ex*, whose variables are looked up in *env*."""
        if isinstance(ex, IntLit):
            if ex.value < 0:
                return f"(- {-ex.value})", INT
            return str(ex.value), INT
        if isinstance(ex, BoolLit):
            return ("true" if ex.value else "false"), BOOL
        if isinstance(ex, Var):
            try:
                return env[ex.name]
            except KeyError:
                raise e.InterfaceError(
                    f"variable {ex.name} not declared in the script"
                ) from None
        if isinstance(ex, UnOp):
            arg, _ = self.expr(ex.arg, env)
            if ex.op == "-":
                return f"(- {arg})", INT
            return f"(not {arg})", BOOL
        if isinstance(ex, BinOp):
            return self._binop(ex, env)
        if isinstance(ex, Cond):
            cond, _ = self.expr(ex.cond, env)
            then, ty = self.expr(ex.then, env)
            orelse, _ = self.expr(ex.orelse, env)
            return f"(ite {cond} {then} {orelse})", ty
        if isinstance(ex, Let):
            inner = dict(env)
            inner[ex.name] = self.expr(ex.value, env)
            return self.expr(ex.body, inner)
        if isinstance(ex, PairLit):
            fst, t1 = self.expr(ex.fst, env)
            snd, t2 = self.expr(ex.snd, env)
            ty = PairType(t1, t2)
            self.sort(ty)
            return f"({quote(f'mk {ty}')} {fst} {snd})", ty
        if isinstance(ex, SeqLit):
            raise _unsupported(ex)
        if isinstance(ex, MSetLit):
            return self._mset_lit(ex, env)
        if isinstance(ex, MapLit):
            return self._map_lit(ex, env)
        if isinstance(ex, Call):
            return self._call(ex, env)
        if isinstance(ex, Index):
            base, bty = self.expr(ex.base, env)
            if not isinstance(bty, MapType):
                raise _unsupported(ex)
            key, _ = self.expr(ex.index, env)
            cell = f"(select {base} {key})"
            return (
                f"(ite ((_ is {quote(f'some {bty.value}')}) {cell})"
                f" ({quote(f'val {bty.value}')} {cell})"
                f" {self.default(bty.value)})",
                bty.value,
            )
        if isinstance(ex, Update):
            base, bty = self.expr(ex.base, env)
            assert isinstance(bty, MapType)
            key, _ = self.expr(ex.key, env)
            value, _ = self.expr(ex.value, env)
            some = quote(f"some {bty.value}")
            return f"(store {base} {key} ({some} {value}))", bty
        raise TypeError(f"not an expression: {ex!r}")

    def _binop(self, ex: BinOp, env: SmtEnv) -> Term:
        left, lty = self.expr(ex.left, env)
        right, _ = self.expr(ex.right, env)
        op = ex.op
        if op in _ARITH:
            return f"({_ARITH[op]} {left} {right})", INT
        if op in _COMPARE:
            return f"({_COMPARE[op]} {left} {right})", BOOL
        if op in _LOGIC:
            return f"({_LOGIC[op]} {left} {right})", BOOL
        if op == "==":
            return f"(= {left} {right})", BOOL
        if op == "!=":
            return f"(not (= {left} {right}))", BOOL
        raise _unsupported(ex)

    def _call(self, ex: Call, env: SmtEnv) -> Term:
        fn = ex.fn
        if fn in ("fst", "snd"):
            arg, ty = self.expr(ex.args[0], env)
            assert isinstance(ty, PairType)
            sel = quote(f"{fn} {ty}")
            return f"({sel} {arg})", ty.fst if fn == "fst" else ty.snd

        if fn in ("union", "diff"):
            a, ty = self.expr(ex.args[0], env)
            b, _ = self.expr(ex.args[1], env)
            assert isinstance(ty, MultisetType)
            rv = self.fresh(ty, fn)
            elem = self.sort(ty.elem)
            if fn == "union":
                count = "(+ (select {a} x) (select {b} x))"
            else:
                count = (
                    "(ite (> (select {a} x) (select {b} x))"
                    " (- (select {a} x) (select {b} x)) 0)"
                )
            self.add(
                f"(forall ((x {elem})) (= (select {rv} x)"
                f" {count.format(a=a, b=b)}))"
            )
            return rv, ty

        if fn == "dom":
            m, ty = self.expr(ex.args[0], env)
            assert isinstance(ty, MapType)
            mty = MultisetType(ty.key)
            rv = self.fresh(mty, "dom")
            some = quote(f"some {ty.value}")
            self.add(
                f"(forall ((x {self.sort(ty.key)})) (= (select {rv} x)"
                f" (ite ((_ is {some}) (select {m} x)) 1 0)))"
            )
            return rv, mty

        raise _unsupported(ex)

    def _mset_lit(self, ex: MSetLit, env: SmtEnv) -> Term:
        ty = ex.ty
        items = [self.expr(i, env) for i in ex.items]
        if ty is None:
            ty = MultisetType(items[0][1] if items else INT)
        assert isinstance(ty, MultisetType)
        rv = self.default(ty)
        for item, _ in items:
            rv = f"(store {rv} {item} (+ (select {rv} {item}) 1))"
        return rv, ty

    def _map_lit(self, ex: MapLit, env: SmtEnv) -> Term:
        ty = ex.ty
        entries = [
            (self.expr(k, env), self.expr(v, env)) for k, v in ex.entries
        ]
        if ty is None:
            if entries:
                ty = MapType(entries[0][0][1], entries[0][1][1])
            else:
                ty = MapType(INT, INT)
        assert isinstance(ty, MapType)
        rv = self.default(ty)
        some = quote(f"some {ty.value}")
        for (k, _), (v, _) in entries:
            rv = f"(store {rv} {k} ({some} {v}))"
        return rv, ty

    # Assertions

    def relational(self, a: Assertion, env1: SmtEnv, env2: SmtEnv) -> str:
        """Translate a pure relational assertion on two stores."""
        if isinstance(a, Emp):
            return "true"
        if isinstance(a, Pure):
            t1, _ = self.expr(a.expr, env1)
            t2, _ = self.expr(a.expr, env2)
            return f"(and {t1} {t2})"
        if isinstance(a, Low):
            t1, _ = self.expr(a.expr, env1)
            t2, _ = self.expr(a.expr, env2)
            return f"(= {t1} {t2})"
        if isinstance(a, (Star, And)):
            left = self.relational(a.left, env1, env2)
            right = self.relational(a.right, env1, env2)
            return f"(and {left} {right})"
        if isinstance(a, Implies):
            c1, _ = self.expr(a.cond, env1)
            c2, _ = self.expr(a.cond, env2)
            body = self.relational(a.body, env1, env2)
            return f"(and (= {c1} {c2}) (=> {c1} {body}))"
        raise e.NotSupportedError(
            f"only boolean expressions, low(), conjunctions and implications"
            f" can be exported to SMT-LIB: {a}"
        )


def _unsupported(ex: Expr) -> e.NotSupportedError:
    return e.NotSupportedError("can't export to SMT-LIB", str(ex))


# Obligations


class SmtScript(NamedTuple):
    """A named script, written to *name* by `commcsl emit-smt`."""

    name: str
    text: str


def obligation_scripts(spec: ResourceSpec) -> List[SmtScript]:
    """
    Return one script per validity obligation of *spec*.

    The scripts are named ``<spec>.A.<action>.smt2`` and
    ``<spec>.B.<action>.<action>.smt2``, in the order the obligations are
    checked by `check_validity()`.
    """
    rv = []
    for a in spec.actions:
        name = f"{spec.name}.A.{a.name}.smt2"
        rv.append(SmtScript(name, _script_a(spec, a, name)))
    for a, b in spec.relevant_pairs():
        name = f"{spec.name}.B.{a.name}.{b.name}.smt2"
        rv.append(SmtScript(name, _script_b(spec, a, b, name)))
    logger.info("spec %s: %s SMT-LIB scripts", spec.name, len(rv))
    return rv


def emit_smtlib(spec: ResourceSpec) -> Dict[str, str]:
    """Return the text of the obligation scripts of *spec* by file name."""
    return OrderedDict(obligation_scripts(spec))


def _alpha(script: Script, spec: ResourceSpec, v: str) -> str:
    return script.expr(spec.alpha, {"v": (v, spec.value_type)})[0]


def _apply(
    script: Script, spec: ResourceSpec, a: Action, v: str, arg: str
) -> str:
    env = {"v": (v, spec.value_type), "arg": (arg, a.arg_type)}
    return script.expr(a.body, env)[0]


def _script_a(spec: ResourceSpec, a: Action, title: str) -> str:
    s = Script(f"{title}: the action preserves low abstractions")
    v1 = s.declare("v", spec.value_type)
    v2 = s.declare("v'", spec.value_type)
    x1 = s.declare("arg", a.arg_type)
    x2 = s.declare("arg'", a.arg_type)
    s.add(f"(= {_alpha(s, spec, v1)} {_alpha(s, spec, v2)})")
    pre = s.relational(
        a.pre, {"arg": (x1, a.arg_type)}, {"arg": (x2, a.arg_type)}
    )
    s.add(pre)
    w1 = _apply(s, spec, a, v1, x1)
    w2 = _apply(s, spec, a, v2, x2)
    env1 = {"v": (w1, spec.value_type)}
    env2 = {"v": (w2, spec.value_type)}
    s.add(
        f"(not (= {s.expr(spec.alpha, env1)[0]} {s.expr(spec.alpha, env2)[0]}))"
    )
    return s.text()


def _script_b(spec: ResourceSpec, a: Action, b: Action, title: str) -> str:
    s = Script(f"{title}: the actions commute on the abstraction")
    v1 = s.declare("v", spec.value_type)
    v2 = s.declare("v'", spec.value_type)
    x = s.declare("arg", a.arg_type)
    y = s.declare("arg'", b.arg_type)
    s.add(f"(= {_alpha(s, spec, v1)} {_alpha(s, spec, v2)})")
    left = _apply(s, spec, b, _apply(s, spec, a, v1, x), y)
    right = _apply(s, spec, a, _apply(s, spec, b, v2, y), x)
    env1 = {"v": (left, spec.value_type)}
    env2 = {"v": (right, spec.value_type)}
    s.add(
        f"(not (= {s.expr(spec.alpha, env1)[0]} {s.expr(spec.alpha, env2)[0]}))"
    )
    return s.text()


# Entailment


def entailment_script(
    p: Assertion,
    q: Assertion,
    env: Dict[str, Type],
    title: str = "entailment",
) -> str:
    """
    Return a script proving that *p* entails *q* on every pair of stores.

    Both assertions must only constrain the stores. Every variable of *env*
    is declared twice, as ``x.1`` and ``x.2``.
    """
    s = Script(title)
    env1: SmtEnv = {}
    env2: SmtEnv = {}
    for name in sorted(free_vars(p) | free_vars(q)):
        ty = env.get(name, INT)
        env1[name] = (s.declare(f"{name}.1", ty), ty)
        env2[name] = (s.declare(f"{name}.2", ty), ty)
    s.add(s.relational(p, env1, env2))
    s.add(f"(not {s.relational(q, env1, env2)})")
    return s.text()


# Solving


def solve(text: str) -> str:
    """
    Run a script with the z3 solver, if installed.

    Return ``sat``, ``unsat`` or ``unknown``. Raise `NotSupportedError` if
    the ``z3-solver`` package isn't available.
    """
    try:
        import z3
    except ImportError:
        raise e.NotSupportedError(
            "the z3-solver package is required to solve SMT-LIB scripts"
        ) from None

    commands = ("(set-", "(check-sat", "(get-")
    body = "\n".join(
        line for line in text.splitlines() if not line.startswith(commands)
    )
    solver = z3.Solver()
    solver.add(z3.parse_smt2_string(body))
    rv = str(solver.check())
    logger.debug("solver: %s", rv)
    return rv
