"""
Parsing of programs, assertions and resource specifications.
"""

# Copyright (C) 2022 The CommCSL Team

import re
import logging
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Dict, List, NamedTuple, Optional, Set, Tuple
from typing import TypeVar, Union

from . import errors as e
from .types import Type, INT, BOOL, PairType, SeqType, MultisetType, MapType
from .syntax import Expr, IntLit, BoolLit, Var, UnOp, BinOp, Cond, Let
from .syntax import PairLit, SeqLit, MSetLit, MapLit, Call, Index, Update
from .syntax import Command, Assign, Read, Write, Alloc, Skip, If, While, Par
from .syntax import Atomic, Assertion, Emp, Pure, PointsTo, Star, And, Exists
from .syntax import SGuard, UGuard, Implies, Low, NoGuard, AllPre, BUILTINS
from .syntax import Pos, seq, contains
from .typecheck import check_command, check_expr, check_assertion

logger = logging.getLogger(__name__)

T = TypeVar("T")


class Token(NamedTuple):
    kind: str  # num, name, op, nl, annot, eof
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t\r]+)
    | (?P<annot>//@[^\n]*)
    | (?P<comment>//[^\n]*)
    | (?P<nl>\n)
    | (?P<num>\d+)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<op>
        \|->|\{\||\|\}|\|\||&&|==>|==|!=|<=|>=|:=|\+\+|\*\*|/\\
        | [-+*/<>!?:;,.()\[\]{}=]
      )
    """,
    re.VERBOSE,
)

KEYWORDS = {
    "true",
    "false",
    "let",
    "in",
    "skip",
    "if",
    "else",
    "while",
    "atomic",
    "alloc",
    "var",
    "requires",
}
ASSERTION_KEYWORDS = {
    "emp",
    "low",
    "noguard",
    "allpre",
    "sguard",
    "uguard",
    "exists",
}
_STMT_END = {";", "}", ")", "||"}


@lru_cache(maxsize=128)
def tokenize(text: str) -> Tuple[Token, ...]:
    """
    Split *text* into tokens.

    ``//@`` annotation lines become a single ``annot`` token; an annotation
    opening more braces than it closes continues on the following ``//@``
    lines.
    """
    rv: List[Token] = []
    pos = 0
    line = 1
    line_start = 0
    pending: Optional[Token] = None
    depth = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise e.ParseError(
                f"unexpected character {text[pos]!r}", line, pos - line_start + 1
            )
        kind = m.lastgroup
        assert kind
        col = pos - line_start + 1
        value = m.group()
        pos = m.end()

        if kind == "ws" or kind == "comment":
            continue

        if kind == "nl":
            line += 1
            line_start = pos
            if pending is None:
                rv.append(Token("nl", "\n", line - 1, col))
            continue

        if kind == "annot":
            body = value[3:]
            depth += body.count("{") - body.count("}")
            if pending is not None:
                pending = pending._replace(text=pending.text + "\n" + body)
            else:
                pending = Token("annot", body, line, col + 3)
            if depth <= 0:
                rv.append(pending)
                pending = None
                depth = 0
            continue

        if pending is not None:
            raise e.ParseError(
                "unbalanced braces in annotation", pending.line, pending.col
            )
        rv.append(Token(kind, value, line, col))

    if pending is not None:
        raise e.ParseError(
            "unbalanced braces in annotation", pending.line, pending.col
        )
    rv.append(Token("eof", "", line, pos - line_start + 1))
    return tuple(rv)


class Annotation(NamedTuple):
    """A ``//@`` line found between statements."""

    text: str
    line: int
    col: int


class Stmt(NamedTuple):
    """
    A statement of an annotated program.

    `blocks` contains the annotated sub-blocks: the branches of an `if`, the
    body of `while` and `atomic`, the threads of a parallel composition.
    """

    cmd: Command
    blocks: Tuple[List["Item"], ...] = ()


Item = Union[Annotation, Stmt]


class Program(NamedTuple):
    """Result of `parse_annotated()`."""

    items: List[Item]
    command: Command
    decls: Dict[str, Type]


def block_command(items: List[Item]) -> Command:
    """Return the command of an annotated block, dropping annotations."""
    return seq(i.cmd for i in items if isinstance(i, Stmt))


class Parser:
    """
    A recursive descent parser over the tokens of a text.

    Errors are raised as `ParseError`, positions are shifted by *line0* and
    *col0* so that texts extracted from annotations report positions in their
    file.
    """

    def __init__(
        self,
        text: str,
        source: str = "",
        line0: int = 0,
        col0: int = 0,
        keep_annotations: bool = False,
    ):
        self.source = source
        self.line0 = line0
        self.col0 = col0
        try:
            tokens = tokenize(text)
        except e.ParseError as ex:
            raise self._shift(ex) from None
        if not keep_annotations:
            tokens = tuple(t for t in tokens if t.kind != "annot")
        self.tokens = tokens
        self.i = 0
        self.decls: Dict[str, Type] = {}
        self._no_or = False

    # Token helpers

    def _shift(self, ex: e.ParseError) -> e.ParseError:
        line = ex.line + self.line0 if ex.line else 0
        col = ex.col + (self.col0 if ex.line == 1 else 0)
        return e.ParseError(ex.msg, line, col, self.source)

    def error(self, msg: str, tok: Optional[Token] = None) -> e.ParseError:
        tok = tok or self.peek()
        return self._shift(e.ParseError(msg, tok.line, tok.col))

    def peek(self, k: int = 0) -> Token:
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.peek()
        self.i = min(self.i + 1, len(self.tokens) - 1)
        return tok

    def at(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind in ("op", "name") and tok.text in texts

    def accept(self, text: str) -> bool:
        if self.at(text):
            self.next()
            return True
        return False

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not self.at(text):
            got = repr(tok.text) if tok.kind != "eof" else "end of input"
            raise self.error(f"expected {text!r}, got {got}")
        return self.next()

    def name(self) -> str:
        tok = self.peek()
        if (
            tok.kind != "name"
            or tok.text in KEYWORDS
            or tok.text in ASSERTION_KEYWORDS
        ):
            raise self.error(f"expected a name, got {tok.text!r}")
        return self.next().text

    def pos(self) -> Pos:
        tok = self.peek()
        return (tok.line + self.line0, tok.col)

    def skip_newlines(self) -> None:
        while self.peek().kind == "nl":
            self.next()

    def at_eof(self) -> bool:
        return self.peek().kind == "eof"

    def expect_eof(self) -> None:
        self.skip_newlines()
        if not self.at_eof():
            raise self.error(f"unexpected {self.peek().text!r}")

    def attempt(self, fn: Callable[[], T]) -> Optional[T]:
        """Run *fn*; on parse error restore the position and return None."""
        saved = self.i, self._no_or
        try:
            return fn()
        except e.ParseError:
            self.i, self._no_or = saved
            return None

    def _nested(self, fn: Callable[[], T], no_or: bool = False) -> T:
        saved = self._no_or
        self._no_or = no_or
        try:
            return fn()
        finally:
            self._no_or = saved

    # Types

    def type(self) -> Type:
        tok = self.peek()
        name = self.name() if tok.kind == "name" else ""
        if name == "Int":
            return INT
        if name == "Bool":
            return BOOL
        if name in ("Pair", "Map"):
            self.expect("[")
            a = self.type()
            self.expect(",")
            b = self.type()
            self.expect("]")
            return PairType(a, b) if name == "Pair" else MapType(a, b)
        if name in ("Seq", "Multiset"):
            self.expect("[")
            a = self.type()
            self.expect("]")
            return SeqType(a) if name == "Seq" else MultisetType(a)
        raise self.error(f"unknown type {tok.text!r}", tok)

    # Expressions

    def expr(self) -> Expr:
        if self.accept("let"):
            name = self.name()
            self.expect("=")
            value = self.expr()
            self.expect("in")
            return Let(name, value, self.expr())
        cond = self._or()
        if self.accept("?"):
            then = self._nested(self.expr)
            self.expect(":")
            return Cond(cond, then, self.expr())
        return cond

    def _or(self) -> Expr:
        rv = self._and()
        while not self._no_or and self.accept("||"):
            rv = BinOp("||", rv, self._and())
        return rv

    def _and(self) -> Expr:
        rv = self._compare()
        while self.accept("&&"):
            rv = BinOp("&&", rv, self._compare())
        return rv

    def _compare(self) -> Expr:
        rv = self._add()
        if self.at("==", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            rv = BinOp(op, rv, self._add())
            if self.at("==", "!=", "<", "<=", ">", ">="):
                raise self.error("comparison operators cannot be chained")
        return rv

    def _add(self) -> Expr:
        rv = self._mul()
        while self.at("+", "-", "++"):
            op = self.next().text
            rv = BinOp(op, rv, self._mul())
        return rv

    def _mul(self) -> Expr:
        rv = self._unary()
        while self.at("*"):
            self.next()
            rv = BinOp("*", rv, self._unary())
        return rv

    def _unary(self) -> Expr:
        if self.at("-"):
            self.next()
            if self.peek().kind == "num":
                return self._postfix(IntLit(-int(self.next().text)))
            return UnOp("-", self._unary())
        if self.accept("!"):
            return UnOp("!", self._unary())
        return self._postfix(self._primary())

    def _postfix(self, rv: Expr) -> Expr:
        while self.at("["):
            self.next()
            index = self._nested(self.expr)
            if self.accept(":="):
                value = self._nested(self.expr)
                self.expect("]")
                rv = Update(rv, index, value)
            else:
                self.expect("]")
                rv = Index(rv, index)
        return rv

    def _primary(self) -> Expr:
        tok = self.peek()
        if tok.kind == "num":
            self.next()
            return IntLit(int(tok.text))
        if tok.kind == "name":
            if tok.text in ("true", "false"):
                self.next()
                return BoolLit(tok.text == "true")
            if tok.text in BUILTINS:
                return self._call()
            return Var(self.name())
        if self.accept("("):
            first = self._nested(self.expr)
            if self.accept(","):
                second = self._nested(self.expr)
                self.expect(")")
                return PairLit(first, second)
            self.expect(")")
            return first
        if self.accept("["):
            items = self._list("]", self.expr)
            return SeqLit(tuple(items))
        if self.accept("{|"):
            items = self._list("|}", self.expr)
            return MSetLit(tuple(items))
        if self.accept("{"):
            entries = self._list("}", self._entry)
            return MapLit(tuple(entries))
        got = repr(tok.text) if tok.kind != "eof" else "end of input"
        raise self.error(f"expected an expression, got {got}")

    def _call(self) -> Expr:
        tok = self.next()
        self.expect("(")
        args = self._list(")", self.expr)
        if len(args) != BUILTINS[tok.text]:
            raise self.error(
                f"{tok.text} takes {BUILTINS[tok.text]} argument(s),"
                f" {len(args)} given",
                tok,
            )
        return Call(tok.text, tuple(args))

    def _entry(self) -> Tuple[Expr, Expr]:
        k = self.expr()
        self.expect(":")
        return k, self.expr()

    def _list(self, close: str, item: Callable[[], T]) -> List[T]:
        def parse() -> List[T]:
            rv: List[T] = []
            if self.accept(close):
                return rv
            while True:
                rv.append(item())
                if self.accept(close):
                    return rv
                self.expect(",")

        return self._nested(parse)

    # Statements

    def items(self, close: Set[str]) -> List[Item]:
        """Parse a sequence of statements and annotations up to *close*."""
        rv: List[Item] = []
        while True:
            tok = self.peek()
            if tok.kind == "nl" or self.at(";"):
                self.next()
                continue
            if tok.kind == "annot":
                self.next()
                rv.append(Annotation(tok.text, tok.line + self.line0, tok.col))
                continue
            if tok.kind == "eof" or (tok.kind == "op" and tok.text in close):
                return rv
            if self.at("var"):
                self.decl()
            elif self.at("("):
                rv.extend(self._group())
            else:
                rv.append(self.stmt())
            self._end_of_stmt()

    def _end_of_stmt(self) -> None:
        tok = self.peek()
        if tok.kind in ("nl", "annot", "eof"):
            return
        if tok.kind == "op" and tok.text in _STMT_END:
            return
        raise self.error(f"expected end of statement, got {tok.text!r}")

    def decl(self) -> None:
        self.expect("var")
        tok = self.peek()
        name = self.name()
        self.expect(":")
        ty = self.type()
        if self.decls.get(name, ty) != ty:
            raise self.error(f"variable {name} declared twice", tok)
        self.decls[name] = ty

    def stmt(self) -> Stmt:
        pos = self.pos()
        tok = self.peek()
        if self.accept("skip"):
            return Stmt(Skip(pos=pos))
        if self.accept("if"):
            return self._if(pos)
        if self.accept("while"):
            self.expect("(")
            cond = self._nested(self.expr)
            self.expect(")")
            body = self.block()
            return Stmt(While(cond, block_command(body), pos=pos), (body,))
        if self.accept("atomic"):
            if not self.accept(":"):
                body = self.block()
            elif self.at("("):
                body = self._group()
            else:
                body = [self._nested(self.stmt)]
            cmd = block_command(body)
            if contains(cmd, Par, Atomic):
                raise self.error("nested parallelism in atomic", tok)
            return Stmt(Atomic(cmd, pos=pos), (body,))
        if self.at("["):
            self.next()
            addr = self._nested(self.expr)
            self.expect("]")
            self.expect(":=")
            return Stmt(Write(addr, self.expr(), pos=pos))
        if tok.kind == "name":
            target = self.name()
            self.expect(":=")
            if self.accept("alloc"):
                self.expect("(")
                value = self._nested(self.expr)
                self.expect(")")
                return Stmt(Alloc(target, value, pos=pos))
            if self.at("["):
                addr = self.attempt(self._read_addr)
                if addr is not None:
                    return Stmt(Read(target, addr, pos=pos))
            return Stmt(Assign(target, self.expr(), pos=pos))
        raise self.error(f"expected a statement, got {tok.text!r}")

    def _read_addr(self) -> Expr:
        self.expect("[")
        addr = self._nested(self.expr)
        self.expect("]")
        self._end_of_stmt()
        return addr

    def _if(self, pos: Pos) -> Stmt:
        self.expect("(")
        cond = self._nested(self.expr)
        self.expect(")")
        then = self.block()
        orelse: List[Item] = []
        if self.peek().kind == "nl" and self._else_follows():
            self.skip_newlines()
        if self.accept("else"):
            if self.at("if"):
                epos = self.pos()
                self.next()
                orelse = [self._if(epos)]
            else:
                orelse = self.block()
        cmd = If(cond, block_command(then), block_command(orelse), pos=pos)
        return Stmt(cmd, (then, orelse))

    def _else_follows(self) -> bool:
        k = 0
        while self.peek(k).kind == "nl":
            k += 1
        tok = self.peek(k)
        return tok.kind == "name" and tok.text == "else"

    def block(self) -> List[Item]:
        self.skip_newlines()
        self.expect("{")
        rv = self._nested(lambda: self.items({"}"}))
        self.expect("}")
        return rv

    def _group(self) -> List[Item]:
        pos = self.pos()
        self.expect("(")
        branches = [self._nested(lambda: self.items({")", "||"}), no_or=True)]
        while self.accept("||"):
            branches.append(
                self._nested(lambda: self.items({")", "||"}), no_or=True)
            )
        self.expect(")")
        if len(branches) == 1:
            return branches[0]

        cmds = [block_command(b) for b in branches]
        cmd = cmds[-1]
        for c in reversed(cmds[:-1]):
            cmd = Par(c, cmd, pos=pos)
        return [Stmt(cmd, tuple(branches))]

    # Assertions

    def assertion(self) -> Assertion:
        rv = self._conj()
        while self.accept("**"):
            rv = Star(rv, self._conj())
        return rv

    def _conj(self) -> Assertion:
        rv = self._unit()
        while self.accept("/\\"):
            rv = And(rv, self._unit())
        return rv

    def _unit(self) -> Assertion:
        tok = self.peek()
        if tok.kind == "name" and tok.text in ASSERTION_KEYWORDS:
            return self._keyword_assertion()

        rv = self.attempt(self._expr_assertion)
        if rv is not None:
            return rv
        if self.accept("("):
            rv = self._nested(self.assertion)
            self.expect(")")
            return rv
        # Report the error of the expression parse
        return self._expr_assertion()

    def _expr_assertion(self) -> Assertion:
        expr = self._nested(self.expr)
        if self.accept("|->"):
            # `[` starts either a fraction or a sequence literal value
            rv = self.attempt(lambda: self._fractional_value(expr))
            if rv is not None:
                return rv
            return PointsTo(expr, Fraction(1), self._nested(self.expr))
        if self.accept("==>"):
            return Implies(expr, self._unit())
        tok = self.peek()
        if not (
            tok.kind in ("eof", "nl")
            or tok.text in ("**", "/\\", ")", "}", ",")
        ):
            raise self.error(f"unexpected {tok.text!r} in assertion")
        return Pure(expr)

    def _fractional_value(self, addr: Expr) -> Assertion:
        self.expect("[")
        frac = self.fraction()
        self.expect("]")
        return PointsTo(addr, frac, self._nested(self.expr))

    def _keyword_assertion(self) -> Assertion:
        kw = self.next().text
        if kw == "emp":
            return Emp()
        if kw == "exists":
            name = self.name()
            ty = self.type() if self.accept(":") else None
            self.expect(".")
            return Exists(name, ty, self.assertion())

        self.expect("(")
        rv: Assertion
        if kw == "low":
            rv = Low(self._nested(self.expr))
        elif kw == "noguard":
            rv = NoGuard(self._nested(self.assertion))
        elif kw == "sguard":
            frac = self.fraction()
            self.expect(",")
            rv = SGuard(frac, self._nested(self.expr))
        elif kw == "uguard":
            action = self.name()
            self.expect(",")
            rv = UGuard(action, self._nested(self.expr))
        else:
            assert kw == "allpre"
            first = self._nested(self.expr)
            if self.accept(","):
                if not isinstance(first, Var):
                    raise self.error("expected an action name")
                rv = AllPre(first.name, self._nested(self.expr))
            else:
                rv = AllPre(None, first)
        self.expect(")")
        return rv

    def fraction(self) -> Fraction:
        tok = self.peek()
        if tok.kind != "num":
            raise self.error(f"expected a fraction, got {tok.text!r}")
        num = int(self.next().text)
        den = 1
        if self.accept("/"):
            dtok = self.peek()
            if dtok.kind != "num" or int(dtok.text) == 0:
                raise self.error("bad fraction denominator")
            den = int(self.next().text)
        rv = Fraction(num, den)
        if not 0 < rv <= 1:
            raise self.error(f"fraction {rv} not in (0, 1]", tok)
        return rv


def parse_expr(
    text: str, env: Optional[Dict[str, Type]] = None, source: str = ""
) -> Expr:
    """Parse and type check an expression."""
    p = Parser(text, source)
    p.skip_newlines()
    rv = p.expr()
    p.expect_eof()
    return check_expr(rv, env)


def parse_assertion(
    text: str,
    env: Optional[Dict[str, Type]] = None,
    source: str = "",
    line0: int = 0,
    col0: int = 0,
) -> Assertion:
    """Parse and type check an assertion."""
    p = Parser(text, source, line0, col0)
    p.skip_newlines()
    rv = p.assertion()
    p.expect_eof()
    return check_assertion(rv, env)


def parse_type(text: str) -> Type:
    p = Parser(text)
    rv = p.type()
    p.expect_eof()
    return rv


def parse_annotated(text: str, source: str = "") -> Program:
    """
    Parse a program keeping its ``//@`` annotations.

    The command is type checked with the declared variable types.
    """
    p = Parser(text, source, keep_annotations=True)
    items = p.items(set())
    p.expect_eof()
    cmd = check_command(block_command(items), p.decls)
    return Program(items, cmd, p.decls)


def parse_program(text: str, source: str = "") -> Command:
    """
    Parse and type check a program.

    Annotation lines are ignored. Variables not declared with ``var`` have
    type Int.
    """
    p = Parser(text, source)
    items = p.items(set())
    p.expect_eof()
    cmd = block_command(items)
    logger.debug("parsed program %s", source or "<string>")
    return check_command(cmd, p.decls)
