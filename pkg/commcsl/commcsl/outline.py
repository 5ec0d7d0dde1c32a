"""
Annotated programs: the ``//@`` directives of a proof outline.
"""

# Copyright (C) 2022 The CommCSL Team

import os
import re
import logging
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Tuple
from typing import Union

from . import errors as e
from .bounds import Domain, ExploreBounds
from .types import Type
from .values import Value
from .syntax import Expr, Assertion, Command, subst
from .parser import Annotation, Stmt, Item, Parser, parse_annotated
from .typecheck import check_assertion, check_command, check_expr, infer_expr
from .evaluate import eval_expr
from .resource import ResourceSpec, load_specs

logger = logging.getLogger(__name__)


class ResourceContext:
    """
    A resource specification together with an invariant.

    The invariant is an assertion with a free variable *param*, the value of
    the shared resource.
    """

    __slots__ = ("name", "spec", "param", "invariant")

    def __init__(
        self, name: str, spec: ResourceSpec, param: str, invariant: Assertion
    ):
        self.name = name
        self.spec = spec
        self.param = param
        self.invariant = invariant

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.name} ({self.spec.name})>"

    @property
    def value_type(self) -> Type:
        return self.spec.value_type

    def instantiate(self, value: Expr) -> Assertion:
        """Return the invariant applied to *value*."""
        return subst(self.invariant, {self.param: value})

    def alpha(self, value: Expr) -> Expr:
        """Return the abstraction of *value*."""
        return subst(self.spec.alpha, {"v": value})


# Directives


class Point(NamedTuple):
    """An assertion holding at a point of the program."""

    assertion: Assertion
    line: int = 0


class Use(NamedTuple):
    path: str
    line: int = 0


class LogicalVar(NamedTuple):
    name: str
    type: Type
    line: int = 0


class ContextDecl(NamedTuple):
    name: str
    spec: str
    param: str
    text: str
    line: int = 0
    col: int = 0


class BoundsDecl(NamedTuple):
    """Bounds pinned by the program; only the values given are set."""

    domain: Dict[str, int]
    explore: Dict[str, int]
    line: int = 0


class NIDecl(NamedTuple):
    """
    The inputs and outputs of a non-interference check.

    The inputs map to their finite domain, `!None` to use the values of
    their type.
    """

    low_in: Dict[str, Optional[Tuple[Value, ...]]]
    high_in: Dict[str, Optional[Tuple[Value, ...]]]
    low_out: Tuple[str, ...]
    line: int = 0


class ShareTag(NamedTuple):
    context: str
    line: int = 0


class UnshareTag(NamedTuple):
    line: int = 0


class AtomicTag(NamedTuple):
    """The action performed by an atomic block: `!None` for the shared."""

    action: Optional[str]
    arg: Expr
    var: Optional[str] = None
    line: int = 0


class FrameTag(NamedTuple):
    frame: Assertion
    line: int = 0


class ExistsTag(NamedTuple):
    name: str
    witness: Optional[Tuple[Expr, Expr]] = None
    line: int = 0


class RuleTag(NamedTuple):
    rule: str
    line: int = 0


Directive = Union[
    Point,
    Use,
    LogicalVar,
    ContextDecl,
    BoundsDecl,
    NIDecl,
    ShareTag,
    UnshareTag,
    AtomicTag,
    FrameTag,
    ExistsTag,
    RuleTag,
]

RULE_TAGS = ("if-low", "if-high", "while-low", "while-high", "consequence")
HEADER_KEYWORDS = ("use", "var", "context", "bounds", "ni")

_HEAD_RE = re.compile(r"\s*(\{|[a-z]+(?:-[a-z]+)?)")
_USE_RE = re.compile(r'\s*use\s+"([^"]+)"\s*$')
_CONTEXT_RE = re.compile(
    r"\s*context\s+(\w+)\s+spec\s+(\w+)\s+invariant\s+(\w+)\s*\.(.*)$", re.S
)

_DOMAIN_KEYS = {
    "ints": None,
    "heap": "heap_max",
    "container": "container_max",
    "cap": "cap",
}
_EXPLORE_KEYS = {"steps": "max_steps", "configs": "max_configs"}


def directive_head(ann: Annotation) -> str:
    m = _HEAD_RE.match(ann.text)
    return m.group(1) if m else ""


class DirectiveParser:
    """
    Parse the ``//@`` annotations of a file.

    Expressions and assertions are type checked in *env*, guard assertions
    against *spec*.
    """

    def __init__(
        self,
        source: str = "",
        env: Optional[Dict[str, Type]] = None,
        spec: Optional[ResourceSpec] = None,
    ):
        self.source = source
        self.env: Dict[str, Type] = dict(env or {})
        self.spec = spec

    def parse(self, ann: Annotation) -> Directive:
        head = directive_head(ann)
        if not head:
            raise e.ParseError("empty annotation", ann.line, ann.col, self.source)

        if head == "use":
            m = _USE_RE.match(ann.text)
            if m is None:
                raise e.ParseError(
                    'expected use "file.cspec"', ann.line, ann.col, self.source
                )
            return Use(m.group(1), ann.line)

        if head == "context":
            # The invariant is type checked once the spec is known.
            m = _CONTEXT_RE.match(ann.text)
            if m is None:
                raise e.ParseError(
                    "expected context NAME spec SPEC invariant X . assertion",
                    ann.line,
                    ann.col,
                    self.source,
                )
            return ContextDecl(
                m.group(1),
                m.group(2),
                m.group(3),
                m.group(4),
                ann.line,
                ann.col + m.start(4),
            )

        p = self._start(ann, head)
        rv: Directive
        if head == "{":
            a = self._assertion(p)
            p.expect("}")
            rv = Point(a, ann.line)
        elif head == "var":
            name = p.name()
            p.expect(":")
            rv = LogicalVar(name, p.type(), ann.line)
        elif head == "bounds":
            rv = self._bounds(p, ann)
        elif head == "ni":
            rv = self._ni(p, ann)
        elif head == "share":
            rv = ShareTag(p.name(), ann.line)
        elif head == "unshare":
            rv = UnshareTag(ann.line)
        elif head in ("atomic-shared", "atomic-unique"):
            action = p.name() if head == "atomic-unique" else None
            arg = p.expr()
            var = p.name() if p.accept("with") else None
            rv = AtomicTag(action, self._arg(arg, action, p), var, ann.line)
        elif head == "frame":
            p.expect("{")
            frame = self._assertion(p)
            p.expect("}")
            rv = FrameTag(frame, ann.line)
        elif head == "exists":
            name = p.name()
            witness = None
            if p.accept("witness"):
                w1 = self._expr(p.expr(), p)
                p.expect(",")
                w2 = self._expr(p.expr(), p)
                witness = (w1, w2)
            rv = ExistsTag(name, witness, ann.line)
        elif head in RULE_TAGS:
            rv = RuleTag(head, ann.line)
        else:
            raise p.error(f"unknown annotation {head!r}")
        p.expect_eof()
        return rv

    def _start(self, ann: Annotation, head: str) -> Parser:
        # Skip the head, which may contain hyphens, before tokenizing.
        offset = ann.text.index(head)
        if head != "{":
            offset += len(head)
        p = Parser(
            ann.text[offset:], self.source, ann.line - 1, ann.col + offset
        )
        # continuation lines of a long annotation
        p.tokens = tuple(t for t in p.tokens if t.kind != "nl")
        if head == "{":
            p.expect("{")
        return p

    def _assertion(self, p: Parser) -> Assertion:
        tok = p.peek()
        a = p.assertion()
        try:
            return check_assertion(a, self.env, self.spec)
        except e.TypeCheckError as ex:
            raise p.error(str(ex), tok) from None

    def _expr(self, ex: Expr, p: Parser) -> Expr:
        try:
            return infer_expr(ex, self.env)[0]
        except e.TypeCheckError as exc:
            raise p.error(str(exc)) from None

    def _arg(self, ex: Expr, action: Optional[str], p: Parser) -> Expr:
        if self.spec is None:
            raise p.error("atomic tag without a resource context")
        act = self.spec.get_action(action)
        if act is None:
            what = action or "(shared)"
            raise p.error(f"spec {self.spec.name} has no action {what}")
        try:
            return check_expr(ex, self.env, act.arg_type)
        except e.TypeCheckError as exc:
            raise p.error(str(exc)) from None

    def _bounds(self, p: Parser, ann: Annotation) -> BoundsDecl:
        domain: Dict[str, int] = {}
        explore: Dict[str, int] = {}
        while not p.at_eof():
            key = p.next().text
            if key == "ints":
                lo, hi = self._range(p)
                domain["int_lo"] = lo
                domain["int_hi"] = hi
            elif key in _DOMAIN_KEYS:
                domain[str(_DOMAIN_KEYS[key])] = self._int(p)
            elif key in _EXPLORE_KEYS:
                explore[_EXPLORE_KEYS[key]] = self._int(p)
            else:
                raise p.error(f"unknown bound {key!r}")
        return BoundsDecl(domain, explore, ann.line)

    def _int(self, p: Parser) -> int:
        neg = p.accept("-")
        tok = p.next()
        if tok.kind != "num":
            raise p.error(f"expected a number, got {tok.text!r}", tok)
        return -int(tok.text) if neg else int(tok.text)

    def _range(self, p: Parser) -> Tuple[int, int]:
        lo = self._int(p)
        p.expect(".")
        p.expect(".")
        return lo, self._int(p)

    def _ni(self, p: Parser, ann: Annotation) -> NIDecl:
        low_in: Dict[str, Optional[Tuple[Value, ...]]] = {}
        high_in: Dict[str, Optional[Tuple[Value, ...]]] = {}
        low_out: List[str] = []
        target: Optional[Dict[str, Optional[Tuple[Value, ...]]]] = None
        outputs = False
        while not p.at_eof():
            if p.accept("low_in"):
                target, outputs = low_in, False
                continue
            if p.accept("high_in"):
                target, outputs = high_in, False
                continue
            if p.accept("low_out"):
                target, outputs = None, True
                continue
            tok = p.peek()
            name = p.name()
            if outputs:
                low_out.append(name)
            elif target is None:
                raise p.error("expected low_in, high_in or low_out", tok)
            else:
                target[name] = self._values(p) if p.accept("in") else None
        both = set(low_in) & set(high_in)
        if both:
            raise p.error(f"inputs both low and high: {', '.join(sorted(both))}")
        if not low_out:
            raise p.error("no low output declared")
        return NIDecl(low_in, high_in, tuple(low_out), ann.line)

    def _values(self, p: Parser) -> Tuple[Value, ...]:
        if not p.at("{"):
            lo, hi = self._range(p)
            return tuple(range(lo, hi + 1))
        p.expect("{")
        rv: List[Value] = []
        while not p.accept("}"):
            if rv:
                p.expect(",")
            rv.append(eval_expr(self._expr(p.expr(), p), {}))
        return tuple(rv)


# Outlines


class Outline(NamedTuple):
    """
    A parsed annotated program.

    `items` has the same structure as the program blocks, with the
    annotations replaced by directives. Header directives (``use``, ``var``,
    ``context``, ``bounds``, ``ni``) are collected in the other fields.
    """

    source: str
    items: List["OutlineItem"]
    command: Command
    decls: Dict[str, Type]
    logical: Dict[str, Type]
    specs: Dict[str, ResourceSpec]
    contexts: Dict[str, ResourceContext]
    domain: Dict[str, int]
    explore: Dict[str, int]
    ni: Optional[NIDecl]

    @property
    def env(self) -> Dict[str, Type]:
        rv = dict(self.decls)
        rv.update(self.logical)
        return rv

    def get_domain(self, base: Domain = Domain(), **kwargs: Any) -> Domain:
        """
        Return the domain pinned by the file, overridden by *kwargs*.
        """
        values = dict(self.domain)
        values.update((k, v) for k, v in kwargs.items() if v is not None)
        return base._replace(**values).check()

    def get_explore(
        self, base: ExploreBounds = ExploreBounds(), **kwargs: Any
    ) -> ExploreBounds:
        values = dict(self.explore)
        values.update((k, v) for k, v in kwargs.items() if v is not None)
        return base._replace(**values).check()


class OStmt(NamedTuple):
    """A statement with its blocks of outline items."""

    cmd: Command
    blocks: Tuple[List["OutlineItem"], ...]
    line: int = 0


OutlineItem = Union[Directive, OStmt]


def parse_outline(
    text: str,
    source: str = "",
    reader: Optional[Callable[[str], str]] = None,
) -> Outline:
    """
    Parse an annotated program.

    ``use`` directives are resolved relative to the directory of *source*
    and read with *reader*.
    """
    program = parse_annotated(text, source)

    # First pass: the header directives, needed to type the others
    headers: List[Tuple[str, Annotation]] = []
    for ann in _annotations(program.items):
        head = directive_head(ann)
        if head in HEADER_KEYWORDS:
            headers.append((head, ann))

    pre = DirectiveParser(source, program.decls)
    logical: Dict[str, Type] = {}
    uses: List[str] = []
    decls: List[ContextDecl] = []
    domain: Dict[str, int] = {}
    explore: Dict[str, int] = {}
    ni: Optional[NIDecl] = None
    for head, ann in headers:
        d = pre.parse(ann)
        if isinstance(d, Use):
            uses.append(d.path)
        elif isinstance(d, LogicalVar):
            if d.name in program.decls or d.name in logical:
                raise e.OutlineError(
                    f"{source}:{d.line}: variable {d.name} declared twice"
                )
            logical[d.name] = d.type
        elif isinstance(d, ContextDecl):
            decls.append(d)
        elif isinstance(d, BoundsDecl):
            domain.update(d.domain)
            explore.update(d.explore)
        elif isinstance(d, NIDecl):
            if ni is not None:
                raise e.OutlineError(f"{source}:{d.line}: ni declared twice")
            ni = d

    specs: Dict[str, ResourceSpec] = {}
    if uses:
        if reader is None:
            raise e.InterfaceError("a reader is required to load the specs")
        base = os.path.dirname(source)
        specs = load_specs([os.path.join(base, u) for u in uses], reader)

    env = dict(program.decls)
    env.update(logical)
    contexts: Dict[str, ResourceContext] = {}
    for cd in decls:
        if cd.spec not in specs:
            raise e.OutlineError(
                f"{source}:{cd.line}: context {cd.name}: unknown spec {cd.spec}"
            )
        spec = specs[cd.spec]
        ienv = dict(env)
        ienv[cd.param] = spec.value_type
        p = Parser(cd.text, source, cd.line - 1, cd.col)
        p.tokens = tuple(t for t in p.tokens if t.kind != "nl")
        inv = p.assertion()
        p.expect_eof()
        try:
            inv = check_assertion(inv, ienv, spec)
        except e.TypeCheckError as ex:
            raise e.ParseError(str(ex), cd.line, cd.col, source) from None
        contexts[cd.name] = ResourceContext(cd.name, spec, cd.param, inv)
    if len(contexts) > 1:
        raise e.OutlineError(f"{source}: only one resource context is allowed")

    spec = next(iter(contexts.values())).spec if contexts else None
    dp = DirectiveParser(source, env, spec)
    items = _convert(program.items, dp)
    logger.debug(
        "outline %s: %s contexts, %s specs", source, len(contexts), len(specs)
    )
    return Outline(
        source,
        items,
        program.command,
        program.decls,
        logical,
        specs,
        contexts,
        domain,
        explore,
        ni,
    )


def load_outline(path: str) -> Outline:
    """Read and parse an annotated program file."""
    return parse_outline(read_text(path), path, read_text)


def read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as f:
            return f.read()
    except OSError as ex:
        raise e.InterfaceError(f"can't read {path}: {ex.strerror}") from None


def _annotations(items: List[Item]) -> List[Annotation]:
    rv: List[Annotation] = []
    for item in items:
        if isinstance(item, Annotation):
            rv.append(item)
        else:
            for block in item.blocks:
                rv.extend(_annotations(block))
    return rv


def _convert(items: List[Item], dp: DirectiveParser) -> List[OutlineItem]:
    rv: List[OutlineItem] = []
    for item in items:
        if isinstance(item, Annotation):
            if directive_head(item) not in HEADER_KEYWORDS:
                rv.append(dp.parse(item))
        else:
            assert isinstance(item, Stmt)
            blocks = tuple(_convert(b, dp) for b in item.blocks)
            cmd = check_command(item.cmd, dp.env)
            rv.append(OStmt(cmd, blocks, item.cmd.pos[0]))
    return rv
