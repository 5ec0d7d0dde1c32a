"""
Abstract syntax of programs, expressions and relational assertions.

All the nodes are immutable: they can be hashed, compared structurally and
shared between threads. Source positions and elaborated types are carried
along but don't take part in comparisons.
"""

# Copyright (C) 2022 The CommCSL Team

from fractions import Fraction
from dataclasses import dataclass, field, fields, replace
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator
from typing import List, Optional, Set, Tuple, TypeVar, Union, cast

from .types import Type

Pos = Tuple[int, int]
NOPOS: Pos = (0, 0)

N = TypeVar("N", bound="Node")


@dataclass(frozen=True)
class Node:
    """Base class for all the syntax nodes."""

    def children(self) -> Iterator["Node"]:
        """Generate the direct sub-nodes, in field order."""
        for f in fields(self):
            if not f.compare:
                continue
            yield from _nodes_in(getattr(self, f.name))

    def walk(self) -> Iterator["Node"]:
        """Generate the node and all its descendants, pre-order."""
        yield self
        for child in self.children():
            yield from child.walk()

    def map_children(self: N, fn: Callable[["Node"], "Node"]) -> N:
        """Return a copy of the node with *fn* applied to the sub-nodes."""
        changes = {}
        for f in fields(self):
            if not f.compare:
                continue
            old = getattr(self, f.name)
            new = _map_in(old, fn)
            if new is not old:
                changes[f.name] = new
        return replace(self, **changes) if changes else self

    def __str__(self) -> str:
        from .printer import as_string

        return as_string(self)


def _nodes_in(obj: Any) -> Iterator[Node]:
    if isinstance(obj, Node):
        yield obj
    elif isinstance(obj, tuple):
        for item in obj:
            yield from _nodes_in(item)


def _map_in(obj: Any, fn: Callable[[Node], Node]) -> Any:
    if isinstance(obj, Node):
        return fn(obj)
    if isinstance(obj, tuple):
        new = tuple(_map_in(item, fn) for item in obj)
        if all(a is b for a, b in zip(new, obj)):
            return obj
        return new
    return obj


# Expressions


@dataclass(frozen=True)
class Expr(Node):
    pass


@dataclass(frozen=True)
class IntLit(Expr):
    value: int


@dataclass(frozen=True)
class BoolLit(Expr):
    value: bool


@dataclass(frozen=True)
class Var(Expr):
    name: str
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UnOp(Expr):
    op: str  # "-" or "!"
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Cond(Expr):
    cond: Expr
    then: Expr
    orelse: Expr


@dataclass(frozen=True)
class Let(Expr):
    name: str
    value: Expr
    body: Expr


@dataclass(frozen=True)
class PairLit(Expr):
    fst: Expr
    snd: Expr


@dataclass(frozen=True)
class SeqLit(Expr):
    items: Tuple[Expr, ...]
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MSetLit(Expr):
    items: Tuple[Expr, ...]
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class MapLit(Expr):
    entries: Tuple[Tuple[Expr, Expr], ...]
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Call(Expr):
    """Application of a builtin function (``len``, ``dom``...)."""

    fn: str
    args: Tuple[Expr, ...]


@dataclass(frozen=True)
class Index(Expr):
    """Sequence or map lookup; `ty` is the type of the result."""

    base: Expr
    index: Expr
    ty: Optional[Type] = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class Update(Expr):
    """Map update ``m[k := v]``."""

    base: Expr
    key: Expr
    value: Expr


BUILTINS = {
    "fst": 1,
    "snd": 1,
    "len": 1,
    "tail": 1,
    "union": 2,
    "diff": 2,
    "card": 1,
    "mset": 1,
    "sum": 1,
    "dom": 1,
}

# Commands


@dataclass(frozen=True)
class Command(Node):
    pos = NOPOS


@dataclass(frozen=True)
class Assign(Command):
    target: str
    value: Expr
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Read(Command):
    target: str
    addr: Expr
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Write(Command):
    addr: Expr
    value: Expr
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Alloc(Command):
    target: str
    value: Expr
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Skip(Command):
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Compose(Command):
    """Sequential composition."""

    first: Command
    second: Command
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class If(Command):
    cond: Expr
    then: Command
    orelse: Command
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class While(Command):
    cond: Expr
    body: Command
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Par(Command):
    left: Command
    right: Command
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


@dataclass(frozen=True)
class Atomic(Command):
    body: Command
    pos: Pos = field(default=NOPOS, compare=False, repr=False)


SKIP = Skip()

# Assertions


@dataclass(frozen=True)
class Assertion(Node):
    pass


@dataclass(frozen=True)
class Emp(Assertion):
    pass


@dataclass(frozen=True)
class Pure(Assertion):
    """A boolean expression used as an assertion."""

    expr: Expr


@dataclass(frozen=True)
class PointsTo(Assertion):
    addr: Expr
    frac: Fraction
    value: Expr


@dataclass(frozen=True)
class Star(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class And(Assertion):
    left: Assertion
    right: Assertion


@dataclass(frozen=True)
class Exists(Assertion):
    name: str
    ty: Optional[Type]
    body: Assertion


@dataclass(frozen=True)
class SGuard(Assertion):
    """Fraction of the shared action guard with its argument multiset."""

    frac: Fraction
    args: Expr


@dataclass(frozen=True)
class UGuard(Assertion):
    """Guard of a unique action with its argument sequence."""

    action: str
    args: Expr


@dataclass(frozen=True)
class Implies(Assertion):
    cond: Expr
    body: Assertion


@dataclass(frozen=True)
class Low(Assertion):
    expr: Expr


@dataclass(frozen=True)
class NoGuard(Assertion):
    body: Assertion


@dataclass(frozen=True)
class AllPre(Assertion):
    """
    The relational precondition holds on all the recorded arguments.

    `action` is `!None` for the shared action.
    """

    action: Optional[str]
    args: Expr


EMP = Emp()
TRUE = Pure(BoolLit(True))

AnyNode = Union[Expr, Command, Assertion]


def stars(items: Iterable[Assertion]) -> Assertion:
    """Join *items* with separating conjunctions; `emp` if empty."""
    rv: Optional[Assertion] = None
    for item in items:
        rv = item if rv is None else Star(rv, item)
    return rv if rv is not None else EMP


def star_conjuncts(a: Assertion) -> List[Assertion]:
    """Flatten a tree of separating conjunctions."""
    if isinstance(a, Star):
        return star_conjuncts(a.left) + star_conjuncts(a.right)
    return [a]


def and_conjuncts(a: Assertion) -> List[Assertion]:
    """Flatten a tree of conjunctions."""
    if isinstance(a, And):
        return and_conjuncts(a.left) + and_conjuncts(a.right)
    return [a]


def seq(commands: Iterable[Command]) -> Command:
    """Compose *commands* sequentially, right-nested; `skip` if empty."""
    cmds = list(commands)
    if not cmds:
        return SKIP
    rv = cmds[-1]
    for c in reversed(cmds[:-1]):
        rv = Compose(c, rv, pos=c.pos)
    return rv


def free_vars(node: AnyNode) -> FrozenSet[str]:
    """
    Return the free variables of an expression, assertion or command.

    `let` and `exists` bind their variable. The targets of assignments,
    reads and allocations are counted as free in a command.
    """
    return frozenset(_fv(node, frozenset()))


def free_vars_all(nodes: Iterable[AnyNode]) -> FrozenSet[str]:
    rv: Set[str] = set()
    for node in nodes:
        rv.update(free_vars(node))
    return frozenset(rv)


def _fv(node: Node, bound: FrozenSet[str]) -> Set[str]:
    if isinstance(node, Var):
        return set() if node.name in bound else {node.name}
    if isinstance(node, Let):
        rv = _fv(node.value, bound)
        rv.update(_fv(node.body, bound | {node.name}))
        return rv
    if isinstance(node, Exists):
        return _fv(node.body, bound | {node.name})

    rv = set()
    if isinstance(node, (Assign, Read, Alloc)) and node.target not in bound:
        rv.add(node.target)
    for child in node.children():
        rv.update(_fv(child, bound))
    return rv


def mod_set(c: Command) -> FrozenSet[str]:
    """Return the variables modified by *c*: targets of assignments,
    reads and allocations."""
    rv: Set[str] = set()
    for node in c.walk():
        if isinstance(node, (Assign, Read, Alloc)):
            rv.add(node.target)
    return frozenset(rv)


def contains(node: Node, *classes: type) -> bool:
    """Return `!True` if any node in the tree is instance of *classes*."""
    return any(isinstance(n, classes) for n in node.walk())


def fresh_name(base: str, avoid: Iterable[str]) -> str:
    """Return a variable name starting with *base* not in *avoid*."""
    taken = set(avoid)
    if base not in taken:
        return base
    i = 1
    while f"{base}_{i}" in taken:
        i += 1
    return f"{base}_{i}"


Subst = Dict[str, Expr]


def subst(node: N, mapping: Subst) -> N:
    """
    Replace the free variables in *node* according to *mapping*.

    Bound variables are renamed when they would capture a variable free in
    the replacements.
    """
    if not mapping:
        return node
    return _subst(node, mapping)  # type: ignore[return-value]


def _subst(node: Node, mapping: Subst) -> Node:
    if isinstance(node, Var):
        return mapping.get(node.name, node)

    if isinstance(node, (Let, Exists)):
        inner = {k: v for k, v in mapping.items() if k != node.name}
        if not inner:
            if isinstance(node, Let):
                return replace(node, value=_subst(node.value, mapping))
            return node
        captured = free_vars_all(inner.values())
        name = node.name
        body = node.body
        if name in captured:
            name = fresh_name(
                name, captured | free_vars(body) | set(inner)
            )
            body = _subst(body, {node.name: Var(name)})
        if isinstance(node, Let):
            return Let(
                name,
                cast(Expr, _subst(node.value, mapping)),
                cast(Expr, _subst(body, inner)),
            )
        return Exists(name, node.ty, cast(Assertion, _subst(body, inner)))

    return node.map_children(lambda child: _subst(child, mapping))
