"""
Bounded enumeration of the states satisfying relational assertions.

Stores are enumerated over the finite domain of each free variable, pruned
by the pure conjuncts of the assertion. Heaps are built from the claims of
the assertion, with some extra content where the assertion allows it; every
state generated is checked again with `sat_pair()`.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from fractions import Fraction
from itertools import combinations
from typing import TYPE_CHECKING, Dict, Iterable, Iterator, List, Mapping
from typing import NamedTuple, Optional, Sequence, Set, Tuple

from .bounds import Domain, count_values, enumerate_values
from .heaps import ExtendedHeap, ABSORB_PERM, ABSORB_GUARDS
from .heaps import complete, with_fresh_cell
from .types import Type, INT
from .values import Value, Seq, MSet
from .syntax import Node, Var, Let, Exists, Assertion, Pure, Low, Implies
from .syntax import Star, And, NoGuard, free_vars
from .evaluate import Store, holds_relational, is_pure_relational
from .assertions import StatePair, Satisfaction

if TYPE_CHECKING:
    from .resource import ResourceSpec

logger = logging.getLogger(__name__)

Env = Mapping[str, Type]


class ModelSet(NamedTuple):
    """
    The states found satisfying an assertion.

    `complete` is `False` if the enumeration hit a bound: in this case
    `note` tells which one.
    """

    models: List[StatePair]
    complete: bool
    note: str = ""


def assertion_env(
    node: Node, env: Optional[Env] = None
) -> Dict[str, Type]:
    """
    Return the types of the free variables of a type checked tree.

    Types found in *env* take precedence; variables whose type is unknown
    are integers.
    """
    rv: Dict[str, Type] = {}
    _collect_types(node, frozenset(), rv)
    for name in free_vars(node):
        rv.setdefault(name, INT)
    if env:
        rv.update({k: v for k, v in env.items() if k in rv})
    return rv


def _collect_types(
    node: Node, bound: "frozenset[str]", rv: Dict[str, Type]
) -> None:
    if isinstance(node, Var):
        if node.name not in bound and node.ty is not None:
            rv.setdefault(node.name, node.ty)
        return
    if isinstance(node, Let):
        _collect_types(node.value, bound, rv)
        _collect_types(node.body, bound | {node.name}, rv)
        return
    if isinstance(node, Exists):
        _collect_types(node.body, bound | {node.name}, rv)
        return
    for child in node.children():
        _collect_types(child, bound, rv)


def store_constraints(a: Assertion) -> List[Assertion]:
    """
    Return the conjuncts of *a* only constraining the stores.

    Every state satisfying *a* satisfies them, so they can be used to prune
    the enumeration of the stores.
    """
    if isinstance(a, (Star, And)):
        return store_constraints(a.left) + store_constraints(a.right)
    if isinstance(a, NoGuard):
        return store_constraints(a.body)
    if isinstance(a, (Pure, Low)):
        return [a]
    if isinstance(a, Implies) and is_pure_relational(a.body):
        return [a]
    return []


class StoreSearch:
    """
    Enumerate the pairs of stores over some variables.

    Assignments are built one variable at a time; a constraint is checked
    as soon as all its variables have a value.
    """

    def __init__(
        self,
        env: Env,
        domain: Domain,
        constraints: Sequence[Assertion] = (),
        reflexive: bool = False,
    ):
        self.names = sorted(env)
        self.env = env
        self.domain = domain
        self.reflexive = reflexive
        self.count = 0
        self.note = ""

        # Check each constraint after its last variable is assigned
        self.checks: List[List[Assertion]] = [[] for _ in self.names]
        self.ground: List[Assertion] = []
        pos = {n: i for i, n in enumerate(self.names)}
        for c in constraints:
            fv = free_vars(c)
            if not fv <= set(pos):
                continue
            if not fv:
                self.ground.append(c)
            else:
                self.checks[max(pos[n] for n in fv)].append(c)

        for name in self.names:
            n = count_values(env[name], domain)
            if n > domain.cap:
                self.note = (
                    f"{n} values of {name}: {env[name]} exceed the cap"
                    f" of {domain.cap}"
                )
                break

    def pairs(self) -> Iterator[Tuple[Store, Store]]:
        """Generate the pairs of stores; stop at the domain cap."""
        if self.note:
            return
        if not all(holds_relational(c, {}, {}) for c in self.ground):
            return
        yield from self._assign(0, {}, {})

    def _assign(
        self, i: int, s1: Dict[str, Value], s2: Dict[str, Value]
    ) -> Iterator[Tuple[Store, Store]]:
        if i == len(self.names):
            self.count += 1
            if self.count > self.domain.cap:
                self.note = f"more than {self.domain.cap} pairs of stores"
                return
            yield dict(s1), dict(s2)
            return

        name = self.names[i]
        values = enumerate_values(self.env[name], self.domain)
        for v1 in values:
            s1[name] = v1
            for v2 in (v1,) if self.reflexive else values:
                s2[name] = v2
                if all(holds_relational(c, s1, s2) for c in self.checks[i]):
                    yield from self._assign(i + 1, s1, s2)
                if self.note:
                    return
        s1.pop(name, None)
        s2.pop(name, None)


def heap_variants(
    c: ExtendedHeap,
    flags: int,
    spec: Optional["ResourceSpec"] = None,
    heap_max: int = Domain().heap_max,
) -> List[ExtendedHeap]:
    """
    Return *c* and the larger heaps that a claim with *flags* may accept.

    Content absorbed but not claimed is never inspected by the assertion, or
    by a statement that doesn't abort on *c*, so the locations and values of
    the extra content are only represented up to renaming. What is
    enumerated is every way to make the partial cells of *c* full, a further
    cell while *heap_max* allows it, and every combination of the guards
    *c* misses, with both a half and a full shared guard.
    """
    perms = [c]
    if flags & ABSORB_PERM:
        partial = [loc for loc, (frac, _) in sorted(c.perm.items()) if frac < 1]
        perms = []
        for k in range(len(partial) + 1):
            for locs in combinations(partial, k):
                perms.append(complete(c, locs))
        if len(c.perm) < heap_max:
            perms.extend([with_fresh_cell(h) for h in perms])

    rv = list(perms)
    if flags & ABSORB_GUARDS and spec is not None:
        shareds: List[Optional[Tuple[Fraction, MSet]]] = [c.shared]
        if spec.shared is not None and c.shared is None:
            shareds += [(Fraction(1, 2), MSet()), (Fraction(1), MSet())]
        missing = [n for n in sorted(spec.unique) if n not in c.unique]
        uniques = []
        for k in range(len(missing) + 1):
            for names in combinations(missing, k):
                unique = dict(c.unique)
                unique.update((n, Seq()) for n in names)
                uniques.append(unique)
        rv = [
            ExtendedHeap(h.perm, shared, unique)
            for h in perms
            for shared in shareds
            for unique in uniques
        ]
    return rv


def pair_models(
    a: Assertion,
    env: Env,
    domain: Domain = Domain(),
    spec: Optional["ResourceSpec"] = None,
    *,
    reflexive: bool = False,
    guards: bool = True,
) -> ModelSet:
    """
    Return the pairs of states satisfying *a* within *domain*.

    The stores assign every variable in *env*. With *reflexive* only pairs
    made of the same state twice are returned. If *guards* is false
    the heaps hold no guard that *a* doesn't claim.
    """
    absorbed = spec if guards else None
    search = StoreSearch(env, domain, store_constraints(a), reflexive)
    models: List[StatePair] = []
    complete_ = True

    def variants(c: ExtendedHeap, flags: int) -> List[ExtendedHeap]:
        return heap_variants(c, flags, absorbed, domain.heap_max)

    for s1, s2 in search.pairs():
        seen: Set[Tuple[ExtendedHeap, ExtendedHeap]] = set()
        sat = Satisfaction(None, None, spec, domain)
        for c1, c2, flags in sat.consume(a, s1, s2):
            if reflexive:
                candidates: Iterable[Tuple[ExtendedHeap, ExtendedHeap]] = [
                    (h, h)
                    for c in _distinct((c1, c2))
                    for h in variants(c, flags)
                ]
            else:
                candidates = [
                    (h1, h2)
                    for h1 in variants(c1, flags)
                    for h2 in variants(c2, flags)
                ]
            for h1, h2 in candidates:
                if max(len(h1.perm), len(h2.perm)) > domain.heap_max:
                    continue
                if (h1, h2) in seen:
                    continue
                seen.add((h1, h2))
                sp = StatePair(s1, h1, s2, h2)
                check = Satisfaction(h1, h2, spec, domain)
                if check.find(a, s1, s2) is not None:
                    models.append(sp)
        if sat.incomplete:
            complete_ = False

    note = search.note
    if not complete_ and not note:
        note = "existential witnesses not enumerated exhaustively"
    if note:
        logger.warning("models of %s: %s", a, note)
    return ModelSet(models, not note, note)


def _distinct(heaps: Tuple[ExtendedHeap, ...]) -> List[ExtendedHeap]:
    rv: List[ExtendedHeap] = []
    for h in heaps:
        if h not in rv:
            rv.append(h)
    return rv


def state_models(
    a: Assertion,
    env: Env,
    domain: Domain = Domain(),
    spec: Optional["ResourceSpec"] = None,
) -> ModelSet:
    """Return the single states satisfying *a* together with themselves."""
    return pair_models(a, env, domain, spec, reflexive=True)
