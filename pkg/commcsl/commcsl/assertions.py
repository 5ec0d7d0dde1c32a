"""
Satisfaction of relational assertions by pairs of states.

An assertion is checked by *consuming* it: each node produces the parts of
the two extended heaps it claims, together with what else the heaps may
contain. An assertion holds if some way of consuming it claims sub-heaps of
the two heaps and the rest can be left out.
"""

# Copyright (C) 2022 The CommCSL Team

import logging
from typing import TYPE_CHECKING, Dict, Iterator, List, Mapping, NamedTuple
from typing import Optional, Set, Tuple

from . import errors as e
from ._enums import Verdict
from .bounds import Domain, count_values, enumerate_values
from .heaps import ExtendedHeap, EMPTY_HEAP, ABSORB_NONE, ABSORB_GUARDS
from .heaps import ABSORB_PERM, ABSORB_ALL, heap_add, heap_sub, heap_lub
from .heaps import compatible, absorbable, heap_values, full_heap
from .types import Type, INT
from .values import Value, Seq, MSet, SortKey, subvalues, same_value, sort_key
from .values import to_json
from .syntax import Expr, Var, BinOp, Assertion, Emp, Pure, PointsTo, Star
from .syntax import And, Exists, SGuard, UGuard, Implies, Low, NoGuard, AllPre
from .syntax import free_vars
from .evaluate import Store, eval_expr, eval_bool
from .matching import perfect_matching

if TYPE_CHECKING:
    from .resource import ResourceSpec

logger = logging.getLogger(__name__)

# Above this number of values an existential witness is only searched among
# the values found in the state.
EXISTS_ENUM_LIMIT = 256

# Witness expressions for an existential variable, one per execution
Hints = Mapping[str, Tuple[Expr, Expr]]

# Heaps claimed in the two executions, and what the rest may contain
Claim = Tuple[ExtendedHeap, ExtendedHeap, int]


class StatePair(NamedTuple):
    """Two stores with their extended heaps: the states of two executions."""

    s1: Store
    g1: ExtendedHeap
    s2: Store
    g2: ExtendedHeap

    @classmethod
    def reflexive(cls, s: Store, g: ExtendedHeap) -> "StatePair":
        return cls(s, g, s, g)

    @classmethod
    def plain(
        cls,
        s1: Store,
        h1: Mapping[int, Value],
        s2: Store,
        h2: Mapping[int, Value],
    ) -> "StatePair":
        """Build a pair from plain heaps, owning every cell entirely."""
        return cls(s1, full_heap(h1), s2, full_heap(h2))

    def swap(self) -> "StatePair":
        return StatePair(self.s2, self.g2, self.s1, self.g1)

    def to_json(self) -> Dict[str, object]:
        return {
            "store1": {k: to_json(v) for k, v in sorted(self.s1.items())},
            "heap1": self.g1.to_json(),
            "store2": {k: to_json(v) for k, v in sorted(self.s2.items())},
            "heap2": self.g2.to_json(),
        }


def pre_holds(
    spec: "ResourceSpec",
    which: Optional[str],
    args1: Value,
    args2: Value,
) -> bool:
    """
    Return `!True` if the action preconditions hold on two argument records.

    For the shared action (*which* is `!None`) the records are multisets:
    there must be a bijection between them relating only arguments
    satisfying the precondition. For the unique action *which* they are
    sequences of the same length, related position by position.
    """
    action = spec.get_action(which)
    if action is None:
        raise e.InterfaceError(
            f"spec {spec.name} has no action {which or '(shared)'}"
        )
    if action.shared:
        if not isinstance(args1, MSet) or not isinstance(args2, MSet):
            raise TypeError("multisets expected for the shared action")
        xs = list(args1)
        ys = list(args2)
        return perfect_matching(xs, ys, action.pre_holds) is not None

    if not isinstance(args1, Seq) or not isinstance(args2, Seq):
        raise TypeError(f"sequences expected for action {which}")
    if len(args1) != len(args2):
        return False
    return all(action.pre_holds(x, y) for x, y in zip(args1, args2))


def sat_pair(
    a: Assertion,
    sp: StatePair,
    spec: Optional["ResourceSpec"] = None,
    domain: Domain = Domain(),
    hints: Optional[Hints] = None,
) -> Verdict:
    """
    Decide if the pair of states *sp* satisfies the assertion *a*.

    Existential witnesses are searched among the values found in the states
    and, for small types, in *domain*. Return `Verdict.UNKNOWN` if *a* fails
    but some witness search couldn't be exhaustive.

    *spec* is needed to evaluate ``allpre()`` assertions; *hints* maps
    existential variable names to candidate witness expressions, evaluated
    in the first and second store.
    """
    sat = Satisfaction(sp.g1, sp.g2, spec, domain, hints)
    if sat.find(a, sp.s1, sp.s2) is not None:
        return Verdict.HOLDS
    return Verdict.UNKNOWN if sat.incomplete else Verdict.FAILS


def holds(
    a: Assertion,
    sp: StatePair,
    spec: Optional["ResourceSpec"] = None,
    domain: Domain = Domain(),
) -> bool:
    """Return `!True` if *sp* satisfies *a*; unknown counts as false."""
    return sat_pair(a, sp, spec, domain) is Verdict.HOLDS


def split_witness(
    left: Assertion,
    right: Assertion,
    sp: StatePair,
    spec: Optional["ResourceSpec"] = None,
    domain: Domain = Domain(),
) -> Optional[Tuple[StatePair, StatePair]]:
    """
    Find the splitting of the heaps of *sp* satisfying ``left ** right``.

    Return two pairs of states, with the same stores as *sp*, whose heaps add
    up to the heaps of *sp* and satisfy *left* and *right* respectively.
    Return `!None` if the assertion doesn't hold.
    """
    sat = Satisfaction(sp.g1, sp.g2, spec, domain)
    for c1, c2, fl in sat.consume(left, sp.s1, sp.s2):
        for d1, d2, fr in sat.consume(right, sp.s1, sp.s2):
            sums = heap_add(c1, d1), heap_add(c2, d2)
            if sums[0] is None or sums[1] is None:
                continue
            rest1, rest2 = heap_sub(sp.g1, sums[0]), heap_sub(sp.g2, sums[1])
            if rest1 is None or rest2 is None:
                continue
            if not (absorbable(rest1, fl | fr) and absorbable(rest2, fl | fr)):
                continue
            l1, r1 = _share_rest(c1, d1, rest1, fl)
            l2, r2 = _share_rest(c2, d2, rest2, fl)
            return (
                StatePair(sp.s1, l1, sp.s2, l2),
                StatePair(sp.s1, r1, sp.s2, r2),
            )
    return None


def _share_rest(
    c: ExtendedHeap, d: ExtendedHeap, rest: ExtendedHeap, flags: int
) -> Tuple[ExtendedHeap, ExtendedHeap]:
    perm, guards = rest.perm_part(), rest.guard_part()
    if flags & ABSORB_PERM:
        c = heap_add(c, perm) or c
    else:
        d = heap_add(d, perm) or d
    if flags & ABSORB_GUARDS:
        c = heap_add(c, guards) or c
    else:
        d = heap_add(d, guards) or d
    return c, d


class Satisfaction:
    """
    The state of the satisfaction search of assertions on a pair of heaps.

    If the heaps are `!None` the search isn't constrained by them: `consume()`
    generates all the heaps claimed by an assertion, which is used to build
    models of the assertion.
    """

    def __init__(
        self,
        g1: Optional[ExtendedHeap],
        g2: Optional[ExtendedHeap],
        spec: Optional["ResourceSpec"] = None,
        domain: Domain = Domain(),
        hints: Optional[Hints] = None,
    ):
        self.g1 = g1
        self.g2 = g2
        self.spec = spec
        self.domain = domain
        self.hints: Hints = hints or {}
        self.incomplete = False

    def find(self, a: Assertion, s1: Store, s2: Store) -> Optional[Claim]:
        """Return a way to consume *a* satisfying the whole heaps."""
        assert self.g1 is not None and self.g2 is not None
        for claim in self.consume(a, s1, s2):
            c1, c2, flags = claim
            rest1 = heap_sub(self.g1, c1)
            rest2 = heap_sub(self.g2, c2)
            if rest1 is None or rest2 is None:
                continue
            if absorbable(rest1, flags) and absorbable(rest2, flags):
                return claim
        return None

    def consume(self, a: Assertion, s1: Store, s2: Store) -> Iterator[Claim]:
        """
        Generate the ways *a* can hold on sub-heaps of the pair of heaps.

        Every claim contains the two sub-heaps required by *a* and the
        `!ABSORB_*` flags describing what else the heaps satisfying *a* can
        contain.
        """
        if isinstance(a, Emp):
            yield EMPTY_HEAP, EMPTY_HEAP, ABSORB_NONE

        elif isinstance(a, Pure):
            if eval_bool(a.expr, s1) and eval_bool(a.expr, s2):
                yield EMPTY_HEAP, EMPTY_HEAP, ABSORB_ALL

        elif isinstance(a, Low):
            if same_value(eval_expr(a.expr, s1), eval_expr(a.expr, s2)):
                yield EMPTY_HEAP, EMPTY_HEAP, ABSORB_ALL

        elif isinstance(a, AllPre):
            if self.spec is None:
                raise e.InterfaceError(
                    "a resource spec is required to evaluate allpre()"
                )
            if pre_holds(
                self.spec,
                a.action,
                eval_expr(a.args, s1),
                eval_expr(a.args, s2),
            ):
                yield EMPTY_HEAP, EMPTY_HEAP, ABSORB_ALL

        elif isinstance(a, PointsTo):
            l1 = eval_expr(a.addr, s1)
            l2 = eval_expr(a.addr, s2)
            if _is_loc(l1) and _is_loc(l2):
                c1 = ExtendedHeap({l1: (a.frac, eval_expr(a.value, s1))})
                c2 = ExtendedHeap({l2: (a.frac, eval_expr(a.value, s2))})
                if self._fits(c1, c2):
                    yield c1, c2, ABSORB_NONE

        elif isinstance(a, SGuard):
            m1 = eval_expr(a.args, s1)
            m2 = eval_expr(a.args, s2)
            assert isinstance(m1, MSet) and isinstance(m2, MSet)
            c1 = ExtendedHeap(shared=(a.frac, m1))
            c2 = ExtendedHeap(shared=(a.frac, m2))
            if self._fits(c1, c2):
                yield c1, c2, ABSORB_NONE

        elif isinstance(a, UGuard):
            q1 = eval_expr(a.args, s1)
            q2 = eval_expr(a.args, s2)
            assert isinstance(q1, Seq) and isinstance(q2, Seq)
            c1 = ExtendedHeap(unique={a.action: q1})
            c2 = ExtendedHeap(unique={a.action: q2})
            if self._fits(c1, c2):
                yield c1, c2, ABSORB_NONE

        elif isinstance(a, Implies):
            b1 = eval_bool(a.cond, s1)
            if b1 != eval_bool(a.cond, s2):
                return
            if b1:
                yield from self.consume(a.body, s1, s2)
            else:
                yield EMPTY_HEAP, EMPTY_HEAP, ABSORB_ALL

        elif isinstance(a, NoGuard):
            for c1, c2, flags in self.consume(a.body, s1, s2):
                if not (c1.has_guards or c2.has_guards):
                    yield c1, c2, flags & ~ABSORB_GUARDS

        elif isinstance(a, Star):
            yield from self._star(a, s1, s2)

        elif isinstance(a, And):
            yield from self._and(a, s1, s2)

        elif isinstance(a, Exists):
            yield from self._exists(a, s1, s2)

        else:
            raise TypeError(f"not an assertion: {a!r}")

    def _fits(self, c1: ExtendedHeap, c2: ExtendedHeap) -> bool:
        if self.g1 is None or self.g2 is None:
            return True
        return (
            heap_sub(self.g1, c1) is not None
            and heap_sub(self.g2, c2) is not None
        )

    def _star(self, a: Star, s1: Store, s2: Store) -> Iterator[Claim]:
        rights = None
        seen: Set[Claim] = set()
        for c1, c2, fl in self.consume(a.left, s1, s2):
            if rights is None:
                rights = list(self.consume(a.right, s1, s2))
            for d1, d2, fr in rights:
                h1 = heap_add(c1, d1)
                h2 = heap_add(c2, d2)
                if h1 is None or h2 is None or not self._fits(h1, h2):
                    continue
                claim = (h1, h2, fl | fr)
                if claim not in seen:
                    seen.add(claim)
                    yield claim

    def _and(self, a: And, s1: Store, s2: Store) -> Iterator[Claim]:
        rights = None
        seen: Set[Claim] = set()
        for c1, c2, fl in self.consume(a.left, s1, s2):
            if rights is None:
                rights = list(self.consume(a.right, s1, s2))
            for d1, d2, fr in rights:
                h1 = self._meet(c1, fl, d1, fr)
                h2 = self._meet(c2, fl, d2, fr)
                if h1 is None or h2 is None:
                    continue
                if fl == ABSORB_NONE or fr == ABSORB_NONE:
                    flags = ABSORB_NONE
                else:
                    flags = fl & fr
                claim = (h1, h2, flags)
                if claim not in seen:
                    seen.add(claim)
                    yield claim

    def _meet(
        self, c: ExtendedHeap, fc: int, d: ExtendedHeap, fd: int
    ) -> Optional[ExtendedHeap]:
        """
        Return the smallest heap satisfying both the claims *c* and *d*.
        """
        if fc == ABSORB_NONE:
            rest = heap_sub(c, d)
            return c if rest is not None and absorbable(rest, fd) else None
        if fd == ABSORB_NONE:
            rest = heap_sub(d, c)
            return d if rest is not None and absorbable(rest, fc) else None

        h = heap_lub(c, d)
        if h is None:
            if compatible(c, d):
                logger.debug("no least heap above %s and %s", c, d)
                self.incomplete = True
            return None
        rc = heap_sub(h, c)
        rd = heap_sub(h, d)
        assert rc is not None and rd is not None
        if absorbable(rc, fc) and absorbable(rd, fd):
            return h
        return None

    def _exists(self, a: Exists, s1: Store, s2: Store) -> Iterator[Claim]:
        ty = a.ty or INT
        ws1 = self._witnesses(a, ty, s1, self.g1, 0)
        ws2 = self._witnesses(a, ty, s2, self.g2, 1)
        seen: Set[Claim] = set()
        for w1 in ws1:
            t1 = dict(s1)
            t1[a.name] = w1
            for w2 in ws2:
                t2 = dict(s2)
                t2[a.name] = w2
                for claim in self.consume(a.body, t1, t2):
                    if claim not in seen:
                        seen.add(claim)
                        yield claim

    def _witnesses(
        self,
        a: Exists,
        ty: Type,
        s: Store,
        g: Optional[ExtendedHeap],
        side: int,
    ) -> List[Value]:
        """Return the candidate values of the variable bound by *a*."""
        det = _determined(a.name, a.body, s, g)
        if det is not None:
            return [v for v in det if ty.contains(v)]

        rv: List[Value] = []
        seen: Set[SortKey] = set()

        def add(v: Value) -> None:
            if ty.contains(v) and sort_key(v) not in seen:
                seen.add(sort_key(v))
                rv.append(v)

        if a.name in self.hints:
            add(eval_expr(self.hints[a.name][side], s))

        for v in s.values():
            for sub in subvalues(v):
                add(sub)
        if g is not None:
            for v in heap_values(g):
                for sub in subvalues(v):
                    add(sub)

        if count_values(ty, self.domain) <= EXISTS_ENUM_LIMIT:
            for v in enumerate_values(ty, self.domain):
                add(v)
            return rv

        add(ty.default())
        logger.debug(
            "witnesses of %s searched among %s state values", a.name, len(rv)
        )
        self.incomplete = True
        return rv


def _is_loc(v: Value) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and v >= 0


def _determined(
    name: str, body: Assertion, s: Store, g: Optional[ExtendedHeap]
) -> Optional[List[Value]]:
    """
    Return the only possible values of *name* if *body* fixes it.

    The variable is fixed by an equality with an expression computable in
    the store or, if the heap is known, by being the value of a cell or the
    arguments recorded by a guard held with its whole fraction.
    """
    known = set(s) - {name}
    for conj in _conjuncts(body):
        if isinstance(conj, Pure) and isinstance(conj.expr, BinOp):
            ex = conj.expr
            if ex.op != "==":
                continue
            for lhs, rhs in ((ex.left, ex.right), (ex.right, ex.left)):
                if (
                    isinstance(lhs, Var)
                    and lhs.name == name
                    and free_vars(rhs) <= known
                ):
                    return [eval_expr(rhs, s)]
        elif (
            g is not None
            and isinstance(conj, PointsTo)
            and isinstance(conj.value, Var)
            and conj.value.name == name
            and free_vars(conj.addr) <= known
        ):
            loc = eval_expr(conj.addr, s)
            if not _is_loc(loc) or loc not in g.perm:
                return []
            assert isinstance(loc, int)
            return [g.perm[loc][1]]
        elif (
            g is not None
            and isinstance(conj, SGuard)
            and isinstance(conj.args, Var)
            and conj.args.name == name
        ):
            if g.shared is None:
                return []
            # A fraction of the guard may hold a part of the arguments only
            if g.shared[0] == conj.frac:
                return [g.shared[1]]
        elif (
            g is not None
            and isinstance(conj, UGuard)
            and isinstance(conj.args, Var)
            and conj.args.name == name
        ):
            return [g.unique[conj.action]] if conj.action in g.unique else []
    return None


def _conjuncts(a: Assertion) -> Iterator[Assertion]:
    """Generate the assertions required to hold by *a* on sub-heaps."""
    if isinstance(a, (Star, And)):
        yield from _conjuncts(a.left)
        yield from _conjuncts(a.right)
    elif isinstance(a, NoGuard):
        yield from _conjuncts(a.body)
    else:
        yield a
