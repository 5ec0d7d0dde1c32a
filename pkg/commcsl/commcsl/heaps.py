"""
Extended heaps: permission heaps with shared and unique guard states.
"""

# Copyright (C) 2022 The CommCSL Team

from fractions import Fraction
from typing import Any, Dict, Iterable, Mapping, Optional, Tuple

from .values import Value, Seq, MSet, FMap, same_value, to_json

PermCell = Tuple[Fraction, Value]
SharedGuard = Optional[Tuple[Fraction, MSet]]

ONE = Fraction(1)

# What the leftover of a heap can contain when an assertion is satisfied
ABSORB_NONE = 0
ABSORB_GUARDS = 1
ABSORB_PERM = 2
ABSORB_ALL = ABSORB_GUARDS | ABSORB_PERM


class ExtendedHeap:
    """
    A permission heap together with a shared guard state and a family of
    unique guard states.

    :param perm: map from locations to a fraction in (0, 1] and a value.
    :param shared: `!None` (no shared guard) or a fraction and the multiset
        of the shared action arguments.
    :param unique: map from the name of a unique action to the sequence of
        its arguments. Actions missing from the map have no guard.
    """

    __slots__ = ("perm", "shared", "unique", "_key", "_hash")

    def __init__(
        self,
        perm: Optional[Mapping[int, PermCell]] = None,
        shared: SharedGuard = None,
        unique: Optional[Mapping[str, Seq]] = None,
    ):
        self.perm: Dict[int, PermCell] = dict(perm or {})
        self.shared = shared
        self.unique: Dict[str, Seq] = dict(unique or {})
        self._key = (
            tuple(sorted(self.perm.items())),
            shared,
            tuple(sorted(self.unique.items())),
        )
        self._hash = hash(self._key)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, ExtendedHeap):
            return False
        return self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self}>"

    def __str__(self) -> str:
        parts = [
            f"{loc}->[{frac}]{to_json(v)}"
            for loc, (frac, v) in sorted(self.perm.items())
        ]
        if self.shared is not None:
            parts.append(f"sguard({self.shared[0]}, {self.shared[1]})")
        for name, args in sorted(self.unique.items()):
            parts.append(f"uguard({name}, {args})")
        return "{" + ", ".join(parts) + "}"

    @property
    def has_guards(self) -> bool:
        return self.shared is not None or bool(self.unique)

    @property
    def is_empty(self) -> bool:
        return not self.perm and not self.has_guards

    def perm_part(self) -> "ExtendedHeap":
        return ExtendedHeap(self.perm)

    def guard_part(self) -> "ExtendedHeap":
        return ExtendedHeap(None, self.shared, self.unique)

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "perm": {
                str(loc): [str(frac), to_json(v)]
                for loc, (frac, v) in sorted(self.perm.items())
            }
        }
        if self.shared is not None:
            rv["shared"] = [str(self.shared[0]), to_json(self.shared[1])]
        if self.unique:
            rv["unique"] = {k: to_json(v) for k, v in sorted(self.unique.items())}
        return rv


EMPTY_HEAP = ExtendedHeap()


def full_heap(heap: Mapping[int, Value]) -> ExtendedHeap:
    """Return an extended heap owning every location of *heap* entirely."""
    return ExtendedHeap({loc: (ONE, v) for loc, v in heap.items()})


def heap_add(a: ExtendedHeap, b: ExtendedHeap) -> Optional[ExtendedHeap]:
    """
    Return the sum of two extended heaps, `!None` if undefined.

    Fractions on a shared location add up (at most 1) and the values must
    agree; shared guards add their fractions and join their arguments; unique
    guards can't be held by both sides.
    """
    perm = dict(a.perm)
    for loc, (frac, v) in b.perm.items():
        if loc in perm:
            frac0, v0 = perm[loc]
            if not same_value(v0, v) or frac0 + frac > ONE:
                return None
            perm[loc] = (frac0 + frac, v)
        else:
            perm[loc] = (frac, v)

    shared: SharedGuard
    if a.shared is None:
        shared = b.shared
    elif b.shared is None:
        shared = a.shared
    else:
        frac = a.shared[0] + b.shared[0]
        if frac > ONE:
            return None
        shared = (frac, a.shared[1].union(b.shared[1]))

    if set(a.unique) & set(b.unique):
        return None
    unique = dict(a.unique)
    unique.update(b.unique)
    return ExtendedHeap(perm, shared, unique)


def heap_add_all(heaps: Iterable[ExtendedHeap]) -> Optional[ExtendedHeap]:
    rv: Optional[ExtendedHeap] = EMPTY_HEAP
    for h in heaps:
        if rv is None:
            return None
        rv = heap_add(rv, h)
    return rv


def heap_sub(a: ExtendedHeap, b: ExtendedHeap) -> Optional[ExtendedHeap]:
    """
    Return the heap *c* such that ``b + c == a``, `!None` if none exists.
    """
    perm = dict(a.perm)
    for loc, (frac, v) in b.perm.items():
        if loc not in perm:
            return None
        frac0, v0 = perm[loc]
        if not same_value(v0, v) or frac > frac0:
            return None
        if frac == frac0:
            del perm[loc]
        else:
            perm[loc] = (frac0 - frac, v)

    shared: SharedGuard = a.shared
    if b.shared is not None:
        if a.shared is None:
            return None
        (fa, ma), (fb, mb) = a.shared, b.shared
        if fb > fa or not mb.issubset(ma):
            return None
        if fb == fa:
            if ma != mb:
                return None
            shared = None
        else:
            shared = (fa - fb, ma.diff(mb))

    unique = dict(a.unique)
    for name, args in b.unique.items():
        if unique.get(name) != args:
            return None
        del unique[name]
    return ExtendedHeap(perm, shared, unique)


def heap_leq(b: ExtendedHeap, a: ExtendedHeap) -> bool:
    """Return `!True` if *b* is a sub-heap of *a*."""
    return heap_sub(a, b) is not None


def _shared_leq(x: SharedGuard, y: SharedGuard) -> bool:
    if x is None:
        return True
    if y is None:
        return False
    if x == y:
        return True
    return x[0] < y[0] and x[1].issubset(y[1])


def heap_lub(a: ExtendedHeap, b: ExtendedHeap) -> Optional[ExtendedHeap]:
    """
    Return the least heap having both *a* and *b* as sub-heaps.

    Return `!None` if there is no such heap: either *a* and *b* are
    incompatible (see `compatible()`) or the upper bounds have no minimum.
    """
    perm = dict(a.perm)
    for loc, (frac, v) in b.perm.items():
        if loc in perm:
            frac0, v0 = perm[loc]
            if not same_value(v0, v):
                return None
            perm[loc] = (max(frac0, frac), v)
        else:
            perm[loc] = (frac, v)

    if _shared_leq(a.shared, b.shared):
        shared = b.shared
    elif _shared_leq(b.shared, a.shared):
        shared = a.shared
    else:
        return None

    unique = dict(a.unique)
    for name, args in b.unique.items():
        if unique.setdefault(name, args) != args:
            return None
    return ExtendedHeap(perm, shared, unique)


def compatible(a: ExtendedHeap, b: ExtendedHeap) -> bool:
    """Return `!True` if some heap has both *a* and *b* as sub-heaps."""
    for loc, (_, v) in b.perm.items():
        if loc in a.perm and not same_value(a.perm[loc][1], v):
            return False
    for name, args in b.unique.items():
        if a.unique.get(name, args) != args:
            return False
    if a.shared is None or b.shared is None:
        return True
    if _shared_leq(a.shared, b.shared) or _shared_leq(b.shared, a.shared):
        return True
    return max(a.shared[0], b.shared[0]) < ONE


def normalize(g: ExtendedHeap) -> FMap:
    """Return the plain heap of *g*, dropping fractions and guards."""
    return FMap((loc, v) for loc, (_, v) in g.perm.items())


def absorbable(h: ExtendedHeap, flags: int) -> bool:
    """Return `!True` if *h* only contains what *flags* allows."""
    if h.perm and not flags & ABSORB_PERM:
        return False
    if h.has_guards and not flags & ABSORB_GUARDS:
        return False
    return True


def heap_values(g: ExtendedHeap) -> Iterable[Value]:
    """Generate the values stored in *g*, guard arguments included."""
    for loc, (_, v) in sorted(g.perm.items()):
        yield loc
        yield v
    if g.shared is not None:
        yield g.shared[1]
    for _, args in sorted(g.unique.items()):
        yield args


def complete(
    g: ExtendedHeap, locs: Optional[Iterable[int]] = None
) -> ExtendedHeap:
    """
    Return *g* with full permission on *locs*, by default on every location.
    """
    full = set(g.perm if locs is None else locs)
    return ExtendedHeap(
        {
            loc: (ONE if loc in full else frac, v)
            for loc, (frac, v) in g.perm.items()
        },
        g.shared,
        g.unique,
    )


def with_fresh_cell(g: ExtendedHeap, value: Value = 0) -> ExtendedHeap:
    """Return *g* with a further location fully owned."""
    loc = max(g.perm, default=-1) + 1
    perm = dict(g.perm)
    perm[loc] = (ONE, value)
    return ExtendedHeap(perm, g.shared, g.unique)
