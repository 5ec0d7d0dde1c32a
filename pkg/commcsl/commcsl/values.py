"""
Runtime values of the commcsl expression language.

Integers and booleans are represented by the Python `int` and `bool`. The
compound values are immutable objects with a total order, so that they can be
used as dictionary keys, multiset elements and sorted for canonical output.
"""

# Copyright (C) 2022 The CommCSL Team

from collections import Counter
from itertools import combinations_with_replacement
from typing import Any, Dict, Iterable, Iterator, Mapping, Tuple
from typing import Union

Value = Union[int, bool, "Pair", "Seq", "MSet", "FMap"]

SortKey = Tuple[Any, ...]


class _Compound:
    """
    Base class for the compound values.

    Subclasses expose their content as a tuple via `_key()`: equality, hash
    and ordering are derived from it.
    """

    __slots__ = ("_hash",)

    _tag = 0

    def _key(self) -> Tuple[Any, ...]:
        raise NotImplementedError

    def __eq__(self, other: Any) -> bool:
        if type(other) is not type(self):
            return False
        return self._key() == other._key()

    def __ne__(self, other: Any) -> bool:
        return not self == other

    def __hash__(self) -> int:
        try:
            return self._hash
        except AttributeError:
            self._hash: int = hash((self._tag, self._key()))
            return self._hash

    def __lt__(self, other: Any) -> bool:
        return sort_key(self) < sort_key(other)

    def __le__(self, other: Any) -> bool:
        return sort_key(self) <= sort_key(other)

    def __gt__(self, other: Any) -> bool:
        return sort_key(self) > sort_key(other)

    def __ge__(self, other: Any) -> bool:
        return sort_key(self) >= sort_key(other)

    def __str__(self) -> str:
        return format_value(self)


class Pair(_Compound):
    """An ordered pair of values."""

    __slots__ = ("fst", "snd")

    _tag = 2

    def __init__(self, fst: Value, snd: Value):
        self.fst = fst
        self.snd = snd

    def _key(self) -> Tuple[Any, ...]:
        return (self.fst, self.snd)

    def __repr__(self) -> str:
        return f"Pair({self.fst!r}, {self.snd!r})"


class Seq(_Compound):
    """A finite sequence of values."""

    __slots__ = ("items",)

    _tag = 3

    def __init__(self, items: Iterable[Value] = ()):
        self.items: Tuple[Value, ...] = tuple(items)

    def _key(self) -> Tuple[Any, ...]:
        return self.items

    def __repr__(self) -> str:
        return f"Seq({list(self.items)!r})"

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Value]:
        return iter(self.items)

    def get(self, index: int, default: Value) -> Value:
        """Return the item at *index*, *default* if out of range."""
        if 0 <= index < len(self.items):
            return self.items[index]
        return default

    def concat(self, other: "Seq") -> "Seq":
        return Seq(self.items + other.items)

    def append(self, item: Value) -> "Seq":
        return Seq(self.items + (item,))

    def tail(self) -> "Seq":
        return Seq(self.items[1:])


class MSet(_Compound):
    """
    A finite multiset of values.

    Items are kept sorted: two multisets with the same elements compare equal
    regardless of construction order.
    """

    __slots__ = ("items",)

    _tag = 4

    def __init__(self, items: Iterable[Value] = ()):
        self.items: Tuple[Value, ...] = tuple(sorted(items, key=sort_key))

    def _key(self) -> Tuple[Any, ...]:
        return self.items

    def __repr__(self) -> str:
        return f"MSet({list(self.items)!r})"

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[Value]:
        return iter(self.items)

    def __contains__(self, item: Any) -> bool:
        return item in self.items

    def count(self, item: Value) -> int:
        return self.items.count(item)

    def counter(self) -> "Counter[Value]":
        return Counter(self.items)

    def union(self, other: "MSet") -> "MSet":
        return MSet(self.items + other.items)

    def add(self, item: Value) -> "MSet":
        return MSet(self.items + (item,))

    def diff(self, other: "MSet") -> "MSet":
        """Multiset difference: each occurrence in *other* removes one."""
        rest = self.counter()
        rest.subtract(other.counter())
        return MSet(rest.elements())

    def remove(self, item: Value) -> "MSet":
        """Remove one occurrence of *item*; it must be present."""
        items = list(self.items)
        items.remove(item)
        return MSet(items)

    def issubset(self, other: "MSet") -> bool:
        mine = self.counter()
        theirs = other.counter()
        return all(theirs[k] >= n for k, n in mine.items())

    def submultisets(self) -> Iterator["MSet"]:
        """Generate every sub-multiset, including the empty one and self."""
        distinct = sorted(set(self.items), key=sort_key)
        counts = self.counter()

        def gen(i: int) -> Iterator[Tuple[Value, ...]]:
            if i == len(distinct):
                yield ()
                return
            for rest in gen(i + 1):
                for n in range(counts[distinct[i]] + 1):
                    yield (distinct[i],) * n + rest

        for items in gen(0):
            yield MSet(items)


class FMap(_Compound):
    """
    A finite map between values.

    Entries are kept sorted by key. Lookups outside the domain return the
    default passed by the caller.
    """

    __slots__ = ("items", "_dict")

    _tag = 5

    def __init__(
        self,
        items: Union[Mapping[Value, Value], Iterable[Tuple[Value, Value]]] = (),
    ):
        d: Dict[Value, Value] = dict(
            items.items() if isinstance(items, Mapping) else items
        )
        self._dict = d
        self.items: Tuple[Tuple[Value, Value], ...] = tuple(
            sorted(d.items(), key=lambda kv: sort_key(kv[0]))
        )

    def _key(self) -> Tuple[Any, ...]:
        return self.items

    def __repr__(self) -> str:
        return f"FMap({dict(self.items)!r})"

    def __len__(self) -> int:
        return len(self.items)

    def __contains__(self, key: Any) -> bool:
        return key in self._dict

    def get(self, key: Value, default: Value) -> Value:
        return self._dict.get(key, default)

    def set(self, key: Value, value: Value) -> "FMap":
        d = dict(self._dict)
        d[key] = value
        return FMap(d)

    def keys(self) -> Tuple[Value, ...]:
        return tuple(k for k, _ in self.items)

    def values(self) -> Tuple[Value, ...]:
        return tuple(v for _, v in self.items)

    def domain(self) -> MSet:
        return MSet(self.keys())


def sort_key(v: Value) -> SortKey:
    """
    Return a key establishing a total order across all the values.

    Values of different kinds are ordered by kind: booleans, integers, pairs,
    sequences, multisets, maps.
    """
    if isinstance(v, bool):
        return (0, int(v))
    if isinstance(v, int):
        return (1, v)
    if isinstance(v, Pair):
        return (2, sort_key(v.fst), sort_key(v.snd))
    if isinstance(v, (Seq, MSet)):
        return (v._tag, tuple(sort_key(i) for i in v.items))
    if isinstance(v, FMap):
        return (
            5,
            tuple((sort_key(k), sort_key(x)) for k, x in v.items),
        )
    raise TypeError(f"not a commcsl value: {v!r}")


def same_value(a: Value, b: Value) -> bool:
    """
    Compare two values exactly.

    Unlike ``==`` this function doesn't consider ``True`` equal to ``1``.
    """
    if isinstance(a, bool) or isinstance(b, bool):
        return type(a) is type(b) and a == b
    return a == b


def format_value(v: Value) -> str:
    """Return *v* in the surface syntax of the expression language."""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, Pair):
        return f"({format_value(v.fst)}, {format_value(v.snd)})"
    if isinstance(v, Seq):
        return "[" + ", ".join(format_value(i) for i in v.items) + "]"
    if isinstance(v, MSet):
        return "{|" + ", ".join(format_value(i) for i in v.items) + "|}"
    if isinstance(v, FMap):
        return (
            "{"
            + ", ".join(
                f"{format_value(k)}: {format_value(x)}" for k, x in v.items
            )
            + "}"
        )
    raise TypeError(f"not a commcsl value: {v!r}")


def to_json(v: Value) -> Any:
    """
    Return a JSON-serializable representation of *v*.

    Integers and booleans map to themselves, compound values to their
    surface syntax.
    """
    if isinstance(v, (bool, int)):
        return v
    return format_value(v)


def subvalues(v: Value) -> Iterator[Value]:
    """
    Generate *v* and every value nested inside it.

    Sequence suffixes and sub-multisets are included, so that existential
    witnesses can be taken from values found in a state.
    """
    yield v
    if isinstance(v, Pair):
        yield from subvalues(v.fst)
        yield from subvalues(v.snd)
    elif isinstance(v, Seq):
        for i in range(1, len(v.items) + 1):
            yield Seq(v.items[i:])
            yield Seq(v.items[:-i])
        for item in v.items:
            yield from subvalues(item)
    elif isinstance(v, MSet):
        for sub in v.submultisets():
            if sub != v:
                yield sub
        for item in set(v.items):
            yield from subvalues(item)
    elif isinstance(v, FMap):
        yield v.domain()
        for k, x in v.items:
            yield from subvalues(k)
            yield from subvalues(x)


def multisets_of(
    elements: Iterable[Value], max_size: int
) -> Iterator[MSet]:
    """Generate all the multisets of *elements* up to *max_size* items."""
    elems = sorted(set(elements), key=sort_key)
    for n in range(max_size + 1):
        for items in combinations_with_replacement(elems, n):
            yield MSet(items)

