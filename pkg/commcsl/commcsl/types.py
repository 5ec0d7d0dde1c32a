"""
The monomorphic type system of the expression language.
"""

# Copyright (C) 2022 The CommCSL Team

from typing import Any, Optional, Tuple

from .values import Value, Pair, Seq, MSet, FMap


class Type:
    """
    Base class of the expression types.

    Types are immutable and hashable; equality is structural.
    """

    __slots__ = ()

    def default(self) -> Value:
        """The value read from unbound variables and missing entries."""
        raise NotImplementedError

    def contains(self, v: Value) -> bool:
        """Return `!True` if *v* is a value of this type."""
        raise NotImplementedError

    def _key(self) -> Tuple[Any, ...]:
        return ()

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Type) or type(self) is not type(other):
            return False
        return self._key() == other._key()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._key()))

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self}>"


class IntType(Type):
    __slots__ = ()

    def default(self) -> Value:
        return 0

    def contains(self, v: Value) -> bool:
        return isinstance(v, int) and not isinstance(v, bool)

    def __str__(self) -> str:
        return "Int"


class BoolType(Type):
    __slots__ = ()

    def default(self) -> Value:
        return False

    def contains(self, v: Value) -> bool:
        return isinstance(v, bool)

    def __str__(self) -> str:
        return "Bool"


class PairType(Type):
    __slots__ = ("fst", "snd")

    def __init__(self, fst: Type, snd: Type):
        self.fst = fst
        self.snd = snd

    def _key(self) -> Tuple[Any, ...]:
        return (self.fst, self.snd)

    def default(self) -> Value:
        return Pair(self.fst.default(), self.snd.default())

    def contains(self, v: Value) -> bool:
        return (
            isinstance(v, Pair)
            and self.fst.contains(v.fst)
            and self.snd.contains(v.snd)
        )

    def __str__(self) -> str:
        return f"Pair[{self.fst}, {self.snd}]"


class SeqType(Type):
    __slots__ = ("elem",)

    def __init__(self, elem: Type):
        self.elem = elem

    def _key(self) -> Tuple[Any, ...]:
        return (self.elem,)

    def default(self) -> Value:
        return Seq()

    def contains(self, v: Value) -> bool:
        return isinstance(v, Seq) and all(self.elem.contains(i) for i in v)

    def __str__(self) -> str:
        return f"Seq[{self.elem}]"


class MultisetType(Type):
    __slots__ = ("elem",)

    def __init__(self, elem: Type):
        self.elem = elem

    def _key(self) -> Tuple[Any, ...]:
        return (self.elem,)

    def default(self) -> Value:
        return MSet()

    def contains(self, v: Value) -> bool:
        return isinstance(v, MSet) and all(self.elem.contains(i) for i in v)

    def __str__(self) -> str:
        return f"Multiset[{self.elem}]"


class MapType(Type):
    __slots__ = ("key", "value")

    def __init__(self, key: Type, value: Type):
        self.key = key
        self.value = value

    def _key(self) -> Tuple[Any, ...]:
        return (self.key, self.value)

    def default(self) -> Value:
        return FMap()

    def contains(self, v: Value) -> bool:
        return isinstance(v, FMap) and all(
            self.key.contains(k) and self.value.contains(x)
            for k, x in v.items
        )

    def __str__(self) -> str:
        return f"Map[{self.key}, {self.value}]"


INT = IntType()
BOOL = BoolType()


def default_value(ty: Optional[Type]) -> Value:
    """Return the default value of *ty*; untyped positions default to 0."""
    return ty.default() if ty is not None else 0
