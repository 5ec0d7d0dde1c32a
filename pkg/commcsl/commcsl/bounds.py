"""
Search bounds and finite value domains.
"""

# Copyright (C) 2022 The CommCSL Team

import os
import logging
from math import factorial
from functools import lru_cache
from itertools import combinations, product
from typing import Iterator, NamedTuple, Optional, Tuple

from . import errors as e
from .types import Type, IntType, BoolType, PairType, SeqType, MultisetType
from .types import MapType
from .values import Value, Pair, Seq, MSet, FMap

logger = logging.getLogger(__name__)

DEFAULT_INT_RANGE = (-2, 3)
DEFAULT_HEAP_MAX = 4
DEFAULT_CONTAINER_MAX = 4
DEFAULT_CAP = 200_000

DEFAULT_MAX_STEPS = 100_000
DEFAULT_MAX_CONFIGS = 1_000_000


class Domain(NamedTuple):
    """
    Finite domains used by the bounded checks.

    :param int_lo: smallest integer enumerated.
    :param int_hi: largest integer enumerated.
    :param heap_max: maximum number of cells in a generated heap.
    :param container_max: maximum size of enumerated sequences, multisets and
        maps.
    :param cap: maximum number of values enumerated for a single type; above
        it the checks answer ``unknown``.
    """

    int_lo: int = DEFAULT_INT_RANGE[0]
    int_hi: int = DEFAULT_INT_RANGE[1]
    heap_max: int = DEFAULT_HEAP_MAX
    container_max: int = DEFAULT_CONTAINER_MAX
    cap: int = DEFAULT_CAP

    @property
    def ints(self) -> range:
        return range(self.int_lo, self.int_hi + 1)

    def check(self) -> "Domain":
        """Return the domain itself, raise `InterfaceError` if invalid."""
        if self.int_lo > self.int_hi:
            raise e.InterfaceError(
                f"empty int range: {self.int_lo}..{self.int_hi}"
            )
        for name in ("heap_max", "container_max", "cap"):
            if getattr(self, name) < 1:
                raise e.InterfaceError(f"{name} must be positive")
        return self

    def to_json(self) -> dict:  # type: ignore[type-arg]
        return {
            "ints": [self.int_lo, self.int_hi],
            "heap_max": self.heap_max,
            "container_max": self.container_max,
            "cap": self.cap,
        }


class ExploreBounds(NamedTuple):
    """
    Bounds of the exploration of the interleavings of a program.

    :param max_steps: maximum length of an explored schedule.
    :param max_configs: maximum number of distinct configurations visited.
    """

    max_steps: int = DEFAULT_MAX_STEPS
    max_configs: int = DEFAULT_MAX_CONFIGS

    def check(self) -> "ExploreBounds":
        if self.max_steps < 1 or self.max_configs < 1:
            raise e.InterfaceError("exploration bounds must be positive")
        return self


def parse_int_range(s: str) -> Tuple[int, int]:
    """Parse a ``LO..HI`` string."""
    lo, sep, hi = s.partition("..")
    try:
        if not sep:
            raise ValueError(s)
        return int(lo), int(hi)
    except ValueError:
        raise e.InterfaceError(f"bad int range: {s!r}, expected LO..HI")


def get_workers(workers: Optional[int] = None) -> int:
    """
    Return the number of workers to use.

    If *workers* is not specified use the ``COMMCSL_WORKERS`` environment
    variable, default to 1.
    """
    if workers is None:
        env = os.environ.get("COMMCSL_WORKERS", "")
        try:
            workers = int(env) if env else 1
        except ValueError:
            raise e.InterfaceError(
                f"bad COMMCSL_WORKERS value: {env!r}"
            ) from None
    if workers < 1:
        raise e.InterfaceError("the number of workers must be at least 1")
    return workers


def count_values(ty: Type, domain: Domain) -> int:
    """Return the number of values of *ty* within *domain*."""
    n = domain.container_max
    if isinstance(ty, IntType):
        return len(domain.ints)
    if isinstance(ty, BoolType):
        return 2
    if isinstance(ty, PairType):
        return count_values(ty.fst, domain) * count_values(ty.snd, domain)
    if isinstance(ty, SeqType):
        m = count_values(ty.elem, domain)
        return sum(m ** k for k in range(n + 1))
    if isinstance(ty, MultisetType):
        m = count_values(ty.elem, domain)
        return sum(_comb(m + k - 1, k) for k in range(n + 1))
    if isinstance(ty, MapType):
        nk = count_values(ty.key, domain)
        nv = count_values(ty.value, domain)
        return sum(_comb(nk, k) * nv ** k for k in range(min(n, nk) + 1))
    raise TypeError(f"unknown type: {ty!r}")


def enumerable(ty: Type, domain: Domain) -> bool:
    """Return `!True` if the values of *ty* fit in the domain cap."""
    return count_values(ty, domain) <= domain.cap


@lru_cache(maxsize=512)
def enumerate_values(ty: Type, domain: Domain) -> Tuple[Value, ...]:
    """
    Return all the values of *ty* within *domain*, smallest containers first.

    The caller should check `enumerable()` first: this function doesn't stop
    at the domain cap.
    """
    return tuple(_gen_values(ty, domain))


def _gen_values(ty: Type, domain: Domain) -> Iterator[Value]:
    n = domain.container_max
    if isinstance(ty, IntType):
        yield from domain.ints
    elif isinstance(ty, BoolType):
        yield False
        yield True
    elif isinstance(ty, PairType):
        for a, b in product(
            enumerate_values(ty.fst, domain), enumerate_values(ty.snd, domain)
        ):
            yield Pair(a, b)
    elif isinstance(ty, SeqType):
        elems = enumerate_values(ty.elem, domain)
        for k in range(n + 1):
            for items in product(elems, repeat=k):
                yield Seq(items)
    elif isinstance(ty, MultisetType):
        elems = enumerate_values(ty.elem, domain)
        for k in range(n + 1):
            for items in _multichoose(elems, k):
                yield MSet(items)
    elif isinstance(ty, MapType):
        keys = enumerate_values(ty.key, domain)
        vals = enumerate_values(ty.value, domain)
        for k in range(min(n, len(keys)) + 1):
            for ks in combinations(keys, k):
                for vs in product(vals, repeat=k):
                    yield FMap(zip(ks, vs))
    else:
        raise TypeError(f"unknown type: {ty!r}")


def _comb(n: int, k: int) -> int:
    if k < 0 or k > n:
        return 0
    return factorial(n) // (factorial(k) * factorial(n - k))


def _multichoose(
    elems: Tuple[Value, ...], k: int
) -> Iterator[Tuple[Value, ...]]:
    if k == 0:
        yield ()
        return
    for i, x in enumerate(elems):
        for rest in _multichoose(elems[i:], k - 1):
            yield (x,) + rest
