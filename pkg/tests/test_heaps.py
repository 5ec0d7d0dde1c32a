from fractions import Fraction

import pytest

from commcsl.heaps import ExtendedHeap, EMPTY_HEAP, ONE, full_heap
from commcsl.heaps import heap_add, heap_add_all, heap_sub, heap_leq, heap_lub
from commcsl.heaps import compatible, normalize, absorbable, complete
from commcsl.heaps import with_fresh_cell, ABSORB_NONE, ABSORB_GUARDS
from commcsl.heaps import ABSORB_PERM, ABSORB_ALL
from commcsl.values import Seq, MSet, FMap

HALF = Fraction(1, 2)


def cell(frac, v, loc=0):
    return ExtendedHeap({loc: (Fraction(frac), v)})


def sguard(frac, *args):
    return ExtendedHeap(shared=(Fraction(frac), MSet(args)))


def uguard(name, *args):
    return ExtendedHeap(unique={name: Seq(args)})


def test_add_fractions():
    assert heap_add(cell(HALF, 1), cell(HALF, 1)) == cell(1, 1)
    assert heap_add(cell(HALF, 1), cell(HALF, 2)) is None
    assert heap_add(cell(1, 1), cell(HALF, 1)) is None


def test_add_disjoint():
    h = heap_add(cell(1, 1, loc=0), cell(1, 2, loc=1))
    assert normalize(h) == FMap({0: 1, 1: 2})


def test_add_shared_guards():
    h = heap_add(sguard(HALF, 1), sguard(HALF, 2))
    assert h == sguard(1, 1, 2)
    assert heap_add(sguard(1), sguard(HALF)) is None


def test_add_unique_guards():
    assert heap_add(uguard("A", 1), uguard("B")) == ExtendedHeap(
        unique={"A": Seq([1]), "B": Seq()}
    )
    assert heap_add(uguard("A"), uguard("A")) is None


def test_add_all():
    assert heap_add_all([]) == EMPTY_HEAP
    assert heap_add_all([cell(HALF, 0)] * 2) == cell(1, 0)
    assert heap_add_all([cell(HALF, 0)] * 3) is None


def test_sub():
    h = heap_add(cell(1, 1), sguard(1, 1, 2))
    assert heap_sub(h, cell(1, 1)) == sguard(1, 1, 2)
    assert heap_sub(h, cell(HALF, 1)) == heap_add(cell(HALF, 1), sguard(1, 1, 2))
    assert heap_sub(h, sguard(HALF, 2)) == heap_add(cell(1, 1), sguard(HALF, 1))
    assert heap_sub(h, sguard(HALF, 3)) is None
    assert heap_sub(h, sguard(1, 1)) is None
    assert heap_sub(h, cell(1, 2)) is None
    assert heap_sub(uguard("A", 1), uguard("A", 1)) == EMPTY_HEAP
    assert heap_sub(uguard("A", 1), uguard("A")) is None


@pytest.mark.parametrize(
    "a, b",
    [
        (cell(HALF, 3), cell(HALF, 3)),
        (sguard(HALF, 1), sguard(HALF)),
        (uguard("A", 1), EMPTY_HEAP),
    ],
)
def test_sub_inverts_add(a, b):
    assert heap_sub(heap_add(a, b), b) == a
    assert heap_leq(b, heap_add(a, b))


def test_lub():
    assert heap_lub(cell(HALF, 1), cell(1, 1)) == cell(1, 1)
    assert heap_lub(cell(1, 1), cell(1, 2)) is None
    assert heap_lub(sguard(HALF), sguard(1, 1)) == sguard(1, 1)
    assert heap_lub(uguard("A"), uguard("A", 1)) is None
    assert heap_lub(cell(1, 1), uguard("A")) == heap_add(cell(1, 1), uguard("A"))


def test_compatible():
    assert compatible(cell(HALF, 1), cell(1, 1))
    assert not compatible(cell(HALF, 1), cell(HALF, 2))
    assert compatible(sguard(HALF, 1), sguard(HALF, 2))
    assert not compatible(sguard(1, 1), sguard(1, 2))
    assert not compatible(uguard("A", 1), uguard("A", 2))


def test_absorbable():
    assert absorbable(EMPTY_HEAP, ABSORB_NONE)
    assert not absorbable(cell(1, 0), ABSORB_GUARDS)
    assert absorbable(cell(1, 0), ABSORB_PERM)
    assert not absorbable(sguard(1), ABSORB_PERM)
    assert absorbable(heap_add(cell(1, 0), sguard(1)), ABSORB_ALL)


def test_complete_and_fresh():
    h = heap_add(cell(HALF, 1), sguard(HALF))
    assert complete(h) == heap_add(cell(1, 1), sguard(HALF))
    h2 = with_fresh_cell(h, 7)
    assert h2.perm[1] == (ONE, 7)
    assert h2.shared == h.shared


def test_properties():
    assert EMPTY_HEAP.is_empty
    assert not sguard(1).is_empty
    assert sguard(1).has_guards
    assert not cell(1, 0).has_guards
    h = heap_add(cell(1, 0), uguard("A"))
    assert h.perm_part() == cell(1, 0)
    assert h.guard_part() == uguard("A")
    assert full_heap({0: 4}) == cell(1, 4)


def test_to_json():
    h = heap_add(heap_add(cell(HALF, 1), sguard(1, 2)), uguard("A", 3))
    assert h.to_json() == {
        "perm": {"0": ["1/2", 1]},
        "shared": ["1", "{|2|}"],
        "unique": {"A": "[3]"},
    }


@pytest.mark.slow
def test_random_add(faker):
    for i in range(10000):
        a, b, c = faker.make_heaps(3)
        ab = heap_add(a, b)
        assert ab == heap_add(b, a)
        if ab is None:
            continue
        assert heap_leq(a, ab)
        assert heap_sub(ab, b) == a
        assert compatible(a, b)
        bc = heap_add(b, c)
        left = heap_add(ab, c)
        right = heap_add(a, bc) if bc is not None else None
        assert left == right


@pytest.mark.slow
def test_random_split(faker):
    for i in range(10000):
        h = faker.make_heap()
        a, b = faker.split_heap(h)
        assert heap_add(a, b) == h
        assert heap_sub(h, a) == b
        assert heap_sub(h, b) == a


@pytest.mark.slow
def test_random_lub(faker):
    for i in range(10000):
        a, b = faker.make_heaps(2)
        lub = heap_lub(a, b)
        if lub is None:
            continue
        assert compatible(a, b)
        assert heap_leq(a, lub)
        assert heap_leq(b, lub)
        assert heap_lub(b, a) == lub


@pytest.mark.slow
def test_random_normalize(faker):
    for i in range(10000):
        h = faker.make_heap(guards=False)
        assert normalize(complete(h)) == normalize(h)
        assert normalize(full_heap(dict(normalize(h).items))) == normalize(h)
