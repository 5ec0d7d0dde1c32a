import pytest

from commcsl.values import Pair, Seq, MSet, FMap
from commcsl.values import format_value, same_value, sort_key, subvalues
from commcsl.values import multisets_of, to_json


def test_mset_order_independent():
    assert MSet([3, 1, 2, 1]) == MSet([1, 1, 2, 3])
    assert hash(MSet([2, 1])) == hash(MSet([1, 2]))
    assert MSet([1, 2]) != MSet([1, 2, 2])


def test_mset_ops():
    a = MSet([1, 1, 2])
    assert a.count(1) == 2
    assert a.union(MSet([2, 3])) == MSet([1, 1, 2, 2, 3])
    assert a.add(0) == MSet([0, 1, 1, 2])
    assert a.diff(MSet([1, 3])) == MSet([1, 2])
    assert a.remove(1) == MSet([1, 2])
    assert MSet([1, 2]).issubset(a)
    assert not MSet([2, 2]).issubset(a)


def test_mset_remove_missing():
    with pytest.raises(ValueError):
        MSet([1]).remove(2)


def test_submultisets():
    subs = list(MSet([1, 1, 2]).submultisets())
    assert len(subs) == 6
    assert len(set(subs)) == 6
    assert MSet() in subs
    assert MSet([1, 1, 2]) in subs


def test_seq():
    s = Seq([1, 2])
    assert s.get(0, -1) == 1
    assert s.get(5, -1) == -1
    assert s.append(3) == Seq([1, 2, 3])
    assert s.concat(Seq([0])) == Seq([1, 2, 0])
    assert s.tail() == Seq([2])
    assert Seq().tail() == Seq()
    assert len(s) == 2


def test_fmap():
    m = FMap({1: 10})
    assert m.get(1, 0) == 10
    assert m.get(2, 0) == 0
    m2 = m.set(0, 5)
    assert m2.keys() == (0, 1)
    assert m2.values() == (5, 10)
    assert m2.domain() == MSet([0, 1])
    assert m.keys() == (1,)
    assert FMap([(1, 2), (0, 3)]) == FMap({0: 3, 1: 2})


def test_compound_types_differ():
    assert Seq([1]) != MSet([1])
    assert Pair(1, 2) != Seq([1, 2])


@pytest.mark.parametrize(
    "a, b, same",
    [
        (1, 1, True),
        (True, 1, False),
        (False, 0, False),
        (True, True, True),
        (Seq([1]), Seq([1]), True),
    ],
)
def test_same_value(a, b, same):
    assert same_value(a, b) is same


def test_sort_key_total():
    values = [FMap({0: 1}), MSet([1]), Seq([]), Pair(0, 0), 3, -1, True, False]
    got = sorted(values, key=sort_key)
    assert got == [
        False, True, -1, 3, Pair(0, 0), Seq([]), MSet([1]), FMap({0: 1})
    ]


def test_sort_key_bad():
    with pytest.raises(TypeError):
        sort_key("x")


@pytest.mark.parametrize(
    "value, text",
    [
        (1, "1"),
        (True, "true"),
        (Pair(1, False), "(1, false)"),
        (Seq([1, 2]), "[1, 2]"),
        (MSet([2, 1]), "{|1, 2|}"),
        (MSet(), "{||}"),
        (FMap({1: 2, 0: 3}), "{0: 3, 1: 2}"),
        (Seq([MSet([1])]), "[{|1|}]"),
    ],
)
def test_format_value(value, text):
    assert format_value(value) == text


def test_to_json_scalars():
    assert to_json(3) == 3
    assert to_json(False) is False


def test_subvalues():
    subs = set(subvalues(Seq([1, 2])))
    assert {Seq([1, 2]), Seq([2]), Seq([1]), Seq(), 1, 2} <= subs
    subs = set(subvalues(FMap({0: 5})))
    assert {MSet([0]), 0, 5} <= subs


def test_multisets_of():
    got = list(multisets_of([1, 0], 2))
    assert got[0] == MSet()
    assert len(got) == 6
    assert MSet([0, 0]) in got
    assert MSet([0, 1]) in got
