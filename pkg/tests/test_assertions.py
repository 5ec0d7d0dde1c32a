from fractions import Fraction
from itertools import combinations
from random import choice, randint, random, sample, shuffle

import pytest

from commcsl import Verdict
from commcsl import errors as e
from commcsl.assertions import StatePair, sat_pair, holds, pre_holds
from commcsl.assertions import split_witness
from commcsl.heaps import ONE, ExtendedHeap, full_heap, heap_add
from commcsl.parser import parse_assertion, parse_expr
from commcsl.resource import parse_spec
from commcsl.evaluate import eval_expr
from commcsl.syntax import Emp, Exists, Implies, IntLit, Low, PointsTo, Pure
from commcsl.syntax import SGuard, Star, Var
from commcsl.types import MultisetType, PairType, SeqType, INT, BOOL
from commcsl.values import Pair, Seq, MSet

from .utils import brute_matching

SPEC = parse_spec(
    """
spec Counter {
  type Int
  alpha : Int = v
  shared Add(arg : Int) = v + arg requires low(arg)
  unique Sub(arg : Int) = v - arg requires low(arg)
}
"""
)["Counter"]

ENV = {"s": MultisetType(INT), "q": SeqType(INT)}


def A(text):
    return parse_assertion(text, ENV)


def same(store, heap):
    return StatePair.plain(store, heap, store, heap)


def with_guards(heap, shared=None, unique=None):
    return heap_add(full_heap(heap), ExtendedHeap(None, shared, unique))


@pytest.mark.parametrize(
    "text, heap, verdict",
    [
        ("x |-> 1", {0: 1}, Verdict.HOLDS),
        ("x |-> 1", {0: 2}, Verdict.FAILS),
        ("x |-> 1", {0: 1, 1: 0}, Verdict.FAILS),
        ("x |-> 1 ** true", {0: 1, 1: 0}, Verdict.HOLDS),
        ("x |->[1/2] 1", {0: 1}, Verdict.FAILS),
        ("x |->[1/2] 1 ** x |->[1/2] 1", {0: 1}, Verdict.HOLDS),
        ("x |-> 1 ** x |-> 1", {0: 1}, Verdict.FAILS),
        ("x |-> 1 /\\ x > -1", {0: 1}, Verdict.HOLDS),
        ("x |-> 1 /\\ x > 5", {0: 1}, Verdict.FAILS),
        ("emp", {}, Verdict.HOLDS),
        ("emp", {0: 1}, Verdict.FAILS),
        ("exists v. x |-> v ** v > 0", {0: 1}, Verdict.HOLDS),
        ("exists v. x |-> v ** v > 1", {0: 1}, Verdict.FAILS),
    ],
)
def test_single_state(text, heap, verdict):
    assert sat_pair(A(text), same({"x": 0}, heap)) is verdict


@pytest.mark.parametrize(
    "text, holds_",
    [
        ("low(x)", False),
        ("low(y)", True),
        ("low(x + y - x)", True),
        ("x > 0", True),
        ("x > 1", False),
        ("x > 1 ==> low(y)", False),
        ("y > 0 ==> low(x)", False),
        ("y < 0 ==> low(x)", True),
        ("exists v. low(v) ** v == x", False),
        ("exists v. low(v) ** v == y", True),
    ],
)
def test_relational(text, holds_):
    sp = StatePair.plain({"x": 1, "y": 3}, {}, {"x": 2, "y": 3}, {})
    assert holds(A(text), sp) is holds_


def test_points_to_low_value():
    a = A("exists v. x |-> v ** low(v)")
    assert holds(a, StatePair.plain({"x": 0}, {0: 1}, {"x": 0}, {0: 1}))
    assert not holds(a, StatePair.plain({"x": 0}, {0: 1}, {"x": 0}, {0: 2}))
    # Different locations, same content
    assert holds(a, StatePair.plain({"x": 0}, {0: 1}, {"x": 1}, {1: 1}))


def test_emp_is_empty():
    sp = StatePair.reflexive({}, with_guards({}, (Fraction(1), MSet())))
    assert not holds(A("emp"), sp)
    assert holds(A("sguard(1, {||}) ** emp"), sp)
    assert holds(A("true"), sp)
    assert not holds(A("noguard(true)"), sp)
    assert holds(A("noguard(true)"), same({}, {0: 1}))


def test_shared_guard():
    g1 = with_guards({}, (Fraction(1), MSet([1, 2])))
    g2 = with_guards({}, (Fraction(1), MSet([2, 1])))
    g3 = with_guards({}, (Fraction(1), MSet([1, 3])))
    a = A("exists s. sguard(1, s) ** allpre(s)")
    assert sat_pair(a, StatePair({}, g1, {}, g2), SPEC) is Verdict.HOLDS
    assert sat_pair(a, StatePair({}, g1, {}, g3), SPEC) is Verdict.FAILS
    assert holds(A("sguard(1, {|1, 2|})"), StatePair.reflexive({}, g1))
    assert not holds(A("sguard(1/2, {|1, 2|})"), StatePair.reflexive({}, g1))


def test_shared_guard_halves():
    g = with_guards({}, (Fraction(1), MSet([1, 2])))
    a = A("sguard(1/2, {|1|}) ** sguard(1/2, {|2|})")
    assert holds(a, StatePair.reflexive({}, g))
    a = A("exists s. sguard(1/2, s) ** sguard(1/2, {|2|}) ** s == {|1|}")
    assert holds(a, StatePair.reflexive({}, g))


def test_unique_guard():
    g1 = with_guards({}, unique={"Sub": Seq([1, 2])})
    g2 = with_guards({}, unique={"Sub": Seq([1, 2])})
    g3 = with_guards({}, unique={"Sub": Seq([2, 1])})
    a = A("exists q. uguard(Sub, q) ** allpre(Sub, q)")
    assert holds(a, StatePair({}, g1, {}, g2), SPEC)
    assert not holds(a, StatePair({}, g1, {}, g3), SPEC)
    assert not holds(A("emp"), StatePair({}, g1, {}, g2))


def test_pre_holds():
    assert pre_holds(SPEC, None, MSet([1, 2, 2]), MSet([2, 1, 2]))
    assert not pre_holds(SPEC, None, MSet([1, 2]), MSet([1, 1]))
    assert not pre_holds(SPEC, None, MSet([1]), MSet([1, 1]))
    assert pre_holds(SPEC, "Sub", Seq([3]), Seq([3]))
    assert not pre_holds(SPEC, "Sub", Seq([3]), Seq([3, 3]))
    with pytest.raises(e.InterfaceError):
        pre_holds(SPEC, "Nope", Seq(), Seq())


def test_allpre_needs_spec():
    with pytest.raises(e.InterfaceError):
        sat_pair(A("allpre(s)"), same({"s": MSet()}, {}))


def test_witness_hints():
    a = A("exists q. len(q) == 5 ** low(q)")
    sp = same({}, {})
    assert sat_pair(a, sp) is Verdict.UNKNOWN
    hint = parse_expr("[0, 1, 2, 3, 4]")
    assert sat_pair(a, sp, hints={"q": (hint, hint)}) is Verdict.HOLDS


def test_split_witness():
    sp = StatePair.plain(
        {"x": 0, "y": 1}, {0: 1, 1: 2}, {"x": 1, "y": 0}, {0: 2, 1: 1}
    )
    rv = split_witness(A("x |-> 1"), A("y |-> 2 ** low(x)"), sp)
    assert rv is None
    rv = split_witness(A("exists v. x |-> v"), A("y |-> 2"), sp)
    assert rv is not None
    left, right = rv
    assert left.g1 == full_heap({0: 1})
    assert left.g2 == full_heap({1: 1})
    assert right.g1 == full_heap({1: 2})
    assert right.s1 == sp.s1


def test_split_witness_rest():
    sp = same({"x": 0}, {0: 1, 1: 5})
    left, right = split_witness(A("x |-> 1"), A("true"), sp)
    assert left.g1 == full_heap({0: 1})
    assert right.g1 == full_heap({1: 5})


def test_state_pair_json():
    sp = StatePair.plain({"x": 0}, {0: Seq([1])}, {"x": 0}, {})
    assert sp.swap().s2 == {"x": 0}
    assert sp.to_json() == {
        "store1": {"x": 0},
        "heap1": {"perm": {"0": ["1", "[1]"]}},
        "store2": {"x": 0},
        "heap2": {"perm": {}},
    }


PAIR_SPEC = parse_spec(
    """
spec P {
  type Map[Int, Int]
  alpha : Multiset[Int] = dom(v)
  shared Put(arg : Pair[Int, Int]) = v[fst(arg) := snd(arg)]
    requires low(fst(arg))
}
"""
)["P"]


def test_random_pre_holds(faker):
    put = PAIR_SPEC.shared
    ty = PairType(INT, INT)
    for i in range(200):
        xs = [faker.make(ty) for j in range(randint(0, 4))]
        ys = [faker.make(ty) for j in range(randint(0, 4))]
        if random() < 0.5:
            # same keys, shuffled
            ys = [Pair(x.fst, faker.make(INT)) for x in xs]
            shuffle(ys)
        got = pre_holds(PAIR_SPEC, None, MSet(xs), MSet(ys))
        assert got == brute_matching(xs, ys, put.pre_holds)


RANDOM_ENV = {"x": INT, "y": INT, "b": BOOL, "s": MultisetType(INT)}
WITNESSES = range(-3, 4)


def subheaps(items):
    for n in range(len(items) + 1):
        for sub in combinations(sorted(items, key=repr), n):
            yield frozenset(sub)


def direct(a, s1, h1, s2, h2, memo):
    """
    Decide *a* from its definition, trying every split of the heaps.

    The heaps are sets of full cells ``("cell", loc, value)`` and of a full
    shared guard ``("sguard", args)``.
    """
    key = (a, h1, h2, s1.get("v"), s2.get("v"))
    if key not in memo:
        memo[key] = _direct(a, s1, h1, s2, h2, memo)
    return memo[key]


def _direct(a, s1, h1, s2, h2, memo):
    if isinstance(a, Pure):
        return bool(eval_expr(a.expr, s1)) and bool(eval_expr(a.expr, s2))
    if isinstance(a, Low):
        return eval_expr(a.expr, s1) == eval_expr(a.expr, s2)
    if isinstance(a, Emp):
        return not h1 and not h2
    if isinstance(a, PointsTo):
        return all(
            h == {("cell", eval_expr(a.addr, s), eval_expr(a.value, s))}
            for s, h in ((s1, h1), (s2, h2))
        )
    if isinstance(a, SGuard):
        return all(
            h == {("sguard", eval_expr(a.args, s))}
            for s, h in ((s1, h1), (s2, h2))
        )
    if isinstance(a, Star):
        return any(
            direct(a.left, s1, l1, s2, l2, memo)
            and direct(a.right, s1, h1 - l1, s2, h2 - l2, memo)
            for l1 in subheaps(h1)
            for l2 in subheaps(h2)
        )
    if isinstance(a, Implies):
        c1 = bool(eval_expr(a.cond, s1))
        c2 = bool(eval_expr(a.cond, s2))
        return c1 == c2 and (not c1 or direct(a.body, s1, h1, s2, h2, memo))
    if isinstance(a, Exists):
        return any(
            direct(a.body, {**s1, a.name: v1}, h1, {**s2, a.name: v2}, h2, memo)
            for v1 in WITNESSES
            for v2 in WITNESSES
        )
    raise AssertionError(f"unexpected {a}")


def random_addr(faker):
    if random() < 0.5:
        return IntLit(randint(0, 2))
    return Var(choice("xy"), INT)


def random_assertion(faker, depth=0, exists=True):
    kind = randint(0, 7) if depth < 2 else randint(0, 3)
    if kind == 0:
        return Pure(faker.make_expr(BOOL, RANDOM_ENV))
    if kind == 1:
        ty = INT if random() < 0.7 else BOOL
        return Low(faker.make_expr(ty, RANDOM_ENV))
    if kind == 2:
        return PointsTo(
            random_addr(faker), ONE, faker.make_expr(INT, RANDOM_ENV)
        )
    if kind == 3:
        return Emp() if random() < 0.5 else SGuard(ONE, Var("s"))
    if kind in (4, 5):
        return Star(
            random_assertion(faker, depth + 1, exists),
            random_assertion(faker, depth + 1, exists),
        )
    if kind == 6 or not exists:
        return Implies(
            faker.make_expr(BOOL, RANDOM_ENV),
            random_assertion(faker, depth + 1, exists),
        )
    # the witness is only constrained by the value of a cell
    rest = (
        Low(Var("v", INT))
        if random() < 0.3
        else random_assertion(faker, depth + 1, False)
    )
    cell = PointsTo(random_addr(faker), ONE, Var("v", INT))
    return Exists("v", INT, Star(cell, rest))


def random_state(faker):
    s = faker.make_store(RANDOM_ENV)
    locs = sample(range(3), randint(0, 2))
    cells = {loc: randint(0, 1) for loc in locs}
    shared = None
    if random() < 0.4:
        args = MSet(randint(0, 1) for i in range(randint(0, 2)))
        shared = (ONE, args)
        if random() < 0.5:
            s["s"] = args
    g = ExtendedHeap({loc: (ONE, v) for loc, v in cells.items()}, shared)
    items = {("cell", loc, v) for loc, v in cells.items()}
    if shared is not None:
        items.add(("sguard", shared[1]))
    return s, g, frozenset(items)


@pytest.mark.slow
def test_random_relational(faker):
    for i in range(1000):
        a = random_assertion(faker)
        s1, g1, h1 = random_state(faker)
        s2, g2, h2 = random_state(faker)
        if random() < 0.3:
            s2, g2, h2 = dict(s1), g1, h1
        want = direct(a, s1, h1, s2, h2, {})
        sp = StatePair(s1, g1, s2, g2)
        assert sat_pair(a, sp) is (Verdict.HOLDS if want else Verdict.FAILS), a
