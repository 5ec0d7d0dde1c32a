import json
from pathlib import Path
from random import choice, randint

import pytest

from commcsl import ActionKind, Verdict
from commcsl import errors as e
from commcsl.bounds import Domain, enumerate_values
from commcsl.resource import parse_spec, check_validity, load_specs
from commcsl.resource import must_commute, fold_actions, swap_closure
from commcsl.types import INT, MapType
from commcsl.values import Pair, Seq, MSet, FMap

COUNTER = """
spec Counter {
  type Int
  alpha : Int = v
  shared Add(n : Int) = v + n
    requires low(n)
}
"""

MAP_VALUES = """
spec MV {
  type Map[Int, Int]
  alpha : Map[Int, Int] = v
  shared Put(arg : Pair[Int, Int]) = v[fst(arg) := snd(arg)]
    requires low(fst(arg))
}
"""

MIXED = """
// a shared action and two producers
spec Mixed {
  type Seq[Int]
  alpha : Multiset[Int] = mset(v)
  shared Add(arg : Int) = v ++ [arg] requires low(arg)
  unique P1(arg : Int) = v ++ [arg] requires low(arg)
  unique P2(arg : Int) = [arg] ++ v requires low(arg)
}
"""

small = Domain(int_lo=0, int_hi=1, container_max=1)


def test_parse_spec():
    spec = parse_spec(COUNTER, "counter.cspec")["Counter"]
    assert spec.value_type == INT
    assert spec.unique == {}
    add = spec.shared
    assert add.kind is ActionKind.SHARED
    assert add.apply(3, 4) == 7
    assert add.pre_holds(1, 1)
    assert not add.pre_holds(1, 2)
    assert spec.abstract(5) == 5
    assert spec.get_action(None) is add
    assert spec.get_action("Add") is None


def test_param_renamed():
    spec = parse_spec(COUNTER)["Counter"]
    assert str(spec.shared.body) == "v + arg"
    assert str(spec.shared.pre) == "low(arg)"


def test_actions_order():
    spec = parse_spec(MIXED)["Mixed"]
    assert [a.name for a in spec.actions] == ["Add", "P1", "P2"]
    assert spec.unique["P2"].apply(Seq([1]), 2) == Seq([2, 1])
    assert spec.abstract(Seq([2, 1, 2])) == MSet([1, 2, 2])


def test_relevant_pairs():
    spec = parse_spec(MIXED)["Mixed"]
    pairs = [(a.name, b.name) for a, b in spec.relevant_pairs()]
    assert pairs == [("Add", "Add"), ("Add", "P1"), ("Add", "P2"), ("P1", "P2")]
    p1 = spec.unique["P1"]
    assert not must_commute(p1, p1)
    assert must_commute(p1, spec.unique["P2"])
    assert must_commute(spec.shared, spec.shared)


def test_counter_valid():
    spec = parse_spec(COUNTER)["Counter"]
    rv = check_validity(spec, Domain(int_lo=-1, int_hi=2))
    assert rv.verdict is Verdict.HOLDS
    assert rv.verdict_a == {"Add": Verdict.HOLDS}
    assert rv.checked_pairs == [("Add", "Add")]
    assert rv.get("B.Add.Add").verdict is Verdict.HOLDS
    with pytest.raises(KeyError):
        rv.get("B.Add.Sub")


def test_precondition_needed():
    spec = parse_spec(COUNTER.replace("requires low(n)", ""))["Counter"]
    rv = check_validity(spec, small)
    assert rv.verdict is Verdict.FAILS
    o = rv.get("A.Add")
    assert o.verdict is Verdict.FAILS
    assert o.counterexample == {"v": 0, "v'": 0, "arg": 0, "arg'": 1}
    assert rv.verdict_b == {("Add", "Add"): Verdict.HOLDS}


def test_map_values_invalid():
    spec = parse_spec(MAP_VALUES)["MV"]
    rv = check_validity(spec, small)
    assert rv.verdict is Verdict.FAILS
    cex = {"v": FMap(), "v'": FMap(), "arg": Pair(0, 0), "arg'": Pair(0, 1)}
    assert rv.get("A.Put").counterexample == cex
    assert rv.get("B.Put.Put").counterexample == cex


def test_map_keys_valid():
    text = MAP_VALUES.replace(
        "alpha : Map[Int, Int] = v", "alpha : Multiset[Int] = dom(v)"
    )
    spec = parse_spec(text)["MV"]
    assert spec.value_type == MapType(INT, INT)
    assert check_validity(spec, small).verdict is Verdict.HOLDS


def test_mixed_validity():
    spec = parse_spec(MIXED)["Mixed"]
    rv = check_validity(spec, small)
    assert rv.verdict is Verdict.HOLDS
    assert rv.checked_pairs == [
        ("Add", "Add"),
        ("Add", "P1"),
        ("Add", "P2"),
        ("P1", "P2"),
    ]


def test_too_big():
    spec = parse_spec(COUNTER)["Counter"]
    rv = check_validity(spec, Domain(cap=2))
    assert rv.verdict is Verdict.UNKNOWN
    assert all(o.verdict is Verdict.UNKNOWN for o in rv.obligations)
    assert "exceed the cap" in rv.obligations[0].note


def test_workers_same_result():
    spec = parse_spec(MIXED)["Mixed"]
    assert check_validity(spec, small, workers=3) == check_validity(
        spec, small, workers=1
    )


def test_report_json():
    spec = parse_spec(MAP_VALUES)["MV"]
    rv = check_validity(spec, small).to_json()
    assert rv["spec"] == "MV"
    assert rv["verdict"] == "fails"
    assert rv["checked_pairs"] == [["Put", "Put"]]
    assert rv["obligations"][0]["counterexample"] == {
        "v": "{}",
        "v'": "{}",
        "arg": "(0, 0)",
        "arg'": "(0, 1)",
    }


def test_fold_and_swap():
    spec = parse_spec(MIXED)["Mixed"]
    p1, p2 = spec.unique["P1"], spec.unique["P2"]
    steps = [(p1, 1), (p2, 2)]
    assert fold_actions(spec, Seq(), steps) == Seq([2, 1])
    closure = swap_closure(steps)
    assert closure[0] == tuple(steps)
    assert len(closure) == 2
    assert len(swap_closure([(p1, 1), (p1, 2)])) == 1
    add = spec.shared
    assert len(swap_closure([(add, 0), (add, 1), (add, 2)])) == 6
    assert len(swap_closure([(add, 0), (add, 1), (add, 2)], limit=4)) == 4


@pytest.mark.parametrize(
    "text",
    [
        "spec S {\n alpha : Int = v\n shared A(a : Int) = v\n}",
        "spec S {\n type Int\n shared A(a : Int) = v\n}",
        "spec S {\n type Int\n alpha : Int = v + x\n shared A(a : Int) = v\n}",
        "spec S {\n type Int\n alpha : Int = v\n}",
        "spec S {\n type Int\n alpha : Int = v\n shared A(v : Int) = v\n}",
        "spec S {\n type Int\n alpha : Int = v\n shared A(a : Int) = v + b\n}",
        "spec S {\n type Int\n alpha : Int = v\n"
        " shared A(a : Int) = v\n shared B(a : Int) = v\n}",
        "spec S {\n type Int\n alpha : Int = v\n"
        " unique A(a : Int) = v\n unique A(a : Int) = v\n}",
        "spec S {\n type Int\n alpha : Int = v\n"
        " shared A(a : Int) = a requires low(v)\n}",
        "spec S {\n type Int\n alpha : Int = v\n"
        " shared A(a : Int) = a requires a |-> 1\n}",
    ],
)
def test_spec_errors(text):
    with pytest.raises(e.SpecError):
        parse_spec(text)


def test_spec_type_error():
    with pytest.raises(e.TypeCheckError):
        parse_spec(
            "spec S {\n type Int\n alpha : Int = v\n"
            " shared A(a : Bool) = a\n}"
        )


@pytest.mark.parametrize(
    "text",
    [
        "",
        COUNTER + COUNTER,
        "spec S {\n type Int\n alpha : Int = v\n frobnicate\n}",
        "spec S {\n type Int extra\n}",
    ],
)
def test_spec_syntax_errors(text):
    with pytest.raises(e.ParseError):
        parse_spec(text)


def test_load_specs():
    files = {"a.cspec": COUNTER, "b.cspec": MIXED, "c.cspec": COUNTER}
    specs = load_specs(["a.cspec", "b.cspec"], files.__getitem__)
    assert list(specs) == ["Counter", "Mixed"]
    with pytest.raises(e.SpecError):
        load_specs(["a.cspec", "c.cspec"], files.__getitem__)


PROD_CONS = """
spec PC {
  type Pair[Pair[Int, Seq[Int]], Seq[Int]]
  alpha : Multiset[Int] = mset(snd(v))
  shared Prod(arg : Int) = let b = fst(v) in (fst(b) > 0 ? (fst(b) - 1, \
snd(b)) : (0, snd(b) ++ [arg]), snd(v) ++ [arg])
    requires low(arg)
  unique Cons(arg : Int) = let b = fst(v) in (len(snd(b)) > 0 ? (0, \
tail(snd(b))) : (fst(b) + 1, []), snd(v))
}
"""

PROD_CONS_SEQ = PROD_CONS.replace(
    "alpha : Multiset[Int] = mset(snd(v))", "alpha : Seq[Int] = snd(v)"
)

DISJOINT = """
spec MD {
  type Map[Int, Int]
  alpha : Map[Int, Int] = v
  unique Put1(arg : Pair[Int, Int]) = fst(arg) == 0 ? v[fst(arg) := snd(arg)] : v
    requires low(fst(arg)) ** low(snd(arg)) ** fst(arg) == 0
  unique Put2(arg : Pair[Int, Int]) = fst(arg) >= 1 ? v[fst(arg) := snd(arg)] : v
    requires low(fst(arg)) ** low(snd(arg)) ** fst(arg) >= 1
}
"""

# The preconditions alone don't make the puts commute
PARTIAL = DISJOINT.replace("fst(arg) == 0 ? ", "").replace(
    "fst(arg) >= 1 ? ", ""
).replace(" : v\n", "\n")


def test_prod_cons():
    spec = parse_spec(PROD_CONS)["PC"]
    prod, cons = spec.shared, spec.unique["Cons"]
    empty = Pair(Pair(0, Seq()), Seq())
    assert cons.apply(empty, 0) == Pair(Pair(1, Seq()), Seq())
    v = prod.apply(cons.apply(empty, 0), 5)
    assert v == Pair(Pair(0, Seq()), Seq([5]))
    assert prod.apply(empty, 5) == Pair(Pair(0, Seq([5])), Seq([5]))

    rv = check_validity(spec, small)
    assert rv.verdict is Verdict.HOLDS
    assert rv.checked_pairs == [("Prod", "Prod"), ("Prod", "Cons")]


def test_prod_cons_sequence_abstraction():
    rv = check_validity(parse_spec(PROD_CONS_SEQ)["PC"], small)
    assert rv.verdict is Verdict.FAILS
    assert rv.verdict_a == {"Prod": Verdict.HOLDS, "Cons": Verdict.HOLDS}
    assert rv.verdict_b == {
        ("Prod", "Prod"): Verdict.FAILS,
        ("Prod", "Cons"): Verdict.HOLDS,
    }


def test_disjoint_puts():
    domain = Domain(int_lo=0, int_hi=2, container_max=1)
    spec = parse_spec(DISJOINT)["MD"]
    rv = check_validity(spec, domain)
    assert rv.verdict is Verdict.HOLDS
    assert rv.checked_pairs == [("Put1", "Put2")]

    rv = check_validity(parse_spec(PARTIAL)["MD"], domain)
    assert rv.verdict is Verdict.FAILS
    assert rv.verdict_a == {"Put1": Verdict.HOLDS, "Put2": Verdict.HOLDS}
    o = rv.get("B.Put1.Put2")
    assert o.verdict is Verdict.FAILS
    assert o.counterexample["arg"].fst == o.counterexample["arg'"].fst


def naive_commute(spec, a, b, domain):
    values = enumerate_values(spec.value_type, domain)
    for v in values:
        for w in values:
            if spec.abstract(v) != spec.abstract(w):
                continue
            for x in enumerate_values(a.arg_type, domain):
                for y in enumerate_values(b.arg_type, domain):
                    left = b.apply(a.apply(v, x), y)
                    right = a.apply(b.apply(w, y), x)
                    if spec.abstract(left) != spec.abstract(right):
                        return Verdict.FAILS
    return Verdict.HOLDS


@pytest.mark.parametrize(
    "text, name",
    [
        (COUNTER, "Counter"),
        (MAP_VALUES, "MV"),
        (MIXED, "Mixed"),
        (PROD_CONS, "PC"),
        (PROD_CONS_SEQ, "PC"),
        (DISJOINT, "MD"),
        (PARTIAL, "MD"),
        (DISJOINT.replace(" ** fst(arg) == 0", ""), "MD"),
    ],
)
def test_commute_naive(text, name):
    spec = parse_spec(text)[name]
    rv = check_validity(spec, small)
    for a, b in spec.relevant_pairs():
        assert rv.verdict_b[a.name, b.name] is naive_commute(spec, a, b, small)


@pytest.mark.slow
@pytest.mark.parametrize("text, name", [(MIXED, "Mixed"), (PROD_CONS, "PC")])
def test_random_swaps(faker, text, name):
    check_swaps(faker, parse_spec(text)[name], 1000)


@pytest.mark.slow
def test_random_swaps_corpus(faker, corpus_dir):
    root = Path(corpus_dir)
    checked = []
    for path in sorted(root.glob("*/spec.cspec")):
        expected = json.loads((path.parent / "expected.json").read_text())
        specs = load_specs([str(path)], lambda p: Path(p).read_text())
        for name, spec in specs.items():
            if expected["specs"].get(name) == "holds":
                check_swaps(faker, spec, 1000)
                checked.append(name)
    assert checked


def check_swaps(faker, spec, n):
    actions = spec.actions
    for i in range(n):
        v0 = faker.make(spec.value_type)
        steps = []
        for j in range(randint(0, 5)):
            action = choice(actions)
            steps.append((action, faker.make(action.arg_type)))
        want = spec.abstract(fold_actions(spec, v0, steps))
        for other in swap_closure(steps):
            assert sorted(_names(other)) == sorted(_names(steps))
            assert spec.abstract(fold_actions(spec, v0, other)) == want


def _names(steps):
    return [(a.name, repr(arg)) for a, arg in steps]
