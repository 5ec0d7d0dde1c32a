import pytest

from commcsl.parser import parse_expr, parse_assertion
from commcsl.evaluate import eval_expr, eval_bool, holds_relational
from commcsl.evaluate import is_pure_relational
from commcsl.types import INT, BOOL, PairType, SeqType, MultisetType, MapType
from commcsl.smtlib import Script, solve
from commcsl.syntax import BoolLit, IntLit
from commcsl.values import Pair, Seq, MSet, FMap

ENV = {
    "b": BOOL,
    "s": SeqType(INT),
    "ms": MultisetType(INT),
    "m": MapType(INT, INT),
    "p": PairType(INT, INT),
}

STORE = {
    "x": 2,
    "b": True,
    "s": Seq([1, 2, 3]),
    "ms": MSet([1, 1]),
    "m": FMap({0: 5}),
    "p": Pair(3, 4),
}


@pytest.mark.parametrize(
    "text, value",
    [
        ("1 + x * 3", 7),
        ("x - 5", -3),
        ("-x", -2),
        ("x > 1 && !b", False),
        ("x > 1 || b", True),
        ("x == 2 ? 10 : 20", 10),
        ("let y = x + 1 in y * y", 9),
        ("s ++ [4]", Seq([1, 2, 3, 4])),
        ("s[1]", 2),
        ("s[7]", 0),
        ("len(s)", 3),
        ("tail(s)", Seq([2, 3])),
        ("sum(s)", 6),
        ("mset(s)", MSet([3, 2, 1])),
        ("union(ms, {|2|})", MSet([1, 1, 2])),
        ("diff(ms, {|1, 3|})", MSet([1])),
        ("card(ms)", 2),
        ("sum(ms)", 2),
        ("m[0]", 5),
        ("m[1]", 0),
        ("m[1 := 6]", FMap({0: 5, 1: 6})),
        ("dom(m)", MSet([0])),
        ("fst(p) + snd(p)", 7),
        ("(x, b)", Pair(2, True)),
        ("{|x, x|} == {|2, 2|}", True),
        ("{x: [x]}", FMap({2: Seq([2])})),
    ],
)
def test_eval(text, value):
    assert eval_expr(parse_expr(text, ENV), STORE) == value


def test_unbound_defaults():
    assert eval_expr(parse_expr("y", {}), {}) == 0
    assert eval_expr(parse_expr("s", ENV), {}) == Seq()
    assert eval_expr(parse_expr("m", ENV), {}) == FMap()
    assert eval_expr(parse_expr("p", ENV), {}) == Pair(0, 0)
    assert eval_bool(parse_expr("b", ENV), {}) is False


@pytest.mark.parametrize(
    "text, pure",
    [
        ("low(x) ** x > 0", True),
        ("emp /\\ low(s)", True),
        ("b ==> low(x)", True),
        ("x |-> 1", False),
        ("low(x) ** sguard(1, ms)", False),
        ("exists y. low(y)", False),
    ],
)
def test_is_pure_relational(text, pure):
    assert is_pure_relational(parse_assertion(text, ENV)) is pure


@pytest.mark.parametrize(
    "text, s1, s2, holds",
    [
        ("low(x)", {"x": 1}, {"x": 1}, True),
        ("low(x)", {"x": 1}, {"x": 2}, False),
        ("x > 0", {"x": 1}, {"x": 2}, True),
        ("x > 0", {"x": 1}, {"x": 0}, False),
        ("x > 0 ==> low(y)", {"x": 0, "y": 1}, {"x": 0, "y": 2}, True),
        ("x > 0 ==> low(y)", {"x": 1, "y": 1}, {"x": 1, "y": 2}, False),
        ("x > 0 ==> low(y)", {"x": 1, "y": 1}, {"x": 0, "y": 1}, False),
        ("low(x) ** low(y)", {"x": 1, "y": 1}, {"x": 1, "y": 2}, False),
        ("emp", {}, {"x": 3}, True),
    ],
)
def test_holds_relational(text, s1, s2, holds):
    assert holds_relational(parse_assertion(text), s1, s2) is holds


def test_holds_relational_not_pure():
    with pytest.raises(TypeError):
        holds_relational(parse_assertion("x |-> 1"), {}, {})


RANDOM_ENV = {"x": INT, "y": INT, "b": BOOL}


@pytest.mark.parametrize("ty", [INT, BOOL])
def test_random_printed_expr(faker, ty):
    for i in range(50):
        ex = faker.make_expr(ty, RANDOM_ENV)
        store = faker.make_store(RANDOM_ENV)
        parsed = parse_expr(str(ex), RANDOM_ENV)
        assert eval_expr(parsed, store) == eval_expr(ex, store), str(ex)


def literal(v):
    return BoolLit(v) if isinstance(v, bool) else IntLit(v)


@pytest.mark.parametrize("ty", [INT, BOOL])
def test_random_expr_smt(faker, ty):
    pytest.importorskip("z3")
    for i in range(20):
        ex = faker.make_expr(ty, RANDOM_ENV)
        store = faker.make_store(RANDOM_ENV)
        script = Script("evaluation")
        env = {}
        for name, vty in RANDOM_ENV.items():
            sym = script.declare(name, vty)
            env[name] = (sym, vty)
            value, _ = script.expr(literal(store[name]), {})
            script.add(f"(= {sym} {value})")
        term, _ = script.expr(ex, env)
        want, _ = script.expr(literal(eval_expr(ex, store)), {})
        script.add(f"(not (= {term} {want}))")
        assert solve(script.text()) == "unsat", str(ex)
