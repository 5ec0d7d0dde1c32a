import pytest

from commcsl import errors as e
from commcsl.parser import Parser, parse_expr, parse_assertion, parse_program
from commcsl.syntax import SeqLit, MSetLit, MapLit, Var, Exists
from commcsl.typecheck import infer_expr, check_expr
from commcsl.types import INT, BOOL, PairType, SeqType, MultisetType, MapType

ENV = {
    "b": BOOL,
    "s": SeqType(INT),
    "m": MapType(INT, SeqType(INT)),
    "ms": MultisetType(PairType(INT, INT)),
    "p": PairType(INT, BOOL),
}


def raw(text):
    p = Parser(text)
    return p.expr()


@pytest.mark.parametrize(
    "text, ty",
    [
        ("1 + x", INT),
        ("x < 1 && b", BOOL),
        ("s ++ [1]", SeqType(INT)),
        ("[] ++ s", SeqType(INT)),
        ("m[0]", SeqType(INT)),
        ("m[0 := []]", MapType(INT, SeqType(INT))),
        ("dom(m)", MultisetType(INT)),
        ("snd(p)", BOOL),
        ("card(ms)", INT),
        ("union({||}, ms)", MultisetType(PairType(INT, INT))),
        ("mset(s)", MultisetType(INT)),
        ("sum(s) + len(s)", INT),
        ("tail(s)", SeqType(INT)),
        ("b ? [] : s", SeqType(INT)),
        ("let q = (1, [2]) in snd(q)", SeqType(INT)),
        ("{0: true}", MapType(INT, BOOL)),
        ("{||} == ms", BOOL),
    ],
)
def test_infer(text, ty):
    assert infer_expr(raw(text), ENV)[1] == ty


@pytest.mark.parametrize(
    "text, ty",
    [
        ("{}", MapType(INT, INT)),
        ("[]", SeqType(INT)),
        ("{||}", MultisetType(INT)),
    ],
)
def test_empty_literal_default(text, ty):
    assert infer_expr(raw(text))[1] == ty


def test_empty_literal_checked():
    ty = MapType(INT, BOOL)
    rv = check_expr(raw("{}"), {}, ty)
    assert isinstance(rv, MapLit)
    assert rv.ty == ty
    rv = check_expr(raw("[[]]"), {}, SeqType(SeqType(BOOL)))
    assert isinstance(rv, SeqLit)
    assert rv.items[0].ty == SeqType(BOOL)


def test_var_elaborated():
    rv = parse_expr("s", ENV)
    assert isinstance(rv, Var)
    assert rv.ty == SeqType(INT)


@pytest.mark.parametrize(
    "text",
    [
        "1 + b",
        "b < 1",
        "x && b",
        "s ++ 1",
        "1 ++ 2",
        "x[0]",
        "s[0 := 1]",
        "dom(s)",
        "len(ms)",
        "sum(ms)",
        "union(s, s)",
        "[1, true]",
        "b ? 1 : s",
        "1 == b",
    ],
)
def test_errors(text):
    with pytest.raises(e.TypeCheckError):
        parse_expr(text, ENV)


def test_error_reports_expr():
    with pytest.raises(e.TypeCheckError) as excinfo:
        parse_expr("1 + b", ENV)
    assert excinfo.value.expr
    assert "b" in excinfo.value.expr


def test_assertion_guards():
    a = parse_assertion("sguard(1, ms) ** uguard(A, s)", ENV)
    assert a is not None
    with pytest.raises(e.TypeCheckError):
        parse_assertion("sguard(1, s)", ENV)
    with pytest.raises(e.TypeCheckError):
        parse_assertion("uguard(A, ms)", ENV)


def test_exists_type_from_env():
    a = parse_assertion("exists s. s == [1]", ENV)
    assert isinstance(a, Exists)
    assert a.ty == SeqType(INT)
    a = parse_assertion("exists y. y == 1", ENV)
    assert a.ty == INT


def test_program_declarations():
    cmd = parse_program("var m : Map[Int, Int]\nm := m[1 := 2]\nx := m[1]")
    assert cmd is not None
    with pytest.raises(e.TypeCheckError):
        parse_program("var m : Map[Int, Int]\nm := 1")
    with pytest.raises(e.TypeCheckError):
        parse_program("if (1) { skip }")


def test_redeclared():
    with pytest.raises(e.ParseError):
        parse_program("var m : Int\nvar m : Bool\n")


def test_mset_literal_elaborated():
    rv = check_expr(MSetLit(()), {}, MultisetType(BOOL))
    assert rv.ty == MultisetType(BOOL)
