import os

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))


def test_typing_example(mypy):
    cp = mypy.run_on_file(os.path.join(HERE, "typing_example.py"))
    errors = cp.stdout.decode("utf8", "replace").splitlines()
    assert not errors
    assert cp.returncode == 0


@pytest.mark.parametrize(
    "expr, type",
    [
        (
            "commcsl.check_outline(commcsl.parse_outline(''))",
            "commcsl.checker.OutlineReport",
        ),
        (
            "commcsl.check_outline(commcsl.parse_outline('')).points[0]",
            "commcsl.checker.PointResult",
        ),
        (
            "commcsl.parse_program('skip')",
            "commcsl.syntax.Command",
        ),
        (
            "commcsl.classify(commcsl.parse_assertion('true'), 'unary')",
            "commcsl.classify.Classification",
        ),
        (
            "HopcroftKarp({1: {'a'}}).maximum_matching()",
            "Dict[int, str]",
        ),
        (
            "perfect_matching([1], [2], lambda x, y: True)",
            "Optional[List[Tuple[int, int]]]",
        ),
        (
            "map_ordered(str, [1, 2])",
            "List[str]",
        ),
    ],
)
def test_reveal(expr, type, mypy):
    ignore = (
        "" if type.startswith("Optional") else "# type: ignore[assignment]"
    )
    src = f"""\
from typing import Dict, List, Optional, Tuple
import commcsl
from commcsl._workers import map_ordered
from commcsl.matching import HopcroftKarp, perfect_matching

obj = {expr}
reveal_type(obj)

ref: {type} = None  {ignore}
reveal_type(ref)
"""
    cp = mypy.run_on_source(src)
    types = mypy.revealed(cp)
    assert len(types) == 2, types
    assert types[0] == types[1]
