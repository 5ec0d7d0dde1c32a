# flake8: builtins=reveal_type

from __future__ import annotations

from typing import Dict, List, Optional

import commcsl
from commcsl import Domain, ExploreBounds, NIVerdict, OutlineVerdict, Verdict
from commcsl.checker import OutlineReport
from commcsl.matching import HopcroftKarp, perfect_matching
from commcsl.oracle import NIResult


def verify(text: str, domain: Optional[Domain] = None) -> OutlineReport:
    outline = commcsl.parse_outline(text, "example.ccsl")
    return commcsl.check_outline(outline, domain, "bounded", workers=2)


def failing_lines(report: OutlineReport) -> List[int]:
    return [p.line for p in report.points if p.verdict is Verdict.FAILS]


def oracle(text: str) -> NIResult:
    spec = commcsl.NISpec(
        commcsl.parse_program(text),
        {"l": (0, 1)},
        {"h": (0, 1, 2)},
        ("y",),
        ExploreBounds(max_steps=100),
    )
    return commcsl.check_ni(spec)


def summary(text: str) -> Dict[str, str]:
    report = verify(text, Domain(int_lo=0, int_hi=1))
    result = oracle(text)
    rv = {"outline": report.verdict.value, "oracle": result.verdict.value}
    if report.verdict is OutlineVerdict.REJECT:
        rv["lines"] = ", ".join(map(str, failing_lines(report)))
    if result.verdict is NIVerdict.LEAK and result.witness:
        rv["leaks"] = result.witness.variable
    return rv


def pairs(xs: List[int], ys: List[int]) -> Dict[int, int]:
    m = perfect_matching(xs, ys, lambda x, y: x <= y)
    if m is None:
        graph = {x: {y for y in ys if x <= y} for x in xs}
        return HopcroftKarp(graph).maximum_matching()
    return dict(m)
