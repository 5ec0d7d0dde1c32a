"""
Checking of proof outlines.

An outline is a program annotated with assertions between its statements
and with tags choosing the proof rule applied to the following statement.
Each (pre, command, post) triple found is checked as an instance of its
rule: premises and side conditions are decided syntactically where
possible, otherwise within the bounds of a finite domain.
"""

# Copyright (C) 2022 The CommCSL Team

import time
import logging
from typing import Any, Dict, FrozenSet, List, NamedTuple, Optional, Sequence
from typing import Set, Tuple, Union

from . import errors as e
from ._enums import Mode, OutlineVerdict, Property, Verdict
from .bounds import Domain
from .heaps import ExtendedHeap, ONE
from .types import Type, MultisetType, SeqType
from .syntax import Expr, Var, UnOp, BinOp, MSetLit, SeqLit, Call, Command
from .syntax import Assign, Read, Write, Alloc, Skip, If, While, Par, Atomic
from .syntax import Assertion, Emp, Pure, Star, Exists, SGuard, UGuard, Low
from .syntax import AllPre, And, stars, star_conjuncts, seq, free_vars
from .syntax import free_vars_all, mod_set, contains, fresh_name, subst
from .evaluate import Store, eval_expr, is_pure_relational
from .assertions import StatePair, sat_pair
from .models import assertion_env, pair_models
from .classify import Classification, classify
from .entailment import check_entailment
from .resource import ResourceSpec, ValidityReport, check_validity
from .smtlib import solve
from .outline import Outline, OutlineItem, OStmt, Point, ShareTag, UnshareTag
from .outline import AtomicTag, FrameTag, ExistsTag, RuleTag, ResourceContext

logger = logging.getLogger(__name__)

Tag = Union[AtomicTag, FrameTag, ExistsTag, RuleTag]

_BASIC_RULES = {
    Assign: "Assign",
    Read: "Read",
    Write: "Write",
    Alloc: "New",
    Skip: "Skip",
}


class SideCondition(NamedTuple):
    """
    A premise or side condition of a rule instance, with its verdict.

    `exact` is `!False` if the verdict was found by a bounded search.
    """

    condition: str
    verdict: Verdict
    witness: Optional[StatePair] = None
    note: str = ""
    exact: bool = True

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "condition": self.condition,
            "verdict": self.verdict.value,
            "exact": self.exact,
        }
        if self.witness is not None:
            rv["witness"] = self.witness.to_json()
        if self.note:
            rv["note"] = self.note
        return rv


class RuleInstance(NamedTuple):
    """
    The application of a proof rule to a triple.

    :param frame: the framed assertion of a ``Frame`` instance.
    :param variable: the variable of an ``Exists`` instance, the fresh
        variable naming the resource value of an atomic instance.
    :param parts: the triples of the threads of a ``Par`` instance.
    :param names: the variables of the recorded guard arguments and of the
        action argument of an atomic instance.
    """

    rule: str
    pre: Assertion
    command: Command
    post: Assertion
    context: Optional[ResourceContext] = None
    line: int = 0
    frame: Optional[Assertion] = None
    variable: Optional[str] = None
    parts: Tuple[Tuple[Assertion, Command, Assertion], ...] = ()
    names: FrozenSet[str] = frozenset()


class PointResult(NamedTuple):
    """The outcome of the check of a rule instance of an outline."""

    rule: str
    line: int
    verdict: Verdict
    conditions: Tuple[SideCondition, ...] = ()
    counterexample: Optional[StatePair] = None
    note: str = ""
    elapsed: float = 0.0

    @property
    def exact(self) -> bool:
        return all(c.exact for c in self.conditions)

    def to_json(self, timing: bool = False) -> Dict[str, Any]:
        rv: Dict[str, Any] = {
            "rule": self.rule,
            "line": self.line,
            "verdict": self.verdict.value,
            "conditions": [c.to_json() for c in self.conditions],
        }
        if self.counterexample is not None:
            rv["counterexample"] = self.counterexample.to_json()
        if self.note:
            rv["note"] = self.note
        if timing:
            rv["elapsed"] = round(self.elapsed, 6)
        return rv


class OutlineReport(NamedTuple):
    """The outcome of `check_outline()`."""

    source: str
    verdict: OutlineVerdict
    points: List[PointResult]
    domain: Domain

    @property
    def failures(self) -> List[PointResult]:
        return [p for p in self.points if p.verdict is not Verdict.HOLDS]

    def to_json(self, timing: bool = False) -> Dict[str, Any]:
        return {
            "source": self.source,
            "verdict": self.verdict.value,
            "domain": self.domain.to_json(),
            "points": [p.to_json(timing) for p in self.points],
        }


# Side conditions


class SideConditions:
    """
    Evaluate the side conditions of rule instances.

    Classifications and validity reports are cached: the same invariant is
    usually classified many times in an outline.
    """

    def __init__(
        self,
        domain: Domain = Domain(),
        env: Optional[Dict[str, Type]] = None,
        spec: Optional[ResourceSpec] = None,
        workers: Optional[int] = None,
    ):
        self.domain = domain
        self.env: Dict[str, Type] = env if env is not None else {}
        self.spec = spec
        self.workers = workers
        self._classified: Dict[
            Tuple[Assertion, Property, Optional[str]], Classification
        ] = {}
        self._validity: Dict[str, ValidityReport] = {}

    def check(self, inst: RuleInstance) -> List[SideCondition]:
        """Return the side conditions of *inst*, evaluated."""
        rv: List[SideCondition] = []
        ctx = inst.context
        mod = mod_set(inst.command)

        if inst.rule == "Frame":
            assert inst.frame is not None
            rv.append(
                self.disjoint("fv(R) # mod(c)", free_vars(inst.frame), mod)
            )
            rv.append(self.either_precise(inst.pre, inst.frame))

        elif inst.rule == "Exists":
            x = inst.variable
            assert x is not None
            fv_c = free_vars(inst.command)
            rv.append(self.disjoint(f"{x} not in fv(c)", {x}, fv_c))
            rv.append(self.classify(inst.pre, Property.UNAMBIGUOUS, x))
            if ctx is not None:
                fv_i = _context_vars(ctx)
                rv.append(self.disjoint(f"{x} not in fv(I)", {x}, fv_i))

        elif inst.rule == "Par":
            fvs = [free_vars_all(part) for part in inst.parts]
            mods = [mod_set(part[1]) for part in inst.parts]
            for i, fv in enumerate(fvs):
                for j, m in enumerate(mods):
                    if i != j:
                        rv.append(
                            self.disjoint(
                                f"fv(thread {i + 1}) # mod(thread {j + 1})", fv, m
                            )
                        )
            pres = [part[0] for part in inst.parts]
            for i in range(len(pres) - 1):
                rv.append(self.either_precise(pres[i], stars(pres[i + 1 :])))

        elif inst.rule in ("AtomicShr", "AtomicUnq"):
            xv = inst.variable
            assert xv is not None
            rv.append(self.noguard(inst.pre, "P"))
            rv.append(self.noguard(inst.post, "Q"))
            rv.append(
                self.disjoint(
                    "xs, xa, xv not in mod(c)", inst.names | {xv}, mod
                )
            )
            used = free_vars_all((inst.pre, inst.command, inst.post))
            if ctx is not None:
                used |= _context_vars(ctx)
            rv.append(self.disjoint(f"{xv} fresh", {xv}, used))

        elif inst.rule == "Share":
            assert ctx is not None
            env = dict(self.env)
            env[ctx.param] = ctx.value_type
            rv.append(self.valid(ctx.spec))
            rv.append(self.classify(ctx.invariant, Property.UNARY, env=env))
            rv.append(self.classify(ctx.invariant, Property.PRECISE, env=env))
            rv.append(
                self.classify(
                    ctx.invariant, Property.UNAMBIGUOUS, ctx.param, env=env
                )
            )

        elif inst.rule == "If2":
            rv.append(self.classify(inst.post, Property.UNARY))

        elif inst.rule == "While2":
            rv.append(self.classify(inst.pre, Property.UNARY))

        if ctx is not None and inst.rule not in ("Share", "Exists"):
            rv.append(self.disjoint("fv(I) # mod(c)", _context_vars(ctx), mod))
        return rv

    def disjoint(
        self, name: str, names: Union[Set[str], FrozenSet[str]], mod: FrozenSet[str]
    ) -> SideCondition:
        clash = sorted(set(names) & mod)
        if clash:
            return SideCondition(
                name, Verdict.FAILS, note=f"modified: {', '.join(clash)}"
            )
        return SideCondition(name, Verdict.HOLDS)

    def noguard(self, a: Assertion, label: str) -> SideCondition:
        name = f"noguard({label})"
        if contains(a, SGuard, UGuard, AllPre):
            return SideCondition(name, Verdict.FAILS, note=f"guards in {a}")
        return SideCondition(name, Verdict.HOLDS)

    def classify(
        self,
        a: Assertion,
        kind: Property,
        var: Optional[str] = None,
        env: Optional[Dict[str, Type]] = None,
    ) -> SideCondition:
        key = (a, kind, var)
        c = self._classified.get(key)
        if c is None:
            c = classify(
                a,
                kind,
                self.domain,
                var=var,
                env=env if env is not None else self.env,
                spec=self.spec,
            )
            self._classified[key] = c
        name = f"{kind.value}({a}, {var})" if var else f"{kind.value}({a})"
        return SideCondition(name, c.verdict, c.witness, c.note, c.syntactic)

    def either_precise(self, p: Assertion, r: Assertion) -> SideCondition:
        name = f"precise({p}) or precise({r})"
        c1 = self.classify(p, Property.PRECISE)
        if c1.verdict is Verdict.HOLDS:
            return c1._replace(condition=name)
        c2 = self.classify(r, Property.PRECISE)
        if c2.verdict is Verdict.HOLDS:
            return c2._replace(condition=name)
        verdict = Verdict.combine((c1.verdict, c2.verdict))
        return SideCondition(
            name,
            verdict,
            c1.witness or c2.witness,
            "; ".join(n for n in (c1.note, c2.note) if n),
            c1.exact and c2.exact,
        )

    def valid(self, spec: ResourceSpec) -> SideCondition:
        report = self._validity.get(spec.name)
        if report is None:
            report = check_validity(spec, self.domain, workers=self.workers)
            self._validity[spec.name] = report
        bad = [o.name for o in report.obligations if o.verdict is not Verdict.HOLDS]
        return SideCondition(
            f"valid({spec.name})",
            report.verdict,
            note=f"obligations not holding: {', '.join(bad)}" if bad else "",
            exact=False,
        )


def check_side_conditions(
    inst: RuleInstance,
    domain: Domain = Domain(),
    *,
    env: Optional[Dict[str, Type]] = None,
    spec: Optional[ResourceSpec] = None,
) -> List[SideCondition]:
    """
    Evaluate the side conditions of a rule instance.

    Variable conditions are decided syntactically; unary, precise and
    unambiguous assertions are decided by `~commcsl.classify.classify()`
    and may be unknown.
    """
    if spec is None and inst.context is not None:
        spec = inst.context.spec
    return SideConditions(domain, env, spec).check(inst)


def _context_vars(ctx: ResourceContext) -> FrozenSet[str]:
    return free_vars(ctx.invariant) - {ctx.param}


def strip_guards(a: Assertion) -> Assertion:
    """Drop the guard and ``allpre()`` conjuncts from *a*."""
    if isinstance(a, Star):
        parts = [strip_guards(c) for c in star_conjuncts(a)]
        return stars(p for p in parts if not isinstance(p, Emp))
    if isinstance(a, (SGuard, UGuard, AllPre)):
        return Emp()
    if isinstance(a, Exists):
        body = strip_guards(a.body)
        if a.name not in free_vars(body):
            return body
        return Exists(a.name, a.ty, body)
    return a


# Outlines


def check_outline(
    outline: Outline,
    domain: Optional[Domain] = None,
    mode: Union[Mode, str] = Mode.BOUNDED,
    *,
    workers: Optional[int] = None,
) -> OutlineReport:
    """
    Check every rule instance of a proof outline.

    If *domain* is not given the bounds pinned by the outline are used.
    Raise `OutlineError` if the outline is malformed.
    """
    if domain is None:
        domain = outline.get_domain()
    domain.check()
    checker = _OutlineChecker(outline, domain, Mode(mode), workers)
    points = checker.run()

    if any(p.verdict is not Verdict.HOLDS for p in points):
        verdict = OutlineVerdict.REJECT
    elif all(p.exact for p in points):
        verdict = OutlineVerdict.ACCEPT
    else:
        verdict = OutlineVerdict.BOUNDED_ACCEPT
    logger.info("outline %s: %s", outline.source, verdict.value)
    return OutlineReport(outline.source, verdict, points, domain)


class _OutlineChecker:
    def __init__(
        self,
        outline: Outline,
        domain: Domain,
        mode: Mode,
        workers: Optional[int],
    ):
        self.outline = outline
        self.domain = domain
        self.mode = mode
        self.env: Dict[str, Type] = outline.env
        ctx = next(iter(outline.contexts.values()), None)
        self.spec = ctx.spec if ctx is not None else None
        self.sides = SideConditions(domain, self.env, self.spec, workers)
        self.hints: Dict[str, Tuple[Expr, Expr]] = {}
        self.points: List[PointResult] = []

    def run(self) -> List[PointResult]:
        items = self.outline.items
        if not items or not isinstance(items[0], Point):
            raise self.error(1, "the program must start with an assertion")
        self.block(items, None, None, None)
        return self.points

    def error(self, line: int, msg: str) -> e.OutlineError:
        return e.OutlineError(f"{self.outline.source}:{line}: {msg}")

    # Blocks

    def block(
        self,
        items: Sequence[OutlineItem],
        pre: Optional[Assertion],
        post: Optional[Assertion],
        ctx: Optional[ResourceContext],
        line: int = 0,
    ) -> Optional[Assertion]:
        """Check a block from *pre* to *post*; return its last assertion."""
        cur = pre
        tags: List[Tag] = []
        i = 0
        while i < len(items):
            item = items[i]
            if isinstance(item, Point):
                if any(not _is_consequence(t) for t in tags):
                    raise self.error(item.line, "tag not followed by a statement")
                tags = []
                if cur is not None and cur != item.assertion:
                    self.consequence(cur, item.assertion, item.line)
                cur = item.assertion
                i += 1

            elif isinstance(item, ShareTag):
                if tags:
                    raise self.error(item.line, "tags before share")
                if cur is None:
                    raise self.error(item.line, "share without precondition")
                i, cur = self.share(items, i, cur, post, ctx)

            elif isinstance(item, UnshareTag):
                raise self.error(item.line, "unshare without share")

            elif isinstance(item, OStmt):
                if cur is None:
                    raise self.error(item.line, "statement without precondition")
                if any(_is_consequence(t) for t in tags):
                    raise self.error(
                        item.line, "consequence tag must precede an assertion"
                    )
                run = [item]
                j = i + 1
                if _is_basic(item) and not tags:
                    while (
                        j < len(items)
                        and isinstance(items[j], OStmt)
                        and _is_basic(items[j])  # type: ignore[arg-type]
                    ):
                        run.append(items[j])  # type: ignore[arg-type]
                        j += 1
                q, i = self.post_at(items, j, post, run[-1].line)
                self.statement(run, cur, q, ctx, tags)
                tags = []
                cur = q

            else:
                tags.append(item)  # type: ignore[arg-type]
                i += 1

        if any(not _is_consequence(t) for t in tags):
            raise self.error(line, "tag at the end of a block")
        if post is not None and cur is not None and cur != post:
            self.consequence(cur, post, line)
        return cur

    def post_at(
        self,
        items: Sequence[OutlineItem],
        j: int,
        post: Optional[Assertion],
        line: int,
    ) -> Tuple[Assertion, int]:
        """Return the assertion following a statement, and the next index."""
        if j < len(items):
            item = items[j]
            if isinstance(item, Point):
                return item.assertion, j + 1
        elif post is not None:
            return post, j
        raise self.error(line, "missing assertion after the statement")

    def record(
        self,
        rule: str,
        line: int,
        conditions: List[SideCondition],
        start: float,
    ) -> PointResult:
        verdict = Verdict.combine(c.verdict for c in conditions)
        witness = next(
            (
                c.witness
                for c in conditions
                if c.verdict is Verdict.FAILS and c.witness is not None
            ),
            None,
        )
        note = "; ".join(
            f"{c.condition}: {c.note or c.verdict.value}"
            for c in conditions
            if c.verdict is not Verdict.HOLDS
        )
        rv = PointResult(
            rule,
            line,
            verdict,
            tuple(conditions),
            witness,
            note,
            time.monotonic() - start,
        )
        self.points.append(rv)
        if verdict is Verdict.HOLDS:
            logger.info("line %s, %s: %s", line, rule, verdict.value)
        else:
            logger.warning("line %s, %s: %s: %s", line, rule, verdict.value, note)
        return rv

    # Entailments

    def entails(self, p: Assertion, q: Assertion, label: str) -> SideCondition:
        if (
            self.mode is Mode.SMT
            and is_pure_relational(p)
            and is_pure_relational(q)
            and not contains(q, Emp)
        ):
            return self._entails_smt(p, q, label)
        ent = check_entailment(
            p, q, self.domain, env=self.env, spec=self.spec, hints=self.hints
        )
        return SideCondition(
            label, ent.verdict, ent.counterexample, ent.note, ent.exact
        )

    def _entails_smt(self, p: Assertion, q: Assertion, label: str) -> SideCondition:
        try:
            ent = check_entailment(p, q, self.domain, Mode.SMT, env=self.env)
            answer = solve(ent.script)
        except e.NotSupportedError as ex:
            return SideCondition(label, Verdict.UNKNOWN, note=str(ex), exact=False)
        if answer == "unsat":
            return SideCondition(label, Verdict.HOLDS)
        if answer == "sat":
            return SideCondition(label, Verdict.FAILS, note="solver: sat")
        return SideCondition(
            label, Verdict.UNKNOWN, note=f"solver: {answer}", exact=False
        )

    def consequence(self, p: Assertion, q: Assertion, line: int) -> None:
        start = time.monotonic()
        self.record("Cons", line, [self.entails(p, q, f"{p} => {q}")], start)

    # Statements

    def statement(
        self,
        run: List[OStmt],
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext],
        tags: List[Tag],
    ) -> None:
        line = run[0].line
        cmd = seq(s.cmd for s in run)
        rules = [t for t in tags if isinstance(t, RuleTag)]
        atomics = [t for t in tags if isinstance(t, AtomicTag)]
        if len(rules) > 1 or len(atomics) > 1:
            raise self.error(line, "more than one rule tag on a statement")
        rule = rules[0].rule if rules else None
        atomic = atomics[0] if atomics else None

        for t in tags:
            if isinstance(t, ExistsTag):
                pre, post = self.open_exists(t, pre, post, cmd, ctx, line)
        for t in tags:
            if isinstance(t, FrameTag):
                pre, post = self.frame(t, pre, post, cmd, ctx, line)

        stmt = run[0]
        if rule is not None and not _rule_fits(rule, stmt.cmd):
            raise self.error(line, f"{rule} tag on the wrong statement")
        if atomic is not None and not isinstance(stmt.cmd, Atomic):
            raise self.error(line, "action tag on a statement not atomic")

        if _is_basic(stmt):
            self.basic(run, pre, post, ctx)
        elif isinstance(stmt.cmd, If):
            self.if_(stmt, pre, post, ctx, rule == "if-high")
        elif isinstance(stmt.cmd, While):
            self.while_(stmt, pre, post, ctx, rule == "while-high")
        elif isinstance(stmt.cmd, Par):
            self.par(stmt, pre, post, ctx)
        elif isinstance(stmt.cmd, Atomic):
            if ctx is not None:
                if atomic is None:
                    raise self.error(line, "atomic block without action tag")
                self.atomic(stmt, pre, post, ctx, atomic)
            else:
                if atomic is not None:
                    raise self.error(line, "action tag outside a share region")
                self.block(stmt.blocks[0], pre, post, None, line)
        else:
            raise TypeError(f"unexpected command: {stmt.cmd!r}")

    def open_exists(
        self,
        tag: ExistsTag,
        pre: Assertion,
        post: Assertion,
        cmd: Command,
        ctx: Optional[ResourceContext],
        line: int,
    ) -> Tuple[Assertion, Assertion]:
        start = time.monotonic()
        x = tag.name
        if not (isinstance(pre, Exists) and pre.name == x):
            raise self.error(line, f"the precondition doesn't start with exists {x}")
        inner_pre = pre.body
        if isinstance(post, Exists) and post.name == x:
            inner_post = post.body
        elif x not in free_vars(post):
            inner_post = post
        else:
            raise self.error(
                line, f"the postcondition doesn't start with exists {x}"
            )

        if pre.ty is not None:
            self.env[x] = pre.ty
        if tag.witness is not None:
            self.hints[x] = tag.witness
        inst = RuleInstance(
            "Exists", inner_pre, cmd, inner_post, ctx, line, variable=x
        )
        self.record("Exists", line, self.sides.check(inst), start)
        return inner_pre, inner_post

    def frame(
        self,
        tag: FrameTag,
        pre: Assertion,
        post: Assertion,
        cmd: Command,
        ctx: Optional[ResourceContext],
        line: int,
    ) -> Tuple[Assertion, Assertion]:
        start = time.monotonic()
        inner = []
        for a, where in ((pre, "pre"), (post, "post")):
            rest = star_conjuncts(a)
            for c in star_conjuncts(tag.frame):
                if c not in rest:
                    raise self.error(
                        line, f"frame conjunct {c} not in the {where}condition"
                    )
                rest.remove(c)
            inner.append(stars(rest))

        inst = RuleInstance(
            "Frame", inner[0], cmd, inner[1], ctx, line, frame=tag.frame
        )
        self.record("Frame", line, self.sides.check(inst), start)
        return inner[0], inner[1]

    def basic(
        self,
        run: List[OStmt],
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext],
    ) -> None:
        start = time.monotonic()
        line = run[0].line
        cmds = [s.cmd for s in run]
        cmd = seq(cmds)
        rule = _BASIC_RULES[type(cmds[0])] if len(cmds) == 1 else "Seq"
        conditions = []
        if ctx is not None:
            conditions.extend(
                self.sides.check(RuleInstance(rule, pre, cmd, post, ctx, line))
            )
        conditions.append(self.execute(cmds, pre, post, ctx))
        self.record(rule, line, conditions, start)

    def execute(
        self,
        cmds: List[Command],
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext] = None,
    ) -> SideCondition:
        """
        Check a triple of basic statements by running them on the states
        satisfying the precondition.

        Outside a share region no resource exists, so the states carry no
        guards.
        """
        label = f"{{{pre}}} {seq(cmds)} {{{post}}}"
        written: Set[str] = set()
        reads: Set[str] = set()
        for c in cmds:
            reads.update(free_vars_all(_exprs(c)) - written)
            target = getattr(c, "target", None)
            if target is not None:
                written.add(target)

        names = free_vars(pre) | (free_vars(post) - written) | reads
        types = assertion_env(And(pre, post), self.env)
        types.update(assertion_env(seq(cmds), self.env))
        env = {n: types[n] for n in names if n in types}

        ms = pair_models(
            pre, env, self.domain, self.spec, guards=ctx is not None
        )
        unknown = 0
        for sp in ms.models:
            out1 = _execute(cmds, sp.s1, sp.g1)
            out2 = _execute(cmds, sp.s2, sp.g2)
            for out in (out1, out2):
                if isinstance(out, str):
                    return SideCondition(
                        label, Verdict.FAILS, sp, f"aborts: {out}", False
                    )
            assert not isinstance(out1, str) and not isinstance(out2, str)
            after = StatePair(out1[0], out1[1], out2[0], out2[1])
            verdict = sat_pair(post, after, self.spec, self.domain, self.hints)
            if verdict is Verdict.FAILS:
                return SideCondition(
                    label,
                    Verdict.FAILS,
                    sp,
                    "the postcondition doesn't hold after execution",
                    False,
                )
            if verdict is Verdict.UNKNOWN:
                unknown += 1

        if unknown:
            return SideCondition(
                label,
                Verdict.UNKNOWN,
                note=f"{unknown} final states couldn't be decided",
                exact=False,
            )
        if not ms.complete:
            return SideCondition(label, Verdict.UNKNOWN, note=ms.note, exact=False)
        return SideCondition(label, Verdict.HOLDS, exact=False)

    def if_(
        self,
        stmt: OStmt,
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext],
        high: bool,
    ) -> None:
        start = time.monotonic()
        cmd = stmt.cmd
        assert isinstance(cmd, If)
        rule = "If2" if high else "If1"
        inst = RuleInstance(rule, pre, cmd, post, ctx, stmt.line)
        conditions = self.sides.check(inst)
        if not high:
            low = self.entails(pre, Low(cmd.cond), f"low({cmd.cond})")
            conditions.insert(0, low)
        self.record(rule, stmt.line, conditions, start)

        then, orelse = stmt.blocks
        self.block(then, And(pre, Pure(cmd.cond)), post, ctx, stmt.line)
        self.block(orelse, And(pre, Pure(_not(cmd.cond))), post, ctx, stmt.line)

    def while_(
        self,
        stmt: OStmt,
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext],
        high: bool,
    ) -> None:
        start = time.monotonic()
        cmd = stmt.cmd
        assert isinstance(cmd, While)
        rule = "While2" if high else "While1"
        inst = RuleInstance(rule, pre, cmd, post, ctx, stmt.line)
        conditions = self.sides.check(inst)
        if not high:
            low = self.entails(pre, Low(cmd.cond), f"low({cmd.cond})")
            conditions.insert(0, low)
        exit_ = And(pre, Pure(_not(cmd.cond)))
        if exit_ != post:
            conditions.append(self.entails(exit_, post, f"{exit_} => {post}"))
        self.record(rule, stmt.line, conditions, start)

        self.block(stmt.blocks[0], And(pre, Pure(cmd.cond)), pre, ctx, stmt.line)

    def par(
        self,
        stmt: OStmt,
        pre: Assertion,
        post: Assertion,
        ctx: Optional[ResourceContext],
    ) -> None:
        start = time.monotonic()
        parts = []
        for block in stmt.blocks:
            first = block[0] if block else None
            last = block[-1] if block else None
            if not (isinstance(first, Point) and isinstance(last, Point)):
                raise self.error(
                    stmt.line, "every thread must begin and end with an assertion"
                )
            cmd = seq(s.cmd for s in block if isinstance(s, OStmt))
            parts.append((first.assertion, cmd, last.assertion))

        pres = stars(p[0] for p in parts)
        posts = stars(p[2] for p in parts)
        conditions = [
            self.entails(pre, pres, f"{pre} => {pres}"),
            self.entails(posts, post, f"{posts} => {post}"),
        ]
        inst = RuleInstance(
            "Par", pres, stmt.cmd, posts, ctx, stmt.line, parts=tuple(parts)
        )
        conditions.extend(self.sides.check(inst))
        self.record("Par", stmt.line, conditions, start)

        for block, (p, _, q) in zip(stmt.blocks, parts):
            self.block(block, p, q, ctx, stmt.line)

    def atomic(
        self,
        stmt: OStmt,
        pre: Assertion,
        post: Assertion,
        ctx: ResourceContext,
        tag: AtomicTag,
    ) -> None:
        start = time.monotonic()
        line = stmt.line
        spec = ctx.spec
        action = spec.get_action(tag.action)
        assert action is not None
        shared = tag.action is None
        rule = "AtomicShr" if shared else "AtomicUnq"

        g_pre, p = self.split_guard(pre, tag.action, "pre", line)
        g_post, q = self.split_guard(post, tag.action, "post", line)
        xs = g_pre.args
        expected: Expr
        if shared:
            expected = Call("union", (xs, MSetLit((tag.arg,))))
        else:
            expected = BinOp("++", xs, SeqLit((tag.arg,)))
        same_frac = not shared or (
            isinstance(g_pre, SGuard)
            and isinstance(g_post, SGuard)
            and g_pre.frac == g_post.frac
        )
        conditions = [
            SideCondition(
                "guard update",
                Verdict.HOLDS
                if same_frac and g_post.args == expected
                else Verdict.FAILS,
                note=f"expected {_guard(g_pre, expected)}, got {g_post}",
            )
        ]
        if conditions[0].verdict is Verdict.HOLDS:
            conditions[0] = conditions[0]._replace(note="")

        cmd = stmt.cmd
        xv = tag.var or fresh_name(
            "v",
            free_vars_all((pre, post, cmd)) | _context_vars(ctx) | set(self.env),
        )
        self.env[xv] = spec.value_type
        inst = RuleInstance(
            rule,
            p,
            cmd,
            q,
            ctx,
            line,
            variable=xv,
            names=free_vars(xs) | free_vars(tag.arg),
        )
        conditions.extend(self.sides.check(inst))
        self.record(rule, line, conditions, start)

        value = Var(xv, ty=spec.value_type)
        new = subst(action.body, {"v": value, "arg": tag.arg})
        body_pre = _star(p, ctx.instantiate(value))
        body_post = _star(q, ctx.instantiate(new))
        self.block(stmt.blocks[0], body_pre, body_post, None, line)

    def split_guard(
        self, a: Assertion, action: Optional[str], where: str, line: int
    ) -> Tuple[Union[SGuard, UGuard], Assertion]:
        conj = star_conjuncts(a)
        if action is None:
            found = [c for c in conj if isinstance(c, SGuard)]
            what = "sguard"
        else:
            found = [
                c for c in conj if isinstance(c, UGuard) and c.action == action
            ]
            what = f"uguard({action}, ...)"
        if len(found) != 1:
            raise self.error(
                line, f"expected one {what} conjunct in the {where}condition"
            )
        guard = found[0]
        conj.remove(guard)
        return guard, stars(conj)  # type: ignore[return-value]

    def share(
        self,
        items: Sequence[OutlineItem],
        i: int,
        pre: Assertion,
        post: Optional[Assertion],
        ctx: Optional[ResourceContext],
    ) -> Tuple[int, Assertion]:
        start = time.monotonic()
        tag = items[i]
        assert isinstance(tag, ShareTag)
        line = tag.line
        if ctx is not None:
            raise self.error(line, "nested share region")
        rc = self.outline.contexts.get(tag.context)
        if rc is None:
            raise self.error(line, f"unknown resource context {tag.context}")

        j = i + 1
        while j < len(items) and not isinstance(items[j], UnshareTag):
            if isinstance(items[j], ShareTag):
                raise self.error(line, "nested share region")
            j += 1
        if j == len(items):
            raise self.error(line, "share without unshare")
        region = items[i + 1 : j]
        first = region[0] if region else None
        last = region[-1] if region else None
        if not (
            len(region) >= 2
            and isinstance(first, Point)
            and isinstance(last, Point)
        ):
            raise self.error(
                line, "a share region must begin and end with an assertion"
            )
        q_out, k = self.post_at(items, j + 1, post, items[j].line)  # type: ignore
        p_in = first.assertion
        q_in = last.assertion
        spec = rc.spec
        vt = spec.value_type

        cmd = seq(s.cmd for s in region if isinstance(s, OStmt))
        inst = RuleInstance("Share", p_in, cmd, q_in, rc, line)
        conditions = self.sides.check(inst)

        # The guards are given out empty.
        rest = star_conjuncts(p_in)
        missing = []
        for g in _initial_guards(spec):
            if g in rest:
                rest.remove(g)
            else:
                missing.append(str(g))
        conditions.append(
            SideCondition(
                "initial guards",
                Verdict.FAILS if missing else Verdict.HOLDS,
                note=f"missing: {', '.join(missing)}" if missing else "",
            )
        )
        p = stars(rest)

        avoid = free_vars_all((pre, p_in, q_in, q_out, cmd)) | set(self.env)
        x = fresh_name("x", avoid)
        xvar = Var(x, ty=vt)
        inv = _star(rc.instantiate(xvar), Low(rc.alpha(xvar)))
        shared = Exists(x, vt, _star(inv, p))
        conditions.append(self.entails(pre, shared, f"{pre} => {shared}"))

        q = strip_guards(q_in)
        final = q
        for g in _final_guards(spec, avoid):
            final = _star(final, g)
        conditions.append(self.entails(q_in, final, f"{q_in} => {final}"))

        unshared = Exists(x, vt, _star(inv, q))
        conditions.append(self.entails(unshared, q_out, f"{unshared} => {q_out}"))
        self.record("Share", line, conditions, start)

        self.block(region, p_in, q_in, rc, line)
        return k, q_out


def _is_basic(item: OStmt) -> bool:
    return isinstance(item.cmd, (Assign, Read, Write, Alloc, Skip))


def _is_consequence(tag: Tag) -> bool:
    return isinstance(tag, RuleTag) and tag.rule == "consequence"


def _rule_fits(rule: str, cmd: Command) -> bool:
    if rule.startswith("if-"):
        return isinstance(cmd, If)
    if rule.startswith("while-"):
        return isinstance(cmd, While)
    return False


def _not(cond: Expr) -> Expr:
    return UnOp("!", cond)


def _star(a: Assertion, b: Assertion) -> Assertion:
    if isinstance(a, Emp):
        return b
    if isinstance(b, Emp):
        return a
    return Star(a, b)


def _guard(g: Union[SGuard, UGuard], args: Expr) -> Assertion:
    if isinstance(g, SGuard):
        return SGuard(g.frac, args)
    return UGuard(g.action, args)


def _initial_guards(spec: ResourceSpec) -> List[Assertion]:
    rv: List[Assertion] = []
    if spec.shared is not None:
        ty = MultisetType(spec.shared.arg_type)
        rv.append(SGuard(ONE, MSetLit((), ty=ty)))
    for name, act in spec.unique.items():
        rv.append(UGuard(name, SeqLit((), ty=SeqType(act.arg_type))))
    return rv


def _final_guards(spec: ResourceSpec, avoid: FrozenSet[str]) -> List[Assertion]:
    rv: List[Assertion] = []
    if spec.shared is not None:
        ty: Type = MultisetType(spec.shared.arg_type)
        s = fresh_name("s", avoid)
        var = Var(s, ty=ty)
        rv.append(Exists(s, ty, Star(SGuard(ONE, var), AllPre(None, var))))
    for name, act in spec.unique.items():
        ty = SeqType(act.arg_type)
        s = fresh_name(f"s_{name}", avoid)
        var = Var(s, ty=ty)
        rv.append(Exists(s, ty, Star(UGuard(name, var), AllPre(name, var))))
    return rv


def _exprs(c: Command) -> List[Expr]:
    if isinstance(c, (Assign, Alloc)):
        return [c.value]
    if isinstance(c, Read):
        return [c.addr]
    if isinstance(c, Write):
        return [c.addr, c.value]
    return []


def _execute(
    cmds: List[Command], s: Store, g: ExtendedHeap
) -> Union[str, Tuple[Store, ExtendedHeap]]:
    """
    Run basic statements on a store and an extended heap.

    Return the final state, or the reason of the abort. Writing needs the
    whole permission on the location.
    """
    store = dict(s)
    perm = dict(g.perm)
    for c in cmds:
        if isinstance(c, Assign):
            store[c.target] = eval_expr(c.value, store)
        elif isinstance(c, Read):
            loc = eval_expr(c.addr, store)
            if loc not in perm:
                return f"no permission to read location {loc}"
            store[c.target] = perm[loc][1]  # type: ignore[index]
        elif isinstance(c, Write):
            loc = eval_expr(c.addr, store)
            if loc not in perm:
                return f"no permission to write location {loc}"
            frac = perm[loc][0]  # type: ignore[index]
            if frac != ONE:
                return f"only {frac} permission to write location {loc}"
            perm[loc] = (ONE, eval_expr(c.value, store))  # type: ignore[index]
        elif isinstance(c, Alloc):
            loc = 0
            while loc in perm:
                loc += 1
            perm[loc] = (ONE, eval_expr(c.value, store))
            store[c.target] = loc
    return store, ExtendedHeap(perm, g.shared, g.unique)
