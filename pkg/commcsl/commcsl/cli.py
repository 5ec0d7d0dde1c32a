"""
Command line front end.

Exit codes: 0 if everything holds (accepted, secure), 1 if something was
refuted with a witness, 2 if the result is unknown or truncated, 3 for usage
and input errors.
"""

# Copyright (C) 2022 The CommCSL Team

import os
import sys
import json
import logging
from argparse import ArgumentParser, Namespace
from typing import Any, Callable, Dict, List, NoReturn, Optional, Sequence

from . import errors as e
from ._enums import Mode, NIVerdict, OutlineVerdict, Status, Verdict
from .bounds import Domain, ExploreBounds, parse_int_range
from .types import INT
from .values import Value
from .syntax import free_vars, mod_set
from .parser import parse_expr
from .evaluate import eval_expr
from .resource import ResourceSpec, check_validity, load_specs
from .outline import Outline, load_outline, read_text
from .semantics import PlainState, explore, parse_schedule, run, trace_logger
from .checker import check_outline
from .oracle import check_ni, ni_spec
from .corpus import run_corpus
from .smtlib import obligation_scripts, solve
from .version import __version__

logger = logging.getLogger("commcsl.cli")

EXIT_OK = 0
EXIT_REFUTED = 1
EXIT_UNKNOWN = 2
EXIT_ERROR = 3

_VERDICT_EXIT = {
    Verdict.HOLDS: EXIT_OK,
    Verdict.FAILS: EXIT_REFUTED,
    Verdict.UNKNOWN: EXIT_UNKNOWN,
}

_NI_EXIT = {
    NIVerdict.SECURE: EXIT_OK,
    NIVerdict.LEAK: EXIT_REFUTED,
    NIVerdict.TRUNCATED: EXIT_UNKNOWN,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        opt = parse_cmdline(argv)
    except _UsageError as ex:
        print(f"commcsl: {ex}", file=sys.stderr)
        return EXIT_ERROR

    setup_logging(opt)
    try:
        code, report, text = opt.command(opt)
    except e.Error as ex:
        logger.debug("command failed", exc_info=True)
        print(f"commcsl: error: {ex}", file=sys.stderr)
        return EXIT_ERROR

    if opt.json:
        output = json.dumps(report, sort_keys=True, indent=2)
    else:
        output = text
    if opt.out and opt.subcommand != "emit-smt":
        try:
            with open(opt.out, "w", encoding="utf-8") as f:
                f.write(output + "\n")
        except OSError as ex:
            print(f"commcsl: can't write {opt.out}: {ex}", file=sys.stderr)
            return EXIT_ERROR
    else:
        print(output)
    return code


def setup_logging(opt: Namespace) -> None:
    if opt.loglevel:
        loglevel = getattr(logging, opt.loglevel.upper())
        logging.basicConfig(
            level=loglevel, format="%(asctime)s %(levelname)s %(message)s"
        )
        logging.getLogger("commcsl").setLevel(loglevel)

    if opt.trace:
        handler = logging.FileHandler(opt.trace, mode="w", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(message)s"))
        trace_logger.addHandler(handler)
        trace_logger.setLevel(logging.DEBUG)
        trace_logger.propagate = False


Result = Any  # (exit code, json report, text report)


# Subcommands


def cmd_check_spec(opt: Namespace) -> Result:
    specs = load_specs([opt.file], read_text)
    domain = get_domain(opt, Domain())
    reports = [
        check_validity(spec, domain, workers=opt.workers)
        for spec in specs.values()
    ]
    verdict = Verdict.combine(r.verdict for r in reports)
    lines = []
    for r in reports:
        lines.append(f"spec {r.spec}: {r.verdict.value}")
        for o in r.obligations:
            line = f"  {o.name}: {o.verdict.value}"
            if o.counterexample is not None:
                ce = ", ".join(f"{k}={v}" for k, v in o.counterexample.items())
                line += f" ({ce})"
            elif o.note:
                line += f" ({o.note})"
            lines.append(line)
    report = {"verdict": verdict.value, "specs": [r.to_json() for r in reports]}
    return _VERDICT_EXIT[verdict], report, "\n".join(lines)


def cmd_verify(opt: Namespace) -> Result:
    outline = load_outline(opt.file)
    domain = get_domain(opt, outline)
    rv = check_outline(outline, domain, opt.mode, workers=opt.workers)
    lines = [f"{rv.source}: {rv.verdict.value}"]
    for p in rv.points:
        mark = "" if p.exact else " (bounded)"
        line = f"  line {p.line}: {p.rule}: {p.verdict.value}{mark}"
        if p.note:
            line += f": {p.note}"
        lines.append(line)

    if rv.verdict is OutlineVerdict.REJECT:
        fails = any(p.verdict is Verdict.FAILS for p in rv.points)
        code = EXIT_REFUTED if fails else EXIT_UNKNOWN
    else:
        code = EXIT_OK
    return code, rv.to_json(opt.timing), "\n".join(lines)


def cmd_run(opt: Namespace) -> Result:
    outline = load_outline(opt.file)
    bounds = get_explore(opt, outline)
    state = initial_state(outline, opt.set)
    schedule = parse_schedule(opt.schedule or "")
    rv = run(outline.command, state, schedule, bounds.max_steps)
    status = rv.config.status
    if status is Status.DONE:
        code = EXIT_OK
    elif status is Status.ABORTED:
        code = EXIT_REFUTED
    else:
        code = EXIT_UNKNOWN
    text = f"{status.value} after {rv.steps} steps"
    if rv.config.state is not None:
        text += f"\n{json.dumps(rv.config.state.to_json(), sort_keys=True)}"
    return code, rv.to_json(), text


def cmd_explore(opt: Namespace) -> Result:
    outline = load_outline(opt.file)
    bounds = get_explore(opt, outline)
    state = initial_state(outline, opt.set)
    rv = explore(outline.command, state, bounds, workers=opt.workers)
    if rv.aborted:
        code = EXIT_REFUTED
    elif rv.truncated:
        code = EXIT_UNKNOWN
    else:
        code = EXIT_OK
    lines = [
        f"{len(rv.terminals)} terminal states, {rv.configs} configurations"
        + (", truncated" if rv.truncated else "")
        + (", some runs abort" if rv.aborted else "")
    ]
    for s in sorted(rv.terminals):
        lines.append(json.dumps(s.to_json(), sort_keys=True))
    return code, rv.to_json(), "\n".join(lines)


def cmd_oracle(opt: Namespace) -> Result:
    outline = load_outline(opt.file)
    spec = ni_spec(outline, get_domain(opt, outline), get_explore(opt, outline))
    rv = check_ni(spec, workers=opt.workers)
    text = f"{rv.verdict.value} ({rv.runs} initial stores)"
    if rv.note:
        text += f": {rv.note}"
    if rv.witness is not None:
        text += "\n" + json.dumps(rv.witness.to_json(), sort_keys=True, indent=2)
    return _NI_EXIT[rv.verdict], rv.to_json(), text


def cmd_corpus(opt: Namespace) -> Result:
    rv = run_corpus(opt.pattern, opt.corpus_dir, workers=opt.workers)
    code = EXIT_OK if rv.passed else EXIT_REFUTED
    return code, rv.to_json(), rv.table()


def cmd_emit_smt(opt: Namespace) -> Result:
    specs: Dict[str, ResourceSpec]
    if opt.file.endswith(".ccsl"):
        specs = load_outline(opt.file).specs
    else:
        specs = load_specs([opt.file], read_text)

    outdir = opt.out or "smt"
    try:
        os.makedirs(outdir, exist_ok=True)
    except OSError as ex:
        raise e.InterfaceError(f"can't create {outdir}: {ex.strerror}")

    scripts = [s for spec in specs.values() for s in obligation_scripts(spec)]
    results: Dict[str, Optional[str]] = {}
    for script in scripts:
        path = os.path.join(outdir, script.name)
        with open(path, "w", encoding="utf-8") as f:
            f.write(script.text)
        results[script.name] = solve(script.text) if opt.solve else None

    lines = [f"{len(scripts)} scripts written to {outdir}"]
    code = EXIT_OK
    if opt.solve:
        answers = set(results.values())
        if "sat" in answers:
            code = EXIT_REFUTED
        elif answers - {"unsat"}:
            code = EXIT_UNKNOWN
        lines.extend(f"  {k}: {v}" for k, v in results.items())
    report = {"directory": outdir, "scripts": results}
    return code, report, "\n".join(lines)


# Helpers


def get_domain(opt: Namespace, base: Any) -> Domain:
    """Return the domain of *base* (an outline or a domain) with the flags."""
    kwargs: Dict[str, Optional[int]] = {
        "heap_max": opt.heap_max,
        "container_max": opt.container_max,
    }
    if opt.int_range:
        kwargs["int_lo"], kwargs["int_hi"] = parse_int_range(opt.int_range)
    if isinstance(base, Outline):
        return base.get_domain(**kwargs)
    values = {k: v for k, v in kwargs.items() if v is not None}
    return base._replace(**values).check()  # type: ignore[no-any-return]


def get_explore(opt: Namespace, outline: Outline) -> ExploreBounds:
    return outline.get_explore(
        max_steps=opt.max_steps, max_configs=opt.max_configs
    )


def initial_state(outline: Outline, assignments: List[str]) -> PlainState:
    """
    Return the initial state of a program.

    Every variable has the default value of its type unless assigned by
    a ``NAME=EXPR`` item of *assignments*.
    """
    cmd = outline.command
    names = set(free_vars(cmd)) | mod_set(cmd) | set(outline.decls)
    store: Dict[str, Value] = {
        n: outline.decls.get(n, INT).default() for n in names
    }
    for item in assignments:
        name, sep, text = item.partition("=")
        name = name.strip()
        if not sep or not name:
            raise e.InterfaceError(f"bad assignment {item!r}, expected NAME=EXPR")
        expr = parse_expr(text, outline.decls, "--set")
        store[name] = eval_expr(expr, {})
    return PlainState(store)


class _UsageError(Exception):
    pass


class _ArgumentParser(ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise _UsageError(message)


def parse_cmdline(argv: Optional[Sequence[str]] = None) -> Namespace:
    parser = _ArgumentParser(prog="commcsl", description=__doc__)
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )

    common = ArgumentParser(add_help=False)
    common.add_argument(
        "--loglevel",
        default=None,
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="level to log at [default: no log]",
    )
    common.add_argument(
        "--json", action="store_true", help="print the report as JSON"
    )
    common.add_argument(
        "--out", metavar="PATH", help="write the report to PATH"
    )
    common.add_argument(
        "--workers",
        type=int,
        default=None,
        help="number of worker threads [default: $COMMCSL_WORKERS or 1]",
    )
    common.add_argument(
        "--trace",
        metavar="PATH",
        help="dump the visited configurations as JSON lines to PATH",
    )

    bounds = ArgumentParser(add_help=False)
    bounds.add_argument(
        "--int-range", metavar="LO..HI", help="range of the enumerated integers"
    )
    bounds.add_argument(
        "--heap-max", type=int, metavar="N", help="maximum cells in a heap"
    )
    bounds.add_argument(
        "--container-max",
        type=int,
        metavar="N",
        help="maximum size of sequences, multisets and maps",
    )

    explore_ = ArgumentParser(add_help=False)
    explore_.add_argument(
        "--max-steps", type=int, metavar="N", help="maximum schedule length"
    )
    explore_.add_argument(
        "--max-configs",
        type=int,
        metavar="N",
        help="maximum number of configurations explored",
    )
    explore_.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="NAME=EXPR",
        help="initial value of a variable (can be repeated)",
    )

    sub = parser.add_subparsers(dest="subcommand", metavar="COMMAND")
    sub.required = True

    def add(
        name: str, fn: Callable[[Namespace], Result], text: str, *parents: Any
    ) -> ArgumentParser:
        p = sub.add_parser(
            name, help=text, description=text, parents=[common, *parents]
        )
        p.set_defaults(command=fn)
        return p

    p = add("check-spec", cmd_check_spec, "check a resource specification", bounds)
    p.add_argument("file", help="the .cspec file to check")

    p = add("verify", cmd_verify, "check a proof outline", bounds)
    p.add_argument("file", help="the .ccsl file to check")
    p.add_argument(
        "--mode",
        default=Mode.BOUNDED.value,
        choices=[m.value for m in Mode],
        help="how to discharge entailments [default: bounded]",
    )
    p.add_argument(
        "--timing", action="store_true", help="report the time per point"
    )

    p = add("run", cmd_run, "execute a program once", explore_)
    p.add_argument("file", help="the .ccsl file to run")
    p.add_argument(
        "--schedule",
        metavar="LR...",
        help="choices at parallel compositions, then alternate",
    )

    p = add("explore", cmd_explore, "enumerate the final states", explore_)
    p.add_argument("file", help="the .ccsl file to explore")

    p = add(
        "oracle", cmd_oracle, "check non-interference", bounds, explore_
    )
    p.add_argument("file", help="the .ccsl file with an ni directive")

    p = add("corpus", cmd_corpus, "check the regression corpus")
    p.add_argument(
        "pattern", nargs="?", default="*", help="entries to check [default: all]"
    )
    p.add_argument(
        "--corpus-dir",
        default=None,
        help="the corpus directory [default: $COMMCSL_CORPUS or ./corpus]",
    )

    p = add("emit-smt", cmd_emit_smt, "export the obligations to SMT-LIB")
    p.add_argument("file", help="a .cspec file, or a .ccsl file using specs")
    p.add_argument(
        "--solve",
        action="store_true",
        help="run the scripts with z3 (requires the smt extra)",
    )

    opt = parser.parse_args(argv)
    for name in ("workers", "heap_max", "container_max"):
        value = getattr(opt, name, None)
        if value is not None and value < 1:
            parser.error(f"--{name.replace('_', '-')} must be positive")
    return opt
