"""
Small-step operational semantics with explicit scheduling.

The nondeterminism of the parallel composition is resolved by a sequence of
`Side` choices, consumed at each parallel composition where both threads can
still step. Allocation deterministically picks the lowest free location.
"""

# Copyright (C) 2022 The CommCSL Team

import json
import logging
from itertools import cycle
from typing import Any, Callable, Dict, FrozenSet, Iterable, Iterator, List
from typing import Mapping, NamedTuple, Optional, Sequence, Tuple, Union

from . import errors as e
from ._compat import Protocol
from ._enums import Side, Status
from ._workers import WorkerPool
from .bounds import ExploreBounds, DEFAULT_MAX_STEPS, get_workers
from .values import Value, sort_key, to_json
from .syntax import Command, Assign, Read, Write, Alloc, Skip, Compose, If
from .syntax import While, Par, Atomic, SKIP
from .evaluate import eval_expr, eval_bool

logger = logging.getLogger(__name__)
trace_logger = logging.getLogger("commcsl.trace")

# Maximum number of steps of the body of an atomic block
ATOMIC_FUEL = 10_000

Schedule = Tuple[Side, ...]
Chooser = Callable[[], Side]


class PlainState:
    """
    A store and a heap, both immutable.

    The heap maps locations (non-negative integers) to values.
    """

    __slots__ = ("store", "heap", "_key", "_hash")

    def __init__(
        self,
        store: Optional[Mapping[str, Value]] = None,
        heap: Optional[Mapping[int, Value]] = None,
    ):
        self.store: Dict[str, Value] = dict(store or {})
        self.heap: Dict[int, Value] = dict(heap or {})
        self._key = (
            tuple(sorted(self.store.items())),
            tuple(sorted(self.heap.items())),
        )
        self._hash = hash(self._key)

    def __eq__(self, other: Any) -> bool:
        if not isinstance(other, PlainState):
            return False
        return self._key == other._key

    def __hash__(self) -> int:
        return self._hash

    def __lt__(self, other: "PlainState") -> bool:
        return self.sort_key() < other.sort_key()

    def __repr__(self) -> str:
        return f"<{self.__class__.__name__} {self.to_json()}>"

    def sort_key(self) -> Tuple[Any, ...]:
        return (
            tuple((k, sort_key(v)) for k, v in self._key[0]),
            tuple((k, sort_key(v)) for k, v in self._key[1]),
        )

    def assign(self, name: str, value: Value) -> "PlainState":
        store = dict(self.store)
        store[name] = value
        return PlainState(store, self.heap)

    def write(self, loc: int, value: Value) -> "PlainState":
        heap = dict(self.heap)
        heap[loc] = value
        return PlainState(self.store, heap)

    def alloc(self) -> int:
        """Return the lowest location not in the heap."""
        loc = 0
        while loc in self.heap:
            loc += 1
        return loc

    def to_json(self) -> Dict[str, Any]:
        return {
            "store": {k: to_json(v) for k, v in sorted(self.store.items())},
            "heap": {str(k): to_json(v) for k, v in sorted(self.heap.items())},
        }


class Config(NamedTuple):
    """
    An execution configuration.

    Running configurations have a command and a state, done configurations
    only the final state, aborted ones neither.
    """

    status: Status
    command: Optional[Command] = None
    state: Optional[PlainState] = None

    @classmethod
    def running(cls, command: Command, state: PlainState) -> "Config":
        if isinstance(command, Skip):
            return cls(Status.DONE, None, state)
        return cls(Status.RUNNING, command, state)

    @property
    def is_running(self) -> bool:
        return self.status is Status.RUNNING

    def to_json(self) -> Dict[str, Any]:
        rv: Dict[str, Any] = {"status": self.status.value}
        if self.command is not None:
            rv["command"] = str(self.command)
        if self.state is not None:
            rv.update(self.state.to_json())
        return rv


ABORTED = Config(Status.ABORTED)


class AtomicCallback(Protocol):
    """
    Callable receiving the atomic blocks executed by `run()`.

    It is called with the body of the block and the states before and after
    its execution.
    """

    def __call__(
        self, body: Command, before: PlainState, after: PlainState
    ) -> None:
        ...


class _Abort(Exception):
    pass


class _Diverged(Exception):
    pass


def step(
    config: Config,
    choice: Union[Side, Chooser] = Side.LEFT,
    on_atomic: Optional[AtomicCallback] = None,
) -> Config:
    """
    Perform one small step of a running configuration.

    *choice* decides which thread steps at the parallel compositions where
    both threads can step: either a fixed side or a function returning the
    side at each decision.
    """
    if not config.is_running:
        raise ValueError(f"can't step a {config.status.value} configuration")
    assert config.command is not None and config.state is not None
    choose = choice if callable(choice) else (lambda: choice)
    try:
        cmd, state = _step(config.command, config.state, choose, on_atomic)
    except _Abort:
        return ABORTED
    except _Diverged:
        logger.warning("atomic block not terminating: %s", config.command)
        return config
    return Config.running(cmd, state)


def _step(
    c: Command,
    s: PlainState,
    choose: Chooser,
    on_atomic: Optional[AtomicCallback] = None,
) -> Tuple[Command, PlainState]:
    if isinstance(c, Assign):
        return SKIP, s.assign(c.target, eval_expr(c.value, s.store))

    if isinstance(c, Read):
        loc = eval_expr(c.addr, s.store)
        if loc not in s.heap:
            raise _Abort
        return SKIP, s.assign(c.target, s.heap[loc])  # type: ignore[index]

    if isinstance(c, Write):
        loc = eval_expr(c.addr, s.store)
        if loc not in s.heap:
            raise _Abort
        assert isinstance(loc, int)
        return SKIP, s.write(loc, eval_expr(c.value, s.store))

    if isinstance(c, Alloc):
        loc = s.alloc()
        s = s.write(loc, eval_expr(c.value, s.store))
        return SKIP, s.assign(c.target, loc)

    if isinstance(c, Compose):
        if isinstance(c.first, Skip):
            return c.second, s
        first, s = _step(c.first, s, choose, on_atomic)
        return Compose(first, c.second, pos=c.pos), s

    if isinstance(c, If):
        return (c.then if eval_bool(c.cond, s.store) else c.orelse), s

    if isinstance(c, While):
        return If(c.cond, Compose(c.body, c, pos=c.pos), SKIP, pos=c.pos), s

    if isinstance(c, Par):
        left_done = isinstance(c.left, Skip)
        right_done = isinstance(c.right, Skip)
        if left_done and right_done:
            return SKIP, s
        if right_done or (not left_done and choose() is Side.LEFT):
            left, s = _step(c.left, s, choose, on_atomic)
            return Par(left, c.right, pos=c.pos), s
        right, s = _step(c.right, s, choose, on_atomic)
        return Par(c.left, right, pos=c.pos), s

    if isinstance(c, Atomic):
        after = _run_atomic(c.body, s)
        if on_atomic is not None:
            on_atomic(c.body, s, after)
        return SKIP, after

    raise TypeError(f"not a reducible command: {c!r}")


def _run_atomic(body: Command, s: PlainState) -> PlainState:
    cmd = body
    for _ in range(ATOMIC_FUEL):
        if isinstance(cmd, Skip):
            return s
        cmd, s = _step(cmd, s, lambda: Side.LEFT)
    if isinstance(cmd, Skip):
        return s
    raise _Diverged


def successors(
    command: Command, state: PlainState
) -> List[Tuple[Schedule, Config]]:
    """
    Return all the configurations reachable in one step.

    Each configuration is returned with the choices leading to it.
    """
    rv: List[Tuple[Schedule, Config]] = []
    for choices, outcome in _successors(command, state):
        if outcome is None:
            rv.append((choices, ABORTED))
        else:
            rv.append((choices, Config.running(*outcome)))
    return rv


Outcome = Optional[Tuple[Command, PlainState]]


def _successors(
    c: Command, s: PlainState
) -> Iterator[Tuple[Schedule, Outcome]]:
    if isinstance(c, Par):
        left_done = isinstance(c.left, Skip)
        right_done = isinstance(c.right, Skip)
        if left_done and right_done:
            yield (), (SKIP, s)
            return
        if not left_done:
            prefix: Schedule = () if right_done else (Side.LEFT,)
            for choices, out in _successors(c.left, s):
                if out is not None:
                    out = (Par(out[0], c.right, pos=c.pos), out[1])
                yield prefix + choices, out
        if not right_done:
            prefix = () if left_done else (Side.RIGHT,)
            for choices, out in _successors(c.right, s):
                if out is not None:
                    out = (Par(c.left, out[0], pos=c.pos), out[1])
                yield prefix + choices, out
        return

    if isinstance(c, Compose) and not isinstance(c.first, Skip):
        for choices, out in _successors(c.first, s):
            if out is not None:
                out = (Compose(out[0], c.second, pos=c.pos), out[1])
            yield choices, out
        return

    try:
        out = _step(c, s, lambda: Side.LEFT)
    except _Abort:
        yield (), None
    except _Diverged:
        yield (), (c, s)
    else:
        yield (), out


# Runs


class RunResult(NamedTuple):
    """The outcome of `run()`."""

    config: Config
    steps: int
    schedule: Schedule

    def to_json(self) -> Dict[str, Any]:
        return {
            "config": self.config.to_json(),
            "steps": self.steps,
            "schedule": "".join(str(s) for s in self.schedule),
        }


def round_robin(schedule: Iterable[Side] = ()) -> Iterator[Side]:
    """Follow *schedule*, then alternate between left and right."""
    yield from schedule
    yield from cycle((Side.LEFT, Side.RIGHT))


def parse_schedule(text: str) -> Schedule:
    """Parse a schedule string such as ``"LLR"``."""
    try:
        return tuple(_SIDES[c] for c in text.strip().upper())
    except KeyError:
        raise e.InterfaceError(
            f"bad schedule {text!r}: only L and R allowed"
        ) from None


_SIDES = {"L": Side.LEFT, "R": Side.RIGHT}


def run(
    command: Command,
    state: PlainState,
    schedule: Sequence[Side] = (),
    fuel: int = DEFAULT_MAX_STEPS,
    on_atomic: Optional[AtomicCallback] = None,
) -> RunResult:
    """
    Execute *command* from *state* following *schedule*.

    When the schedule is exhausted the threads alternate, starting from the
    left. Stop after *fuel* steps, returning a running configuration.
    """
    if fuel < 1:
        raise e.InterfaceError("the fuel must be positive")

    choices = round_robin(schedule)
    used: List[Side] = []

    def choose() -> Side:
        side = next(choices)
        used.append(side)
        return side

    config = Config.running(command, state)
    steps = 0
    _trace(config)
    while config.is_running and steps < fuel:
        config = step(config, choose, on_atomic)
        steps += 1
        _trace(config)
    logger.debug("run stopped after %s steps: %s", steps, config.status.value)
    return RunResult(config, steps, tuple(used))


def _trace(config: Config) -> None:
    if trace_logger.isEnabledFor(logging.DEBUG):
        trace_logger.debug("%s", json.dumps(config.to_json(), sort_keys=True))


# Exploration


class Exploration(NamedTuple):
    """
    The outcome of `explore()`.

    `schedules` maps each terminal state, and `abort_schedule` the first
    abort found, to a schedule reaching it.
    """

    terminals: FrozenSet[PlainState]
    aborted: bool
    truncated: bool
    configs: int
    schedules: Dict[PlainState, Schedule]
    abort_schedule: Optional[Schedule] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            "terminals": [s.to_json() for s in sorted(self.terminals)],
            "aborted": self.aborted,
            "truncated": self.truncated,
            "configs": self.configs,
        }


Node = Tuple[Command, PlainState]


def explore(
    command: Command,
    state: PlainState,
    bounds: ExploreBounds = ExploreBounds(),
    *,
    workers: Optional[int] = None,
) -> Exploration:
    """
    Enumerate the final states of all the interleavings of *command*.

    The configurations are visited breadth first, each one once. The result
    is truncated if some configuration at *bounds.max_steps* steps was still
    running, or if more than *bounds.max_configs* configurations were found.
    """
    bounds.check()
    start = Config.running(command, state)
    if not start.is_running:
        assert start.state is not None
        return Exploration(
            frozenset([start.state]), False, False, 1, {start.state: ()}
        )

    root: Node = (command, state)
    paths: Dict[Node, Schedule] = {root: ()}
    frontier: List[Node] = [root]
    terminals: Dict[PlainState, Schedule] = {}
    abort_schedule: Optional[Schedule] = None
    truncated = False
    depth = 0

    def expand(node: Node) -> List[Tuple[Schedule, Config]]:
        return successors(*node)

    with WorkerPool(get_workers(workers), "commcsl-explore") as pool:
        while frontier:
            if depth >= bounds.max_steps:
                truncated = True
                break
            depth += 1
            results = pool.map(expand, frontier)
            new: List[Node] = []
            for node, succs in zip(frontier, results):
                prefix = paths[node]
                for choices, config in succs:
                    path = prefix + choices
                    _trace(config)
                    if config.status is Status.ABORTED:
                        if abort_schedule is None:
                            abort_schedule = path
                        continue
                    assert config.state is not None
                    if config.status is Status.DONE:
                        terminals.setdefault(config.state, path)
                        continue
                    assert config.command is not None
                    nxt = (config.command, config.state)
                    if nxt == node:
                        # an atomic block not terminating
                        truncated = True
                        continue
                    if nxt in paths:
                        continue
                    if len(paths) >= bounds.max_configs:
                        truncated = True
                        continue
                    paths[nxt] = path
                    new.append(nxt)
            frontier = new

    if truncated:
        logger.warning(
            "exploration truncated at depth %s with %s configurations",
            depth,
            len(paths),
        )
    logger.info(
        "explored %s configurations, %s terminal states",
        len(paths),
        len(terminals),
    )
    return Exploration(
        frozenset(terminals),
        abort_schedule is not None,
        truncated,
        len(paths),
        terminals,
        abort_schedule,
    )
