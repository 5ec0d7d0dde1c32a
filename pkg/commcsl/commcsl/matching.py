"""
Maximum bipartite matching.

Used to decide the shared-action precondition predicate: two argument
multisets are related when a perfect matching exists in the graph of the
pairs satisfying the action precondition.
"""

# Copyright (C) 2022 The CommCSL Team

from collections import deque
from typing import Callable, Dict, Generic, Hashable, List, Mapping, Optional
from typing import Sequence, Set, Tuple, TypeVar

from ._compat import Deque

TLeft = TypeVar("TLeft", bound=Hashable)
TRight = TypeVar("TRight", bound=Hashable)
T = TypeVar("T")

INT_MAX = 10_000_000_000_000


class HopcroftKarp(Generic[TLeft, TRight]):
    """
    The Hopcroft-Karp algorithm on a bipartite graph.

    The graph is given as a mapping from each left vertex to the set of the
    right vertices connected to it. Vertices are visited in the order of
    the mapping and of the sorted vertex positions, so the matching returned
    is deterministic.
    """

    def __init__(self, graph: Mapping[TLeft, Set[TRight]]):
        self._pos2left: List[TLeft] = list(graph)
        right: List[TRight] = []
        seen: Set[TRight] = set()
        for targets in graph.values():
            for r in targets:
                if r not in seen:
                    seen.add(r)
                    right.append(r)
        self._pos2right = right
        map_right2pos = {r: i for i, r in enumerate(right)}
        self._graph: List[List[int]] = [
            sorted(map_right2pos[r] for r in graph[left])
            for left in self._pos2left
        ]
        self._reference_distance = INT_MAX
        self._pair_left: Dict[int, int] = {}
        self._pair_right: Dict[int, int] = {}
        self._left = list(range(len(self._graph)))
        self._dist_left: Dict[int, int] = {}

    def run(self) -> int:
        """Compute a maximum matching; return its cardinality."""
        self._pair_left.clear()
        self._pair_right.clear()
        self._dist_left.clear()
        for left in self._left:
            self._dist_left[left] = INT_MAX
        matchings = 0
        while self._bfs():
            for left in self._left:
                if left in self._pair_left:
                    continue
                if self._dfs(left):
                    matchings += 1
        return matchings

    def maximum_matching(self) -> Dict[TLeft, TRight]:
        self.run()
        return {
            self._pos2left[k]: self._pos2right[v]
            for k, v in self._pair_left.items()
        }

    def _bfs(self) -> bool:
        queue: Deque[int] = deque()
        for left in self._left:
            if left not in self._pair_left:
                queue.append(left)
                self._dist_left[left] = 0
            else:
                self._dist_left[left] = INT_MAX
        self._reference_distance = INT_MAX
        while queue:
            left = queue.popleft()
            if self._dist_left[left] >= self._reference_distance:
                continue
            for right in self._graph[left]:
                if right not in self._pair_right:
                    if self._reference_distance == INT_MAX:
                        self._reference_distance = self._dist_left[left] + 1
                else:
                    other = self._pair_right[right]
                    if self._dist_left[other] == INT_MAX:
                        self._dist_left[other] = self._dist_left[left] + 1
                        queue.append(other)
        return self._reference_distance < INT_MAX

    def _swap(self, left: int, right: int) -> None:
        self._pair_left[left] = right
        self._pair_right[right] = left

    def _dfs(self, left: int) -> bool:
        for right in self._graph[left]:
            if right not in self._pair_right:
                if self._reference_distance == self._dist_left[left] + 1:
                    self._swap(left, right)
                    return True
            else:
                other = self._pair_right[right]
                if self._dist_left[other] == self._dist_left[left] + 1:
                    if self._dfs(other):
                        self._swap(left, right)
                        return True
        self._dist_left[left] = INT_MAX
        return False


def perfect_matching(
    xs: Sequence[T], ys: Sequence[T], related: Callable[[T, T], bool]
) -> Optional[List[Tuple[int, int]]]:
    """
    Find a bijection between the positions of *xs* and *ys*.

    Every matched pair `(i, j)` satisfies ``related(xs[i], ys[j])``. Return
    `!None` if the sequences have different lengths or no perfect matching
    exists.
    """
    if len(xs) != len(ys):
        return None
    if not xs:
        return []
    graph: Dict[int, Set[int]] = {
        i: {j for j, y in enumerate(ys) if related(x, y)}
        for i, x in enumerate(xs)
    }
    if any(not targets for targets in graph.values()):
        return None
    matching = HopcroftKarp(graph).maximum_matching()
    if len(matching) != len(xs):
        return None
    return sorted(matching.items())
