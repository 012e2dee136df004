"""Bipartite agent/good graphs and maximum-cardinality matching."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Instance

INF = float("inf")
BRUTE_FORCE_LIMIT = 10


class MatchingLimitError(ValueError):
    pass


@dataclass(frozen=True)
class BipartiteGraph:
    left_count: int
    right_count: int
    adjacency: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        adj = tuple(tuple(int(r) for r in row) for row in self.adjacency)
        if len(adj) != self.left_count:
            raise ValueError(f"adjacency has {len(adj)} rows, expected {self.left_count}")
        for i, row in enumerate(adj):
            if any(not 0 <= r < self.right_count for r in row):
                raise ValueError(f"row {i} references a right vertex out of range")
            if any(a >= b for a, b in zip(row, row[1:])):
                raise ValueError(f"row {i} must be strictly increasing")
        object.__setattr__(self, "adjacency", adj)

    @classmethod
    def from_edges(cls, left: int, right: int, edges) -> "BipartiteGraph":
        rows: list[set[int]] = [set() for _ in range(left)]
        for a, b in edges:
            rows[a].add(b)
        return cls(left, right, tuple(tuple(sorted(r)) for r in rows))

    @property
    def edges(self) -> set[tuple[int, int]]:
        return {(i, r) for i, row in enumerate(self.adjacency) for r in row}


@dataclass(frozen=True)
class Matching:
    """pair[i] is the right vertex matched to left vertex i, or None."""

    pair: tuple[int | None, ...]

    @property
    def size(self) -> int:
        return sum(p is not None for p in self.pair)

    def is_perfect(self, left_count: int) -> bool:
        return self.size == left_count


def threshold_graph(
    inst: Instance, block: Sequence[int], thresholds: Sequence[float]
) -> BipartiteGraph:
    """Edge (i, j) iff agent i values good ``block[j]`` at least ``thresholds[i]``."""
    block = list(block)
    if len(set(block)) != len(block) or any(not 0 <= g < inst.m for g in block):
        raise ValueError("block indices must be distinct goods of the instance")
    if len(thresholds) != inst.n:
        raise ValueError(f"need {inst.n} thresholds, got {len(thresholds)}")
    sub = inst.utilities[:, block]
    mask = sub >= np.asarray(thresholds, dtype=np.float64)[:, None]
    adj = tuple(tuple(np.flatnonzero(row).tolist()) for row in mask)
    return BipartiteGraph(inst.n, len(block), adj)


def maximum_matching(g: BipartiteGraph) -> Matching:
    """Hopcroft-Karp: BFS layering from free left vertices, then disjoint
    shortest augmenting paths found by DFS. Vertices and neighbours are scanned
    in ascending order, so the result is a deterministic function of ``g``.
    """
    adj = g.adjacency
    n = g.left_count
    pair_left: list[int | None] = [None] * n
    pair_right: list[int | None] = [None] * g.right_count
    dist = [INF] * n

    def bfs() -> bool:
        queue = deque()
        for u in range(n):
            if pair_left[u] is None:
                dist[u] = 0
                queue.append(u)
            else:
                dist[u] = INF
        found = INF
        while queue:
            u = queue.popleft()
            if dist[u] >= found:
                continue
            for v in adj[u]:
                w = pair_right[v]
                if w is None:
                    if found == INF:
                        found = dist[u] + 1
                elif dist[w] == INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found != INF

    def augment(root: int) -> bool:
        # iterative DFS along the layered graph; ptr avoids rescanning edges
        stack = [root]
        path: list[int] = []
        while stack:
            u = stack[-1]
            advanced = False
            while ptr[u] < len(adj[u]):
                v = adj[u][ptr[u]]
                ptr[u] += 1
                w = pair_right[v]
                if w is None:
                    path.append(v)
                    for left, right in zip(stack, path):
                        pair_left[left] = right
                        pair_right[right] = left
                    return True
                if dist[w] == dist[u] + 1:
                    path.append(v)
                    stack.append(w)
                    advanced = True
                    break
            if not advanced:
                dist[u] = INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        ptr = [0] * n
        for u in range(n):
            if pair_left[u] is None:
                augment(u)
    return Matching(tuple(pair_left))


def brute_force_matching_size(g: BipartiteGraph) -> int:
    """Exact maximum matching size by exhaustive recursion; test oracle only."""
    if g.left_count > BRUTE_FORCE_LIMIT:
        raise MatchingLimitError(
            f"brute force is limited to {BRUTE_FORCE_LIMIT} left vertices, got {g.left_count}"
        )
    adj = g.adjacency

    def best(i: int, used: frozenset[int]) -> int:
        if i == g.left_count:
            return 0
        result = best(i + 1, used)
        for v in adj[i]:
            if v not in used:
                result = max(result, 1 + best(i + 1, used | {v}))
        return result

    return best(0, frozenset())
