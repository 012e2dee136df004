"""Exact existence checks for proportionally fair allocations on small instances."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .core import TOL, Allocation, Instance, is_proportional, proportional_share
from .matching import maximum_matching, threshold_graph


class Verdict(str, enum.Enum):
    YES = "Yes"
    NO = "No"
    BUDGET_EXCEEDED = "BudgetExceeded"
    NOT_APPLICABLE = "NotApplicable"


class SearchLimitError(ValueError):
    """Instance is larger than the search limits allow."""


@dataclass(frozen=True)
class SearchLimits:
    max_agents: int = 6
    max_goods: int = 20
    node_budget: int = 10**8

    def __post_init__(self) -> None:
        if min(self.max_agents, self.max_goods, self.node_budget) < 1:
            raise ValueError("search limits must be positive")

    def admits(self, inst: Instance) -> bool:
        return inst.n <= self.max_agents and inst.m <= self.max_goods


@dataclass(frozen=True)
class CheckResult:
    verdict: Verdict
    allocation: Allocation | None = None
    nodes: int = 0

    def to_dict(self) -> dict:
        doc = {"verdict": self.verdict.value}
        if self.allocation is not None:
            doc["witness"] = list(self.allocation.owner)
        return doc


def exists_proportional(inst: Instance, limits: SearchLimits = SearchLimits()) -> CheckResult:
    """Decide existence by depth-first branch and bound over good -> agent choices.

    Goods go in descending order of their best value to any agent. A branch is
    cut as soon as some agent could not reach her share even if she received
    every unassigned good. Witnesses are re-checked with ``is_proportional``.
    """
    if not limits.admits(inst):
        raise SearchLimitError(
            f"instance n={inst.n}, m={inst.m} exceeds limits "
            f"(max_agents={limits.max_agents}, max_goods={limits.max_goods})"
        )
    n, m = inst.n, inst.m
    rows = [inst.row(i) for i in range(n)]
    shares = [proportional_share(inst, i) for i in range(n)]
    order = sorted(range(m), key=lambda g: (-max(r[g] for r in rows), g))
    have = [0.0] * n
    left = [sum(r[g] for g in order) for r in rows]
    owner = [0] * m
    # incremental sums drift from the canonical ones by far less than TOL
    slack = 2 * TOL
    nodes = 0

    def feasible() -> bool:
        return all(have[i] + left[i] >= shares[i] - slack for i in range(n))

    def search(depth: int) -> bool | None:
        nonlocal nodes
        if depth == m:
            return is_proportional(inst, Allocation(tuple(owner)))
        g = order[depth]
        for i in range(n):
            left[i] -= rows[i][g]
        for a in range(n):
            nodes += 1
            if nodes > limits.node_budget:
                return None
            owner[g] = a
            have[a] += rows[a][g]
            if feasible():
                res = search(depth + 1)
                if res is None or res:
                    return res
            have[a] -= rows[a][g]
        for i in range(n):
            left[i] += rows[i][g]
        return False

    if not feasible():
        return CheckResult(Verdict.NO, None, 0)
    res = search(0)
    if res is None:
        return CheckResult(Verdict.BUDGET_EXCEEDED, None, nodes)
    if res:
        return CheckResult(Verdict.YES, Allocation(tuple(owner)), nodes)
    return CheckResult(Verdict.NO, None, nodes)


def exists_proportional_matching_case(inst: Instance, tol: float = TOL) -> CheckResult:
    """Exact check when m == n and every share is positive.

    Then each agent needs at least one good, hence exactly one, so a fair
    allocation exists iff the graph with edges u_i(g) >= share_i has a
    perfect matching.
    """
    if inst.m != inst.n:
        return CheckResult(Verdict.NOT_APPLICABLE)
    shares = [proportional_share(inst, i) for i in range(inst.n)]
    if any(s <= tol for s in shares):
        return CheckResult(Verdict.NOT_APPLICABLE)
    graph = threshold_graph(inst, range(inst.m), [s - tol for s in shares])
    mt = maximum_matching(graph)
    if not mt.is_perfect(inst.n):
        return CheckResult(Verdict.NO)
    owner = [0] * inst.m
    for agent, good in enumerate(mt.pair):
        owner[good] = agent
    return CheckResult(Verdict.YES, Allocation(tuple(owner)))
