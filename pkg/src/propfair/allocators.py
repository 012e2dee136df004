"""Divide-and-match allocators for m = k*n goods and for m much larger than n.

Goods are cut into consecutive blocks of n. In each block every agent is
matched to a distinct good she values at least (1 + delta) * mean. Success is
only likely, never certain, so outcomes carry an explicit status and, with
``verify`` on, the final allocation is re-checked for proportionality.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any

from .core import Allocation, Instance, first_unsatisfied
from .distributions import Margin
from .matching import maximum_matching, threshold_graph


class AllocatorError(ValueError):
    """Precondition or configuration problem; not a failed construction."""


class Status(str, enum.Enum):
    SUCCESS = "Success"
    MATCHING_FAILED = "MatchingFailed"
    INSUFFICIENT_GROUPS = "InsufficientGroups"
    VERIFICATION_FAILED = "VerificationFailed"


def _ratio(delta: float) -> Fraction:
    d = Fraction(delta)
    return (1 + d / 2) / (1 + d)


@dataclass(frozen=True)
class AllocatorConfig:
    margin: Margin
    alpha: float | None = None
    verify: bool = True

    def __post_init__(self) -> None:
        if not isinstance(self.margin, Margin):
            raise AllocatorError("margin must be a Margin")
        if not (self.margin.delta > 0 and self.margin.beta > 0):
            raise AllocatorError("degenerate margin: delta and beta must be positive")
        lo = float(_ratio(self.margin.delta))
        if self.alpha is None:
            object.__setattr__(self, "alpha", (lo + 1.0) / 2.0)
        elif not lo < self.alpha < 1.0:
            raise AllocatorError(
                f"alpha must lie in ({lo:.6g}, 1) for delta={self.margin.delta:g}, got {self.alpha}"
            )


@dataclass(frozen=True)
class AllocatorOutcome:
    status: Status
    allocation: Allocation | None = None
    block_sizes: tuple[int, ...] = ()
    failed_block: int | None = None
    found: int | None = None
    required: int | None = None
    agent: int | None = None

    @property
    def success(self) -> bool:
        return self.status is Status.SUCCESS

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"status": self.status.value}
        if self.allocation is not None:
            doc["allocation"] = list(self.allocation.owner)
        doc["block_matching_sizes"] = list(self.block_sizes)
        for key in ("failed_block", "found", "required", "agent"):
            value = getattr(self, key)
            if value is not None:
                doc[key] = value
        return doc


def required_groups(m: int, n: int, margin: Margin) -> int:
    """ceil(((1 + delta/2) / (1 + delta)) * m / n), in exact rational arithmetic."""
    if n < 1 or m < n:
        raise AllocatorError(f"need m >= n >= 1, got m={m}, n={n}")
    return math.ceil(_ratio(margin.delta) * Fraction(m, n))


def _match_blocks(inst: Instance, margin: Margin, blocks: int):
    thresholds = [margin.threshold] * inst.n
    sizes: list[int] = []
    matchings = []
    for b in range(blocks):
        goods = list(range(b * inst.n, (b + 1) * inst.n))
        mt = maximum_matching(threshold_graph(inst, goods, thresholds))
        sizes.append(mt.size)
        matchings.append((goods, mt))
    return sizes, matchings


def _finish(inst: Instance, owner: list[int], cfg: AllocatorConfig, sizes) -> AllocatorOutcome:
    alloc = Allocation(tuple(owner))
    if cfg.verify:
        bad = first_unsatisfied(inst, alloc)
        if bad is not None:
            return AllocatorOutcome(
                Status.VERIFICATION_FAILED, None, tuple(sizes), agent=bad
            )
    return AllocatorOutcome(Status.SUCCESS, alloc, tuple(sizes))


def theorem1_allocate(inst: Instance, cfg: AllocatorConfig) -> AllocatorOutcome:
    """Allocation for m = k*n: one perfect matching per block, k goods per agent."""
    n, m = inst.n, inst.m
    if m == 0 or m % n:
        raise AllocatorError(
            f"m={m} is not a positive multiple of n={n}; use theorem2_allocate instead"
        )
    if n == 1:
        return _finish(inst, [0] * m, cfg, [])
    sizes, matchings = _match_blocks(inst, cfg.margin, m // n)
    for b, size in enumerate(sizes):
        if size < n:
            return AllocatorOutcome(Status.MATCHING_FAILED, None, tuple(sizes), failed_block=b)
    owner = [0] * m
    for goods, mt in matchings:
        for agent, pos in enumerate(mt.pair):
            owner[goods[pos]] = agent
    return _finish(inst, owner, cfg, sizes)


def theorem2_allocate(inst: Instance, cfg: AllocatorConfig) -> AllocatorOutcome:
    """Allocation for m >= n: match enough blocks, then deal out the rest round-robin."""
    n, m = inst.n, inst.m
    if m < n:
        raise AllocatorError(f"need at least as many goods as agents, got m={m}, n={n}")
    if n == 1:
        return _finish(inst, [0] * m, cfg, [])
    required = required_groups(m, n, cfg.margin)
    sizes, matchings = _match_blocks(inst, cfg.margin, m // n)
    found = sum(s == n for s in sizes)
    if found < required:
        return AllocatorOutcome(
            Status.INSUFFICIENT_GROUPS, None, tuple(sizes), found=found, required=required
        )
    owner: list[int | None] = [None] * m
    for goods, mt in matchings:
        if mt.size == n:
            for agent, pos in enumerate(mt.pair):
                owner[goods[pos]] = agent
    rest = [g for g in range(m) if owner[g] is None]
    for j, g in enumerate(rest):
        owner[g] = j % n
    return _finish(inst, owner, cfg, sizes)
