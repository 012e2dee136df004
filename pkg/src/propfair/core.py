"""Instances, allocations and the fairness predicates.

Utilities are additive: an agent's value for a bundle is the sum of her values
for the goods in it. All sums run in ascending good-index order so repeated
runs agree bit for bit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

TOL = 1e-9


class InstanceFormatError(ValueError):
    """Raised when an instance or allocation document is malformed."""


@dataclass(frozen=True, eq=False)
class Instance:
    """n agents, m goods and an n x m utility matrix with entries in [0, 1]."""

    n: int
    m: int
    utilities: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 1:
            raise InstanceFormatError(f"field 'n': need at least one agent, got {self.n}")
        if self.m < 0:
            raise InstanceFormatError(f"field 'm': must be nonnegative, got {self.m}")
        u = np.array(self.utilities, dtype=np.float64)
        if u.size == 0 and self.m == 0:
            u = u.reshape(self.n, 0)
        if u.shape != (self.n, self.m):
            raise InstanceFormatError(
                f"field 'utilities': expected shape ({self.n}, {self.m}), "
                f"got {np.shape(self.utilities)}"
            )
        if not np.all(np.isfinite(u)) or np.any(u < 0.0) or np.any(u > 1.0):
            raise InstanceFormatError("field 'utilities': every entry must lie in [0, 1]")
        u.setflags(write=False)
        object.__setattr__(self, "utilities", u)

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]], m: int | None = None) -> "Instance":
        n = len(rows)
        if m is None:
            m = len(rows[0]) if n else 0
        return cls(n, m, np.array(rows, dtype=np.float64).reshape(n, m))

    def row(self, agent: int) -> list[float]:
        if not 0 <= agent < self.n:
            raise IndexError(f"agent {agent} out of range for n={self.n}")
        return self.utilities[agent].tolist()

    def to_dict(self) -> dict[str, Any]:
        return {"n": self.n, "m": self.m, "utilities": self.utilities.tolist()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc: Any) -> "Instance":
        if not isinstance(doc, dict):
            raise InstanceFormatError("instance document must be a JSON object")
        for key in ("n", "m", "utilities"):
            if key not in doc:
                raise InstanceFormatError(f"field '{key}': missing")
        n, m, rows = doc["n"], doc["m"], doc["utilities"]
        if not isinstance(n, int) or isinstance(n, bool):
            raise InstanceFormatError(f"field 'n': expected integer, got {n!r}")
        if not isinstance(m, int) or isinstance(m, bool):
            raise InstanceFormatError(f"field 'm': expected integer, got {m!r}")
        if not isinstance(rows, list) or len(rows) != n:
            raise InstanceFormatError(f"field 'utilities': expected a list of {n} rows")
        for i, r in enumerate(rows):
            if not isinstance(r, list) or len(r) != m:
                raise InstanceFormatError(
                    f"field 'utilities': row {i} must be a list of {m} numbers"
                )
            for g, x in enumerate(r):
                if isinstance(x, bool) or not isinstance(x, (int, float)):
                    raise InstanceFormatError(
                        f"field 'utilities': entry [{i}][{g}] is not a number: {x!r}"
                    )
        return cls(n, m, np.array(rows, dtype=np.float64).reshape(n, m))

    @classmethod
    def from_json(cls, text: str) -> "Instance":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise InstanceFormatError(f"invalid JSON: {exc}") from None
        return cls.from_dict(doc)


@dataclass(frozen=True)
class Allocation:
    """owner[g] is the agent receiving good g."""

    owner: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "owner", tuple(int(a) for a in self.owner))

    def bundles(self, n: int) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(n)]
        for g, a in enumerate(self.owner):
            out[a].append(g)
        return out

    def validate(self, inst: Instance) -> None:
        if len(self.owner) != inst.m:
            raise InstanceFormatError(
                f"allocation covers {len(self.owner)} goods, instance has m={inst.m}"
            )
        for g, a in enumerate(self.owner):
            if not 0 <= a < inst.n:
                raise InstanceFormatError(f"good {g} assigned to invalid agent {a}")

    @classmethod
    def from_dict(cls, doc: Any) -> "Allocation":
        owner = doc.get("owner") if isinstance(doc, dict) else doc
        if not isinstance(owner, list) or not all(
            isinstance(a, int) and not isinstance(a, bool) for a in owner
        ):
            raise InstanceFormatError("field 'owner': expected a list of agent indices")
        return cls(tuple(owner))


def _sum(values: list[float]) -> float:
    total = 0.0
    for x in values:
        total += x
    return total


def _bundle_values(inst: Instance, alloc: Allocation, agent: int) -> list[float]:
    """Agent's value for every bundle, accumulated in ascending good order."""
    row = inst.row(agent)
    totals = [0.0] * inst.n
    for g, owner in enumerate(alloc.owner):
        totals[owner] += row[g]
    return totals


def bundle_utility(inst: Instance, alloc: Allocation, agent: int) -> float:
    alloc.validate(inst)
    return _bundle_values(inst, alloc, agent)[agent]


def total_utility(inst: Instance, agent: int) -> float:
    return _sum(inst.row(agent))


def proportional_share(inst: Instance, agent: int) -> float:
    return total_utility(inst, agent) / inst.n


def is_proportional(inst: Instance, alloc: Allocation, tol: float = TOL) -> bool:
    return first_unsatisfied(inst, alloc, tol) is None


def first_unsatisfied(inst: Instance, alloc: Allocation, tol: float = TOL) -> int | None:
    """Lowest-index agent whose bundle falls short of her share, or None."""
    alloc.validate(inst)
    for i in range(inst.n):
        mine = _bundle_values(inst, alloc, i)[i]
        if mine < proportional_share(inst, i) - tol:
            return i
    return None


def is_envy_free(inst: Instance, alloc: Allocation, tol: float = TOL) -> bool:
    alloc.validate(inst)
    for i in range(inst.n):
        values = _bundle_values(inst, alloc, i)
        if any(values[i] < v - tol for v in values):
            return False
    return True
