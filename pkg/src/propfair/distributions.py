"""Utility distributions, tail margins and the Chernoff tail bound.

Sampling is counter based: entry (i, g) of a sampled matrix is the g-th draw
of a Philox stream keyed by (seed, i), pushed through the inverse CDF. Any
entry can therefore be regenerated without touching the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import Instance

SEED_MASK = (1 << 64) - 1
PROB_TOL = 1e-12


class MarginUnavailable(ValueError):
    """No (delta, beta) pair meets the request for this distribution."""


@dataclass(frozen=True)
class DistributionSpec:
    """A utility distribution supported on [0, 1].

    Use the ``uniform``, ``bernoulli`` and ``discrete`` constructors. Bernoulli
    takes the value 0 with probability ``p`` and 1 otherwise.
    """

    kind: str
    lo: float = 0.0
    hi: float = 1.0
    values: tuple[float, ...] = ()
    probs: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.kind == "uniform":
            if not (0.0 <= self.lo <= self.hi <= 1.0):
                raise ValueError(f"uniform needs 0 <= lo <= hi <= 1, got [{self.lo}, {self.hi}]")
        elif self.kind == "discrete":
            if len(self.values) != len(self.probs) or not self.values:
                raise ValueError("discrete needs equally many values and probabilities")
            if any(not 0.0 <= v <= 1.0 for v in self.values):
                raise ValueError("discrete values must lie in [0, 1]")
            if any(p < 0.0 for p in self.probs):
                raise ValueError("discrete probabilities must be nonnegative")
            if abs(math.fsum(self.probs) - 1.0) > PROB_TOL:
                raise ValueError(f"discrete probabilities sum to {math.fsum(self.probs)}, not 1")
        else:
            raise ValueError(f"unknown distribution kind {self.kind!r}")

    @classmethod
    def uniform(cls, lo: float, hi: float) -> "DistributionSpec":
        return cls("uniform", lo=float(lo), hi=float(hi))

    @classmethod
    def bernoulli(cls, p: float) -> "DistributionSpec":
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"bernoulli p must lie in [0, 1], got {p}")
        return cls("discrete", values=(0.0, 1.0), probs=(float(p), 1.0 - float(p)))

    @classmethod
    def discrete(cls, values: Sequence[float], probs: Sequence[float]) -> "DistributionSpec":
        return cls("discrete", values=tuple(map(float, values)), probs=tuple(map(float, probs)))

    @classmethod
    def parse(cls, text: str) -> "DistributionSpec":
        """Parse ``uniform:lo,hi``, ``bernoulli:p`` or ``discrete:v1,p1;v2,p2;...``."""
        kind, _, body = text.strip().partition(":")
        try:
            if kind == "uniform":
                lo, hi = (float(x) for x in body.split(","))
                return cls.uniform(lo, hi)
            if kind == "bernoulli":
                return cls.bernoulli(float(body))
            if kind == "discrete":
                pairs = [item.split(",") for item in body.split(";") if item.strip()]
                return cls.discrete([float(v) for v, _ in pairs], [float(p) for _, p in pairs])
        except ValueError as exc:
            raise ValueError(f"bad distribution {text!r}: {exc}") from None
        raise ValueError(f"bad distribution {text!r}: unknown kind {kind!r}")

    def __str__(self) -> str:
        if self.kind == "uniform":
            return f"uniform:{self.lo:g},{self.hi:g}"
        return "discrete:" + ";".join(f"{v:g},{p:g}" for v, p in zip(self.values, self.probs))

    def _atoms(self) -> list[tuple[float, float]]:
        """Support points with positive mass, ascending, duplicates merged."""
        merged: dict[float, float] = {}
        for v, p in zip(self.values, self.probs):
            if p > 0.0:
                merged[v] = merged.get(v, 0.0) + p
        return sorted(merged.items())

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return (self.lo + self.hi) / 2.0
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    @property
    def support_max(self) -> float:
        if self.kind == "uniform":
            return self.hi
        return self._atoms()[-1][0]

    @property
    def degenerate(self) -> bool:
        if self.kind == "uniform":
            return self.lo == self.hi
        return len(self._atoms()) == 1

    def tail(self, x: float) -> float:
        """Pr[X >= x]."""
        if self.kind == "uniform":
            if x <= self.lo:
                return 1.0
            if x > self.hi:
                return 0.0
            if self.lo == self.hi:
                return 1.0
            return (self.hi - x) / (self.hi - self.lo)
        return min(1.0, math.fsum(p for v, p in self._atoms() if v >= x))

    def quantile(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF applied to uniforms in [0, 1)."""
        if self.kind == "uniform":
            return self.lo + (self.hi - self.lo) * u
        atoms = self._atoms()
        vals = np.array([v for v, _ in atoms])
        cum = np.cumsum([p for _, p in atoms])
        idx = np.searchsorted(cum, u, side="right")
        return vals[np.minimum(idx, len(vals) - 1)]


@dataclass(frozen=True)
class SplitSpec:
    """Per-good composite: the first floor(m/2) goods follow ``low``, the rest ``high``."""

    low: DistributionSpec
    high: DistributionSpec

    @classmethod
    def parse(cls, text: str) -> "SplitSpec":
        body = text.strip().partition(":")[2]
        low, sep, high = body.partition("|")
        if not sep:
            raise ValueError(f"bad split distribution {text!r}: expected split:<low>|<high>")
        return cls(DistributionSpec.parse(low), DistributionSpec.parse(high))

    def __str__(self) -> str:
        return f"split:{self.low}|{self.high}"

    def columns(self, m: int) -> list[DistributionSpec]:
        return [self.low] * (m // 2) + [self.high] * (m - m // 2)

    @property
    def mean(self) -> float:
        return (self.low.mean + self.high.mean) / 2.0

    @property
    def support_max(self) -> float:
        return max(self.low.support_max, self.high.support_max)

    def tail(self, x: float) -> float:
        return (self.low.tail(x) + self.high.tail(x)) / 2.0


def parse_spec(text: str) -> DistributionSpec | SplitSpec:
    if text.strip().startswith("split:"):
        return SplitSpec.parse(text)
    return DistributionSpec.parse(text)


@dataclass(frozen=True)
class Margin:
    """Certificate that Pr[X >= (1 + delta) * mean] >= beta."""

    delta: float
    beta: float
    mean: float

    def __post_init__(self) -> None:
        if not self.delta > 0.0:
            raise MarginUnavailable(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.beta <= 1.0:
            raise MarginUnavailable(f"beta must lie in (0, 1], got {self.beta}")
        if not self.mean > 0.0:
            raise MarginUnavailable(f"mean must be positive, got {self.mean}")

    @property
    def threshold(self) -> float:
        return (1.0 + self.delta) * self.mean


def _delta_for(threshold: float, mean: float) -> float:
    """Largest delta with (1 + delta) * mean <= threshold in floating point."""
    delta = threshold / mean - 1.0
    while (1.0 + delta) * mean > threshold:
        delta = math.nextafter(delta, -math.inf)
    return delta


def margin_for(spec: DistributionSpec, beta_floor: float = 0.3) -> Margin:
    """Largest delta whose tail mass above (1 + delta) * mean is at least ``beta_floor``.

    ``beta`` is reported as the exact tail probability at the returned delta.
    Raises MarginUnavailable for point masses, and when ``beta_floor`` exceeds
    the mass lying strictly above the mean (then no positive delta qualifies).
    """
    if not 0.0 < beta_floor < 1.0:
        raise ValueError(f"beta_floor must lie in (0, 1), got {beta_floor}")
    if spec.degenerate:
        raise MarginUnavailable(f"{spec} puts all probability on a single point")
    mu = spec.mean
    if not mu > 0.0:
        raise MarginUnavailable(f"{spec} has zero mean")
    if spec.kind == "uniform":
        # tail at t is (hi - t) / (hi - lo), linear in t
        t = spec.hi - beta_floor * (spec.hi - spec.lo)
        if not t > mu:
            raise MarginUnavailable(
                f"beta_floor={beta_floor} leaves no room above the mean of {spec}; "
                "use a value below 0.5"
            )
        delta = _delta_for(t, mu)
        while spec.tail((1.0 + delta) * mu) < beta_floor:
            delta = math.nextafter(delta, -math.inf)
        return Margin(delta, spec.tail((1.0 + delta) * mu), mu)
    for v, _ in reversed(spec._atoms()):
        if v <= mu:
            break
        if spec.tail(v) >= beta_floor:
            delta = _delta_for(v, mu)
            return Margin(delta, spec.tail((1.0 + delta) * mu), mu)
    above = spec.tail(math.nextafter(mu, math.inf))
    raise MarginUnavailable(
        f"beta_floor={beta_floor} exceeds the mass above the mean of {spec} ({above:g})"
    )


def margin_from_delta(spec: DistributionSpec | SplitSpec, delta: float) -> Margin:
    """Margin for a user-chosen delta; beta is the exact tail at the implied threshold."""
    mu = spec.mean
    if not delta > 0.0:
        raise MarginUnavailable(f"delta must be positive, got {delta}")
    if (1.0 + delta) * mu > spec.support_max:
        raise MarginUnavailable(
            f"(1 + delta) * mean = {(1.0 + delta) * mu:g} exceeds the support maximum "
            f"{spec.support_max:g}"
        )
    beta = spec.tail((1.0 + delta) * mu)
    if beta <= 0.0:
        raise MarginUnavailable(f"no mass at or above {(1.0 + delta) * mu:g}")
    return Margin(float(delta), beta, mu)


def chernoff_bound(epsilon: float, expected: float) -> float:
    """Upper bound exp(-eps^2 E[X] / 3) on Pr[X >= (1 + eps) E[X]] for sums of [0, 1] variables."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    if expected < 0.0:
        raise ValueError(f"expected value must be nonnegative, got {expected}")
    return math.exp(-epsilon * epsilon * expected / 3.0)


def _uniform_row(seed: int, agent: int, m: int) -> np.ndarray:
    key = np.array([seed & SEED_MASK, agent], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(m)


def sample_columns(
    columns: Sequence[DistributionSpec], n: int, seed: int
) -> Instance:
    """Instance whose good g is drawn i.i.d. across agents from ``columns[g]``."""
    if n < 1:
        raise ValueError(f"need at least one agent, got n={n}")
    if seed < 0 or seed > SEED_MASK:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    m = len(columns)
    u = np.empty((n, m))
    for i in range(n):
        u[i] = _uniform_row(seed, i, m)
    out = np.empty_like(u)
    # group goods sharing a spec so each quantile call is vectorised
    groups: dict[DistributionSpec, list[int]] = {}
    for g, spec in enumerate(columns):
        groups.setdefault(spec, []).append(g)
    for spec, goods in groups.items():
        out[:, goods] = spec.quantile(u[:, goods])
    np.clip(out, 0.0, 1.0, out=out)
    return Instance(n, m, out)


def sample_instance(
    spec: DistributionSpec | SplitSpec, n: int, m: int, seed: int
) -> Instance:
    if isinstance(spec, SplitSpec):
        return sample_columns(spec.columns(m), n, seed)
    return sample_columns([spec] * m, n, seed)
