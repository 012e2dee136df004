"""Seeded Monte Carlo harness and the two counterexample families."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Any

from .allocators import AllocatorConfig, theorem1_allocate, theorem2_allocate
from .core import Instance, is_proportional
from .distributions import (
    SEED_MASK,
    DistributionSpec,
    Margin,
    SplitSpec,
    margin_for,
    margin_from_delta,
    parse_spec,
    sample_columns,
    sample_instance,
)
from .exact import (
    SearchLimits,
    Verdict,
    exists_proportional,
    exists_proportional_matching_case,
)

CSV_COLUMNS = (
    "n", "m", "trials", "alloc_success", "alloc_ci_lo", "alloc_ci_hi",
    "exists", "exists_ci_lo", "exists_ci_hi", "oracle_skipped", "seed",
)


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & SEED_MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & SEED_MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & SEED_MASK
    return x ^ (x >> 31)


def trial_seed(master: int, n: int, trial: int) -> int:
    """Stable 64-bit seed for one trial, independent of scheduling."""
    h = _splitmix64(master & SEED_MASK)
    h = _splitmix64(h ^ (n & SEED_MASK))
    return _splitmix64(h ^ (trial & SEED_MASK))


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    if trials < 1 or not 0 <= successes <= trials:
        raise ValueError(f"need 0 <= successes <= trials and trials >= 1, got {successes}/{trials}")
    if not 0.0 < confidence < 1.0:
        raise ValueError(f"confidence must lie in (0, 1), got {confidence}")
    z = NormalDist().inv_cdf(1.0 - (1.0 - confidence) / 2.0)
    p = successes / trials
    z2n = z * z / trials
    centre = (p + z2n / 2.0) / (1.0 + z2n)
    half = z * math.sqrt(p * (1.0 - p) / trials + z2n / (4.0 * trials)) / (1.0 + z2n)
    lo = 0.0 if successes == 0 else max(0.0, min(p, centre - half))
    hi = 1.0 if successes == trials else min(1.0, max(p, centre + half))
    return lo, hi


def remark1_instance(n: int, seed: int) -> Instance:
    """n agents, 2n - 1 goods, utilities uniform on [0.4, 0.6]; never admits a fair allocation."""
    if n < 3:
        raise ValueError(f"remark1 family needs n >= 3, got n={n}")
    return sample_instance(DistributionSpec.uniform(0.4, 0.6), n, 2 * n - 1, seed)


REMARK2_SPEC = SplitSpec(DistributionSpec.uniform(0.0, 0.1), DistributionSpec.uniform(0.9, 1.0))


def remark2_instance(n: int, seed: int) -> Instance:
    """n goods: the first half uniform on [0, 0.1], the second half uniform on [0.9, 1]."""
    if n < 2 or n % 2:
        raise ValueError(f"remark2 family needs an even n >= 2, got n={n}")
    return sample_columns(REMARK2_SPEC.columns(n), n, seed)


@dataclass(frozen=True)
class Regime:
    """How m follows from n: ``multiple`` (m = k*n), ``superlinear`` or ``custom``."""

    kind: str
    k: int = 1
    rule: str = "square"
    m: int = 0

    @classmethod
    def parse(cls, text: str) -> "Regime":
        kind, _, arg = text.strip().partition(":")
        try:
            if kind == "multiple":
                k = int(arg or 1)
                if k < 1:
                    raise ValueError("k must be at least 1")
                return cls("multiple", k=k)
            if kind == "superlinear":
                regime = cls("superlinear", rule=arg or "square")
                regime.goods(2)
                return regime
            if kind == "custom":
                m = int(arg)
                if m < 0:
                    raise ValueError("m must be nonnegative")
                return cls("custom", m=m)
        except ValueError as exc:
            raise ValueError(f"bad regime {text!r}: {exc}") from None
        raise ValueError(f"bad regime {text!r}: expected multiple:k, superlinear:rule or custom:m")

    def __str__(self) -> str:
        if self.kind == "multiple":
            return f"multiple:{self.k}"
        if self.kind == "superlinear":
            return f"superlinear:{self.rule}"
        return f"custom:{self.m}"

    def goods(self, n: int) -> int:
        if self.kind == "multiple":
            return self.k * n
        if self.kind == "custom":
            return self.m
        if self.rule == "square":
            return n * n
        if self.rule == "nlogn":
            return n * max(1, math.ceil(math.log(n))) if n > 1 else 1
        if self.rule.startswith("pow="):
            e = float(self.rule[4:])
            if not e > 1.0:
                raise ValueError("superlinear exponent must exceed 1")
            return max(n, math.ceil(n**e))
        raise ValueError(f"unknown superlinear rule {self.rule!r} (square, nlogn, pow=e)")


@dataclass(frozen=True)
class ExperimentConfig:
    regime: Regime
    spec: DistributionSpec | SplitSpec
    n_values: tuple[int, ...]
    trials: int
    seed: int = 0
    oracle_check: bool = False
    beta_floor: float = 0.3
    delta: float | None = None
    limits: SearchLimits = field(default_factory=SearchLimits)

    def __post_init__(self) -> None:
        if self.trials < 1:
            raise ValueError(f"trials must be at least 1, got {self.trials}")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ValueError("n_values must be a nonempty list of positive agent counts")
        if not 0 <= self.seed <= SEED_MASK:
            raise ValueError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "n_values", tuple(self.n_values))

    def margin(self) -> Margin:
        if self.delta is not None:
            return margin_from_delta(self.spec, self.delta)
        if isinstance(self.spec, SplitSpec):
            raise ValueError("split distributions need an explicit delta")
        return margin_for(self.spec, self.beta_floor)

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "ExperimentConfig":
        known = {"regime", "spec", "n_values", "trials", "seed", "oracle_check",
                 "beta_floor", "delta", "limits"}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        for key in ("regime", "spec", "n_values", "trials"):
            if key not in doc:
                raise ValueError(f"config field '{key}' is missing")
        return cls(
            regime=Regime.parse(doc["regime"]),
            spec=parse_spec(doc["spec"]),
            n_values=tuple(int(n) for n in doc["n_values"]),
            trials=int(doc["trials"]),
            seed=int(doc.get("seed", 0)),
            oracle_check=bool(doc.get("oracle_check", False)),
            beta_floor=float(doc.get("beta_floor", 0.3)),
            delta=None if doc.get("delta") is None else float(doc["delta"]),
            limits=SearchLimits(**doc.get("limits", {})),
        )


@dataclass(frozen=True)
class TrialResult:
    n: int
    trial: int
    success: bool
    exists: bool | None
    runtime: float


@dataclass(frozen=True)
class SummaryRow:
    n: int
    m: int
    trials: int
    alloc_success: float
    alloc_ci: tuple[float, float]
    exists: float | None
    exists_ci: tuple[float, float] | None
    oracle_skipped: bool
    mean_runtime: float


@dataclass(frozen=True)
class ExperimentSummary:
    rows: tuple[SummaryRow, ...]
    seed: int

    def row(self, n: int) -> SummaryRow:
        return next(r for r in self.rows if r.n == n)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        fmt = "{:.6f}".format
        for r in self.rows:
            ex = ("", "", "") if r.exists is None else (
                fmt(r.exists), fmt(r.exists_ci[0]), fmt(r.exists_ci[1]))
            writer.writerow([
                r.n, r.m, r.trials, fmt(r.alloc_success), fmt(r.alloc_ci[0]), fmt(r.alloc_ci[1]),
                *ex, str(r.oracle_skipped).lower(), self.seed,
            ])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        return {
            "seed": self.seed,
            "rows": [
                {
                    "n": r.n, "m": r.m, "trials": r.trials,
                    "alloc_success": r.alloc_success,
                    "alloc_ci_lo": r.alloc_ci[0], "alloc_ci_hi": r.alloc_ci[1],
                    "exists": r.exists,
                    "exists_ci_lo": None if r.exists_ci is None else r.exists_ci[0],
                    "exists_ci_hi": None if r.exists_ci is None else r.exists_ci[1],
                    "oracle_skipped": r.oracle_skipped,
                    "mean_runtime_s": r.mean_runtime,
                }
                for r in self.rows
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def allocate_for_regime(inst: Instance, cfg: AllocatorConfig, regime: Regime):
    """Dispatch to the construction matching the regime; None when neither applies."""
    n, m = inst.n, inst.m
    if regime.kind == "multiple" or (regime.kind == "custom" and m > 0 and m % n == 0):
        return theorem1_allocate(inst, cfg)
    if m >= n:
        return theorem2_allocate(inst, cfg)
    return None


def oracle_verdict(inst: Instance, limits: SearchLimits) -> bool | None:
    """Exact existence verdict, or None when out of reach."""
    res = exists_proportional_matching_case(inst)
    if res.verdict is Verdict.NOT_APPLICABLE:
        if not limits.admits(inst):
            return None
        res = exists_proportional(inst, limits)
    if res.verdict is Verdict.BUDGET_EXCEEDED:
        return None
    return res.verdict is Verdict.YES


def run_trial(cfg: ExperimentConfig, margin: Margin, n: int, trial: int) -> TrialResult:
    start = time.perf_counter()
    m = cfg.regime.goods(n)
    inst = sample_instance(cfg.spec, n, m, trial_seed(cfg.seed, n, trial))
    outcome = allocate_for_regime(inst, AllocatorConfig(margin), cfg.regime)
    success = outcome is not None and outcome.success
    if success and not is_proportional(inst, outcome.allocation):
        raise AssertionError(f"unsound allocation at n={n}, trial={trial}")
    exists = oracle_verdict(inst, cfg.limits) if cfg.oracle_check else None
    return TrialResult(n, trial, success, exists, time.perf_counter() - start)


def _run_chunk(args) -> list[TrialResult]:
    cfg, margin, items = args
    return [run_trial(cfg, margin, n, t) for n, t in items]


def default_threads() -> int:
    env = os.environ.get("PROPFAIR_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(cfg: ExperimentConfig, threads: int | None = None) -> ExperimentSummary:
    """Run every (n, trial) pair and aggregate per n.

    Per-trial seeds depend only on (seed, n, trial) and aggregation only
    counts, so the summary does not depend on ``threads``.
    """
    margin = cfg.margin()
    work = [(n, t) for n in sorted(set(cfg.n_values)) for t in range(cfg.trials)]
    threads = default_threads() if threads is None else max(1, threads)
    if threads == 1 or len(work) < 2:
        results = _run_chunk((cfg, margin, work))
    else:
        chunks = [work[i::threads] for i in range(threads)]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = [r for part in pool.map(_run_chunk, [(cfg, margin, c) for c in chunks])
                       for r in part]

    rows = []
    for n in sorted(set(cfg.n_values)):
        mine = [r for r in results if r.n == n]
        wins = sum(r.success for r in mine)
        skipped = not cfg.oracle_check or any(r.exists is None for r in mine)
        exists = exists_ci = None
        if not skipped:
            yes = sum(bool(r.exists) for r in mine)
            exists = yes / len(mine)
            exists_ci = wilson_interval(yes, len(mine))
        rows.append(SummaryRow(
            n=n, m=cfg.regime.goods(n), trials=len(mine),
            alloc_success=wins / len(mine), alloc_ci=wilson_interval(wins, len(mine)),
            exists=exists, exists_ci=exists_ci, oracle_skipped=skipped,
            mean_runtime=sum(r.runtime for r in mine) / len(mine),
        ))
    rows.sort(key=lambda r: (r.n, r.m))
    return ExperimentSummary(tuple(rows), cfg.seed)
