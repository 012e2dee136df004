"""propfair command line: allocate, check, simulate, counterexample.

Exit codes: 0 on success, 1 on an honest failure (no allocation found,
oracle out of reach), 2 on usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .allocators import AllocatorConfig, AllocatorError, theorem1_allocate, theorem2_allocate
from .core import Allocation, Instance, InstanceFormatError, is_envy_free, is_proportional
from .distributions import (
    DistributionSpec,
    MarginUnavailable,
    margin_for,
    margin_from_delta,
    parse_spec,
)
from .exact import SearchLimitError, SearchLimits, Verdict, exists_proportional
from .experiments import (
    ExperimentConfig,
    Regime,
    default_threads,
    oracle_verdict,
    remark1_instance,
    remark2_instance,
    run_experiment,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(doc) -> None:
    print(json.dumps(doc, indent=2))


def _read_json(path: str, what: str):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path} is not valid JSON: {exc}") from None


def _load_instance(path: str) -> Instance:
    try:
        return Instance.from_dict(_read_json(path, "instance"))
    except InstanceFormatError as exc:
        raise UsageError(f"instance {path}: {exc}") from None


def _margin(args):
    spec = DistributionSpec.parse(args.dist)
    if args.delta is not None:
        return margin_from_delta(spec, args.delta)
    return margin_for(spec, args.beta_floor)


def cmd_allocate(args) -> int:
    inst = _load_instance(args.instance)
    try:
        cfg = AllocatorConfig(_margin(args), alpha=args.alpha, verify=args.verify)
    except (ValueError, MarginUnavailable) as exc:
        raise UsageError(str(exc)) from None
    allocate = theorem1_allocate if args.theorem == 1 else theorem2_allocate
    try:
        outcome = allocate(inst, cfg)
    except AllocatorError as exc:
        msg = str(exc)
        if args.theorem == 1:
            msg += " (try --theorem 2)"
        raise UsageError(msg) from None
    doc = outcome.to_dict()
    doc.update(theorem=args.theorem, delta=cfg.margin.delta, beta=cfg.margin.beta,
               threshold=cfg.margin.threshold, verified=cfg.verify)
    _emit(doc)
    return EXIT_OK if outcome.success else EXIT_FAIL


def cmd_check(args) -> int:
    inst = _load_instance(args.instance)
    if args.allocation:
        try:
            alloc = Allocation.from_dict(_read_json(args.allocation, "allocation"))
            alloc.validate(inst)
        except InstanceFormatError as exc:
            raise UsageError(f"allocation {args.allocation}: {exc}") from None
        _emit({
            "proportional": is_proportional(inst, alloc),
            "envy_free": is_envy_free(inst, alloc),
        })
        return EXIT_OK
    limits = SearchLimits(args.max_agents, args.max_goods, args.node_budget)
    try:
        res = exists_proportional(inst, limits)
    except SearchLimitError as exc:
        _emit({"verdict": "Skipped", "reason": str(exc)})
        return EXIT_FAIL
    _emit(res.to_dict() | {"nodes": res.nodes})
    return EXIT_FAIL if res.verdict is Verdict.BUDGET_EXCEEDED else EXIT_OK


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"--n expects comma-separated integers, got {text!r}") from None


def _simulate_config(args) -> ExperimentConfig:
    if args.config:
        doc = _read_json(args.config, "config")
        if not isinstance(doc, dict):
            raise UsageError("config must be a JSON object")
        return ExperimentConfig.from_dict(doc)
    if args.n is None:
        raise UsageError("simulate needs --n (or --config)")
    return ExperimentConfig(
        regime=Regime.parse(args.regime),
        spec=parse_spec(args.dist),
        n_values=_int_list(args.n),
        trials=args.trials,
        seed=args.seed,
        oracle_check=args.oracle,
        beta_floor=args.beta_floor,
        delta=args.delta,
    )


def cmd_simulate(args) -> int:
    try:
        cfg = _simulate_config(args)
        cfg.margin()
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from None
    summary = run_experiment(cfg, threads=args.threads or default_threads())
    sys.stdout.write(summary.to_json() + "\n" if args.json else summary.to_csv())
    return EXIT_OK


def cmd_counterexample(args) -> int:
    try:
        if args.family == "remark1":
            inst = remark1_instance(args.n, args.seed)
        else:
            inst = remark2_instance(args.n, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    verdict = oracle_verdict(inst, SearchLimits())
    label = "Skipped" if verdict is None else ("Yes" if verdict else "No")
    _emit({"family": args.family, "seed": args.seed, "instance": inst.to_dict(),
           "verdict": label})
    return EXIT_OK


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def _add_margin_flags(p: argparse.ArgumentParser, dist_default: str = "uniform:0,1") -> None:
    p.add_argument("--dist", default=dist_default,
                   help="utility distribution: uniform:lo,hi | bernoulli:p | discrete:v,p;...")
    p.add_argument("--beta-floor", type=float, default=0.3,
                   help="minimum tail mass above the matching threshold (default 0.3)")
    p.add_argument("--delta", type=float, default=None,
                   help="explicit delta; overrides --beta-floor")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="propfair", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("allocate", help="run a divide-and-match allocator on an instance")
    p.add_argument("instance")
    p.add_argument("--theorem", type=int, choices=(1, 2), default=1)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--verify", action=argparse.BooleanOptionalAction, default=True)
    _add_margin_flags(p)
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("check", help="check an allocation, or decide existence exactly")
    p.add_argument("instance")
    p.add_argument("allocation", nargs="?")
    p.add_argument("--max-agents", type=int, default=6)
    p.add_argument("--max-goods", type=int, default=20)
    p.add_argument("--node-budget", type=int, default=10**8)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="Monte Carlo sweep; CSV on stdout")
    p.add_argument("--config", help="JSON experiment config (overrides the flags below)")
    p.add_argument("--regime", default="multiple:1",
                   help="multiple:k | superlinear:square|nlogn|pow=e | custom:m")
    p.add_argument("--n", help="comma-separated agent counts")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: $PROPFAIR_THREADS or CPU count)")
    p.add_argument("--json", action="store_true", help="emit the JSON summary instead of CSV")
    _add_margin_flags(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterexample", help="sample a family member that has no fair allocation")
    p.add_argument("family", choices=("remark1", "remark2"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.set_defaults(func=cmd_counterexample)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"propfair: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
