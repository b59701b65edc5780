"""Command-line front door: run experiments, sweep presets, verify kernels.

Exit codes: 0 success, 1 configuration error (bad flag, unknown name,
failed verification), 2 runtime error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from .harness import RunConfig, config_echo, run_replicated, write_csv
from .instances import (
    BUILTIN_NAMES,
    DEFAULT_HORIZONS,
    BanditInstance,
    InstanceError,
    builtin,
    load_instance,
)
from .policies import ConfigError, GradConfig, PolicyConfig, PolicyKind
from .verify import SUITE_NAMES, run_suites

_POLICY_FLAG = {
    "remax": PolicyKind.REMAX_EXACT,
    "remaxgrad": PolicyKind.REMAX_GRAD,
    "thompson": PolicyKind.THOMPSON,
    "klucb": PolicyKind.KLUCB,
}

PRESETS = ("synthetic", "realworld", "remaxgrad", "failure")


class _Parser(argparse.ArgumentParser):
    """argparse with flag errors mapped to the config-error exit code."""

    def error(self, message):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reps", type=int, default=200, help="replications (desk-scale default 200)")
    p.add_argument("--seed", type=int, default=0, help="64-bit master seed")
    p.add_argument("--threads", type=int, default=None,
                   help="worker processes (default: REMAX_THREADS or 1)")
    p.add_argument("--shared-noise", action="store_true",
                   help="share reward-noise streams across policies (common random numbers)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="remax-bandits", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("list-instances", help="list built-in instances")

    run_p = sub.add_parser("run", help="run one (instance, policy) experiment")
    run_p.add_argument("--instance", required=True, help="built-in name or @path to a file")
    run_p.add_argument("--policy", required=True, choices=sorted(_POLICY_FLAG))
    run_p.add_argument("--m", type=int, default=2, help="virtual draws for remaxgrad (>= 2)")
    run_p.add_argument("--inflation", type=float, default=1.0,
                       help="posterior std multiplier c (remax only)")
    run_p.add_argument("--horizon", type=int, default=None,
                       help="rounds T (default: the instance's published setting)")
    run_p.add_argument("--out", required=True, help="output CSV path")
    run_p.add_argument("--record-kkt", action="store_true",
                       help="record the per-round inner KKT gap (remaxgrad)")
    _add_common_run_flags(run_p)

    sweep_p = sub.add_parser("sweep", help="run a full experiment grid")
    sweep_p.add_argument("--preset", required=True, choices=PRESETS)
    sweep_p.add_argument("--out-dir", required=True, help="directory for one CSV per grid cell")
    sweep_p.add_argument("--horizon", type=int, default=None,
                         help="override every cell's horizon (default: published settings)")
    _add_common_run_flags(sweep_p)

    verify_p = sub.add_parser("verify", help="run the property suites")
    verify_p.add_argument("--suite", default="all", choices=("all",) + SUITE_NAMES + ("ratio",))
    verify_p.add_argument("--cases", type=int, default=None, help="cases per suite")
    verify_p.add_argument("--seed", type=int, default=0)
    return parser


def _resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return max(1, flag)
    env = os.environ.get("REMAX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"REMAX_THREADS must be an integer, got {env!r}") from None
    return 1


def _resolve_instance(spec: str) -> BanditInstance:
    if spec.startswith("@"):
        return load_instance(spec[1:])
    return builtin(spec)


def _policy_config(kind: PolicyKind, m: int, inflation: float) -> PolicyConfig:
    if kind is PolicyKind.REMAX_GRAD:
        return PolicyConfig(kind=kind, grad=GradConfig(m=m))
    if kind is PolicyKind.REMAX_EXACT:
        return PolicyConfig(kind=kind, inflation=inflation)
    return PolicyConfig(kind=kind)


def cmd_run(args: argparse.Namespace) -> int:
    instance = _resolve_instance(args.instance)
    horizon = args.horizon or DEFAULT_HORIZONS.get(instance.name, 20_000)
    policy = _policy_config(_POLICY_FLAG[args.policy], args.m, args.inflation)
    cfg = RunConfig(
        instance=instance,
        policy=policy,
        horizon=horizon,
        replications=args.reps,
        master_seed=args.seed,
        record_kkt=args.record_kkt,
        shared_noise=args.shared_noise,
    )
    series = run_replicated(cfg, threads=_resolve_threads(args.threads))
    write_csv(series, args.out, config_echo(cfg))
    print(f"wrote {args.out}")
    return 0


def _sweep_cells(preset: str) -> list[tuple[str, str, PolicyConfig]]:
    """(instance name, file stem suffix, policy) cells of one preset."""
    baselines = [
        ("remax", PolicyConfig(PolicyKind.REMAX_EXACT)),
        ("thompson", PolicyConfig(PolicyKind.THOMPSON)),
        ("klucb", PolicyConfig(PolicyKind.KLUCB)),
    ]
    cells: list[tuple[str, str, PolicyConfig]] = []
    if preset == "synthetic":
        for inst in ("two_arm", "three_arm", "ten_arm"):
            cells += [(inst, stem, cfg) for stem, cfg in baselines]
    elif preset == "realworld":
        for inst in ("obd", "movielens"):
            cells += [(inst, stem, cfg) for stem, cfg in baselines]
    elif preset == "remaxgrad":
        for inst in ("two_arm", "three_arm", "ten_arm"):
            for m in (2, 3, 4):
                cfg = PolicyConfig(PolicyKind.REMAX_GRAD, grad=GradConfig(m=m))
                cells.append((inst, f"remaxgrad_{m}", cfg))
            cells += [(inst, stem, cfg) for stem, cfg in baselines]
    elif preset == "failure":
        cells.append(("failure_mode", "remax", PolicyConfig(PolicyKind.REMAX_EXACT)))
        for c2 in (2, 3, 4):
            cfg = PolicyConfig(PolicyKind.REMAX_EXACT, inflation=math.sqrt(c2))
            cells.append(("failure_mode", f"remax_{c2}", cfg))
        cells += [("failure_mode", stem, cfg) for stem, cfg in baselines[1:]]
    else:
        raise ConfigError(f"unknown preset {preset!r}")
    return cells


def cmd_sweep(args: argparse.Namespace) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    threads = _resolve_threads(args.threads)
    for inst_name, stem, policy in _sweep_cells(args.preset):
        instance = builtin(inst_name)
        horizon = args.horizon or DEFAULT_HORIZONS[inst_name]
        cfg = RunConfig(
            instance=instance,
            policy=policy,
            horizon=horizon,
            replications=args.reps,
            master_seed=args.seed,
            record_kkt=policy.kind is PolicyKind.REMAX_GRAD,
            shared_noise=args.shared_noise,
        )
        out = out_dir / f"{args.preset}_{inst_name}_{stem}.csv"
        series = run_replicated(cfg, threads=threads)
        write_csv(series, out, config_echo(cfg))
        print(f"wrote {out}")
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    names = SUITE_NAMES if args.suite == "all" else (args.suite,)
    results = run_suites(names, cases=args.cases, seed=args.seed)
    width = max(len(r.suite) for r in results)
    all_passed = True
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.suite:<{width}}  {r.cases:>5} cases  {status}  {r.detail}")
        all_passed &= r.passed
    return 0 if all_passed else 1


def cmd_list_instances() -> int:
    print(f"{'name':<14} {'K':>3} {'reward_std':>10} {'best_mean':>10} {'horizon':>8}")
    for name in BUILTIN_NAMES:
        inst = builtin(name)
        print(
            f"{name:<14} {inst.k:>3} {inst.reward_std:>10.4g} "
            f"{inst.means[inst.best_arm]:>10.6g} {DEFAULT_HORIZONS[name]:>8}"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "list-instances":
            return cmd_list_instances()
        if args.command == "run":
            return cmd_run(args)
        if args.command == "sweep":
            return cmd_sweep(args)
        if args.command == "verify":
            return cmd_verify(args)
        raise ConfigError(f"unknown command {args.command!r}")
    except (ConfigError, InstanceError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
