"""Command-line interface.

Subcommands: constants, simulate, verify-kernels, verify-quantizer,
verify-openloop, acceptance.  `simulate` accepts a config path or the
name of a shipped preset and exits 0 on success, 2 when the closed-loop
trajectory violates its theorem bound, 3 when the budget certificate
fails.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from importlib import resources
from pathlib import Path

import numpy as np

from . import backend
from .config import ConfigError, parse_config, parse_text
from .kernels import ParameterError
from .runner import (InfeasibleBudgetError, format_ledger, run_scenario,
                     write_csv, write_ledger_flat, build_problem)

PRESETS = ("openloop-eigen", "exact-predictor", "state-quant-ref", "input-quant-ref")


def resolve_config(name_or_path: str):
    p = Path(name_or_path)
    if p.exists():
        return parse_config(p)
    if name_or_path in PRESETS:
        text = resources.files("delayquant.presets").joinpath(
            name_or_path + ".cfg").read_text(encoding="utf-8")
        return parse_text(text)
    raise ConfigError(f"no such config file or preset: {name_or_path!r} "
                      f"(presets: {', '.join(PRESETS)})")


def _cmd_constants(args) -> int:
    cfg = resolve_config(args.config)
    prob = build_problem(cfg)
    print(format_ledger(prob.constants, prob.certificate))
    if args.out:
        write_ledger_flat(prob.constants, args.out, prob.certificate)
        print(f"flat ledger written to {args.out}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = resolve_config(args.config)
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.stride is not None:
        cfg = replace(cfg, stride=args.stride)
    try:
        traj = run_scenario(cfg)
    except InfeasibleBudgetError as exc:
        print(exc.certificate.describe(), file=sys.stderr)
        return 3
    out = args.out or "trajectory.csv"
    write_csv(traj, out)
    print(f"[{backend.BACKEND}] {traj.times.size} records -> {out}")
    if traj.t0 is not None:
        print(f"detection at t0 = {traj.t0:.6g}; "
              f"mu(t0) = {traj.mu[np.searchsorted(traj.times, traj.t0)]:.6g}")
    if traj.bound_report is not None:
        print(traj.bound_report.describe())
        if not traj.bound_report.ok:
            return 2
    return 0


def _cmd_verify_kernels(args) -> int:
    from .verify import verify_kernels

    report = verify_kernels(args.lam, args.delay, args.nx, args.modes)
    print(report.text)
    return 0 if report.passed else 1


def _cmd_verify_quantizer(args) -> int:
    from .quantizers import QuantizerSpec, verify_properties

    spec = QuantizerSpec(args.range, args.delta,
                         args.deadzone if args.deadzone else args.delta / 2.0)
    report = verify_properties(spec, args.samples, args.seed)
    print(report.describe())
    print(f"quantizer-verify pass={int(report.passed)} samples={args.samples} "
          f"seed={args.seed} violations={len(report.violations)}")
    return 0 if report.passed else 1


def _cmd_verify_openloop(args) -> int:
    from .verify import verify_open_loop

    report = verify_open_loop(count=args.count, horizon=args.horizon, seed=args.seed)
    print(report.text)
    return 0 if report.passed else 1


def _cmd_acceptance(args) -> int:
    from .acceptance import run_acceptance

    return run_acceptance(zero_tolerance=args.zero_tolerance)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="delayquant",
        description="Quantized predictor feedback for a delayed reaction-diffusion "
                    "plant: simulation, constants, and verification suites.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="print the design-constant ledger")
    p.add_argument("config", help="config file or preset name")
    p.add_argument("--out", help="also write a machine-readable flat file")
    p.set_defaults(func=_cmd_constants)

    p = sub.add_parser("simulate", help="run a scenario and write the CSV trajectory")
    p.add_argument("config", help="config file or preset name")
    p.add_argument("--out", help="CSV output path (default trajectory.csv)")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--stride", type=int, help="override the record stride")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("verify-kernels", help="kernel oracles and series convergence")
    p.add_argument("--lam", type=float, default=11.0)
    p.add_argument("--delay", type=float, default=0.1)
    p.add_argument("--nx", type=int, default=200)
    p.add_argument("--modes", type=int, default=60)
    p.set_defaults(func=_cmd_verify_kernels)

    p = sub.add_parser("verify-quantizer", help="randomized quantizer property check")
    p.add_argument("--range", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--deadzone", type=float, default=0.0)
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify_quantizer)

    p = sub.add_parser("verify-openloop", help="open-loop growth-bound sweep")
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--horizon", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_verify_openloop)

    p = sub.add_parser("acceptance", help="run the acceptance suite")
    p.add_argument("--zero-tolerance", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=_cmd_acceptance)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
