"""``bench`` command line: run experiments, fit rates, validate schedules."""

from __future__ import annotations

import argparse
import json
import sys

from .bench import ExperimentConfig, CacheMissError, fit_rate_csv, run_experiment
from .schedule import ParameterSchedule, validate_schedule


def _add_schedule(p, defaults=True):
    p.add_argument("--a", type=float, default=0.0)
    p.add_argument("--b", type=float, default=0.0)
    p.add_argument("--delta", type=float, default=None,
                   help="smoothing exponent (default 1/2 if b = 0, else 2b + 0.01)")
    p.add_argument("--rho", type=float, default=None,
                   help="constant penalty (default 2^(2-b)/c + 1)")
    p.add_argument("--c", type=float, default=1.0)


def build_parser():
    ap = argparse.ArgumentParser(prog="bench", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run one experiment and write CSV + summary JSON")
    r.add_argument("--experiment", choices=("projection", "matcomp"), required=True)
    r.add_argument("--n", dest="N", type=int, default=32)
    r.add_argument("--density", type=float, default=0.8)
    _add_schedule(r)
    r.add_argument("--iters", type=int, default=10_000)
    r.add_argument("--ref-iters", type=int, default=100_000)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out", default="bench-out")
    r.add_argument("--solver", choices=("cgalp", "gfb", "both"), default="both",
                   help="matcomp only; projection always runs CGALP")
    r.add_argument("--ref", type=float, nargs=5, metavar=("A", "B", "DELTA", "RHO", "C"),
                   default=None, help="schedule of the CGALP reference run")
    r.add_argument("--stride", type=int, default=1, help="write every stride-th row")
    r.add_argument("--record-time", action="store_true",
                   help="add a wall_time_s column (breaks byte-identical output)")
    r.add_argument("--no-ref", action="store_true",
                   help="fail instead of computing a missing reference")

    f = sub.add_parser("fit", help="log-log slope of a CSV column")
    f.add_argument("--in", dest="path", required=True)
    f.add_argument("--column", required=True)
    f.add_argument("--k-lo", type=float, required=True)
    f.add_argument("--k-hi", type=float, required=True)

    v = sub.add_parser("validate-schedule", help="check a schedule against (P.1)-(P.7)")
    _add_schedule(v)
    v.add_argument("--horizon", type=int, default=10**6)
    return ap


def _schedule(args) -> ParameterSchedule:
    return ExperimentConfig(a=args.a, b=args.b, delta=args.delta, rho=args.rho, c=args.c,
                            iters=1, ref_iters=1).schedule


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.cmd == "run":
        solvers = ("cgalp", "gfb") if args.solver == "both" else (args.solver,)
        if args.experiment == "projection":
            solvers = ("cgalp",)
        try:
            cfg = ExperimentConfig(
                experiment=args.experiment, N=args.N, density=args.density, a=args.a,
                b=args.b, delta=args.delta, rho=args.rho, c=args.c, iters=args.iters,
                ref_iters=args.ref_iters, seed=args.seed, out=args.out, solvers=solvers,
                ref=tuple(args.ref) if args.ref else None, stride=args.stride,
                record_time=args.record_time, allow_ref=not args.no_ref)
            summary = run_experiment(cfg)
        except (ValueError, CacheMissError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        summary.pop("traces")
        print(json.dumps({k: summary[k] for k in summary if k != "config"}, indent=2,
                         default=str))
        return 0
    if args.cmd == "fit":
        try:
            fit = fit_rate_csv(args.path, args.column, args.k_lo, args.k_hi)
        except (ValueError, KeyError, OSError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print(json.dumps(fit._asdict(), indent=2))
        return 0
    report = validate_schedule(_schedule(args), horizon=args.horizon)
    print(report)
    return 0 if report.ok else 1


if __name__ == "__main__":
    sys.exit(main())
