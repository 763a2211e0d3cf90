"""``restartopt`` command line: run, compare, gradcheck, synth, audit."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .core import RestartOptError


def _load(args) -> harness.ExperimentConfig:
    cfg = harness.ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seeds = [args.seed]
    if args.out is not None:
        cfg.out = Path(args.out)
    if args.budget is not None:
        if args.budget < 1:
            raise harness.ConfigError("--budget must be positive")
        cfg.iterations = args.budget
    if args.mode is not None:
        for spec in cfg.methods:
            spec.mode = args.mode
    return cfg


def _cmd_run(args) -> int:
    cfg = _load(args)
    summary = harness.run_experiment(cfg, audit=args.audit, wall_time=args.wall_time)
    failed = False
    for e in summary["runs"]:
        if e["status"] != "ok":
            print(f"{e['label']} seed={e['seed']}: {e['status']} ({e['error']})")
            continue
        line = (f"{e['label']} seed={e['seed']}: grad_norm={e['output_grad_norm']:.3e} "
                f"grad_evals={e['grad_evals']} fn_evals={e['fn_evals']} "
                f"terminated={e['terminated']}")
        print(line)
        for rep in e.get("audit", []):
            status = "PASS" if rep["passed"] else "FAIL"
            print(f"  {status} {rep['name']} ({len(rep['violations'])} violations)")
            failed = failed or not rep["passed"]
    print(f"wrote {cfg.out / 'summary.json'}")
    return 1 if failed else 0


def _cmd_compare(args) -> int:
    cfg = _load(args)
    tables = harness.compare_experiment(cfg)
    for seed, t in tables.items():
        print(f"seed {seed}: final common evaluation count {t['common_evals']}")
        for label, g in t["best_grad_at_common"].items():
            print(f"  {label}: best grad_norm {g:.3e}")
        print(f"  table: {cfg.out / f'compare_seed{seed}.csv'}")
    return 0


def _cmd_gradcheck(args) -> int:
    if args.problem is not None:
        spec = json.loads(args.problem)
    else:
        spec = harness.ExperimentConfig.load(args.config).problem
    reports = harness.gradcheck(spec, args.seed if args.seed is not None else 0,
                                args.h, args.rel_tol)
    ok = True
    for i, rep in enumerate(reports):
        status = "pass" if rep.passed else "FAIL"
        print(f"point {i}: {status} max_rel_err={rep.max_rel_err:.3e} "
              f"worst_coordinate={rep.worst_coordinate}")
        ok = ok and rep.passed
    return 0 if ok else 1


def _cmd_synth(args) -> int:
    n = harness.synth(args.m, args.n, args.r, args.density, args.noise, args.seed, args.out)
    print(f"wrote {n} entries to {args.out}")
    return 0


def _cmd_audit(args) -> int:
    found = harness.audit_directory(args.run_dir)
    if not found:
        print(f"no auditable runs in {args.run_dir}")
        return 1
    ok = True
    for name, rep in found:
        print(f"{name}: {rep.format()}")
        ok = ok and rep.passed
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="restartopt")
    sub = parser.add_subparsers(dest="command", required=True)

    def experiment_flags(p):
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, help="run this single seed instead")
        p.add_argument("--out", help="output directory")
        p.add_argument("--budget", type=int, help="iterations per method")
        mode = p.add_mutually_exclusive_group()
        mode.add_argument("--strict", dest="mode", action="store_const", const="strict")
        mode.add_argument("--practical", dest="mode", action="store_const", const="practical")

    p = sub.add_parser("run", help="run every (method, seed) pair")
    experiment_flags(p)
    p.add_argument("--audit", action="store_true", help="run the monitors on each run")
    p.add_argument("--wall-time", action="store_true",
                   help="record elapsed seconds in the CSVs (breaks byte-identity)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("compare", help="best-so-far table on the evaluation-count axis")
    experiment_flags(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("gradcheck", help="finite-difference check at 5 seeded points")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="take the problem from this config")
    src.add_argument("--problem", help="problem spec as inline JSON")
    p.add_argument("--seed", type=int)
    p.add_argument("--h", type=float, default=1e-5)
    p.add_argument("--rel-tol", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("synth", help="write a synthetic completion instance (COO)")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--density", type=float, required=True)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("audit", help="re-run the monitors over a run directory")
    p.add_argument("run_dir")
    p.set_defaults(func=_cmd_audit)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (RestartOptError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
