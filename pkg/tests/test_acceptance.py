"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

The lines are repeated in a summary section at the end of the pytest run.
"""

import dataclasses
import json
import time
from functools import lru_cache

import numpy as np
import pytest

from restartopt import cli, harness
from restartopt.baselines import run_gd
from restartopt.core import (
    AdaptiveParams,
    BudgetExhausted,
    EpochTranscript,
    EvalCounter,
    PerturbParams,
    RagdParams,
    RunResult,
    practical_params,
    theorem1_params,
    theorem3_params,
    theorem4_params,
)
from restartopt.problems import cosine_problem, generate_synthetic_mc, generate_synthetic_one_bit
from restartopt.problems import matrix_completion_problem, one_bit_problem
from restartopt.ragd import run_ada_ragd, run_perturbed_ragd, run_ragd
from restartopt.rhb import run_hb, run_rhb
from restartopt.verify import (
    check_gradient,
    check_trajectory_equivalence,
    monitor_epoch_descent,
    monitor_output_and_budget,
    monitor_restart_bookkeeping,
    with_corrupted_gradient,
)

COS10 = cosine_problem(10)
EPS1 = 1e-2
EPS4 = 1.6e-7


def _start(seed):
    return np.random.default_rng(seed).uniform(-3, 3, 10)


@lru_cache(maxsize=None)
def ragd_runs():
    params = theorem1_params(1.0, 1.0, EPS1)
    t0 = time.perf_counter()
    runs = [run_ragd(COS10, params, _start(s)) for s in range(20)]
    return params, runs, time.perf_counter() - t0


@lru_cache(maxsize=None)
def rhb_runs():
    params = theorem4_params(1.0, 1.0, EPS4)
    return params, [run_rhb(COS10, params, _start(s)) for s in range(10)]


def test_criterion_1_theorem1_suite(criterion):
    params, runs, elapsed = ragd_runs()
    passes = 0
    worst = 0.0
    for s, res in enumerate(runs):
        # the gap uses the known lower bound -d of the cosine testbed
        delta_f = COS10.value(_start(s)) + 10
        gnorm = float(np.linalg.norm(COS10.gradient(res.output)))
        worst = max(worst, gnorm)
        ok = (res.terminated and gnorm <= 82 * EPS1
              and res.counters.grad_evals <= delta_f * EPS1**-1.75
              and monitor_output_and_budget(res, params, COS10, delta_f, "ragd").passed)
        passes += ok
    criterion(1, passes == 20 and elapsed < 10.0,
              f"{passes}/20 runs meet grad <= 0.82 and the gradient budget "
              f"(worst grad {worst:.3e}, {elapsed:.2f}s)")


def test_criterion_2_ragd_epoch_descent(criterion):
    params, runs, _ = ragd_runs()
    reports = [monitor_epoch_descent(r, params, COS10, "ragd") for r in runs]
    violations = sum(len(r.violations) for r in reports)
    checked = sum(r.epochs_checked for r in reports)
    criterion(2, violations == 0 and checked > 0,
              f"{violations} descent violations over {checked} restarted epochs "
              f"(bound -8.75e-4)")


def test_criterion_3_theorem4_suite(criterion):
    params, runs = rhb_runs()
    bad = 0
    worst = 0.0
    for s, res in enumerate(runs):
        gnorm = float(np.linalg.norm(COS10.gradient(res.output)))
        worst = max(worst, gnorm)
        descent = monitor_epoch_descent(res, params, COS10, "rhb")
        bad += (not res.terminated) + (gnorm > 242 * EPS4) + len(descent.violations)
    criterion(3, bad == 0 and params.theta == pytest.approx(0.1, rel=1e-12),
              f"{bad} violations over 10 seeds (worst grad {worst:.3e} vs {242 * EPS4:.3e})")


def test_criterion_4_restart_bookkeeping(criterion):
    p1, runs1, _ = ragd_runs()
    p3, runs3 = rhb_runs()
    violations = sum(len(monitor_restart_bookkeeping(r, p1).violations) for r in runs1)
    violations += sum(len(monitor_restart_bookkeeping(r, p3).violations) for r in runs3)
    b = p1.big_b
    boundary = EpochTranscript(index=0, anchor=np.zeros(10), steps_taken=1, disp_norms=[b],
                               ended_by_restart=True, restart_trigger_k=1,
                               anchor_dists=[0.0, b])
    fake = RunResult(output=np.zeros(10), output_grad_norm=0.0, counters=EvalCounter(),
                     epochs_completed=1, restart_iters=[1], trace=[], terminated=True,
                     epochs=[boundary])
    flagged = not monitor_restart_bookkeeping(fake, p1).passed
    criterion(4, violations == 0 and flagged,
              f"{violations} violations over 30 runs; boundary case flagged={flagged}")


def test_criterion_5_equivalences(criterion):
    x0 = _start(0)
    theta1 = RagdParams(eta=0.25, theta=1.0, big_b=1e9, big_k=10**6, epsilon=EPS1, rho=1.0)
    with pytest.warns(BudgetExhausted):
        a = run_ragd(COS10, theta1, x0, budget=100, keep_iterates=True)
    gd = run_gd(COS10, 0.25, x0, 100, keep_iterates=True)
    gd_ok = len(a.iterates) == 101 and check_trajectory_equivalence(a, gd, 1e-12)

    direct = run_hb(COS10, 0.25, 0.1, x0, 100, "direct")
    momentum = run_hb(COS10, 0.25, 0.1, x0, 100, "momentum")
    hb_ok = check_trajectory_equivalence(direct, momentum, 1e-10)

    params = theorem1_params(1.0, 1.0, EPS1)
    ada = AdaptiveParams(b0_init=params.big_b, gamma=7 / 8, c0=2.0, c1=2.0)
    ada_ok = True
    for s in range(5):
        r = run_ragd(COS10, params, _start(s), keep_iterates=True)
        q = run_ada_ragd(COS10, params, ada, _start(s), keep_iterates=True)
        ada_ok &= all(ep.accepted for ep in q.epochs if ep.ended_by_restart)
        ada_ok &= check_trajectory_equivalence(r, q, 0.0) and r.restart_iters == q.restart_iters
    criterion(5, gd_ok and hb_ok and ada_ok,
              f"ragd(theta=1)=gd {gd_ok}, hb forms {hb_ok}, ada-ragd=ragd {ada_ok}")


def test_criterion_6_gradient_oracle(criterion):
    mc = matrix_completion_problem(generate_synthetic_mc(20, 15, 3, 0.4, 0.1, 6), 3)
    ob = one_bit_problem(generate_synthetic_one_bit(20, 15, 3, 0.4, 6), 3)
    rng = np.random.default_rng(6)
    passed = 0
    for p in (mc, ob):
        for _ in range(5):
            passed += check_gradient(p, rng.standard_normal(p.dim), 1e-5, 1e-4).passed
    corrupted = with_corrupted_gradient(mc, 11)
    caught = not check_gradient(corrupted, rng.standard_normal(mc.dim), 1e-5, 1e-4).passed
    criterion(6, passed == 10 and caught,
              f"{passed}/10 points pass; corrupted gradient caught={caught}")


MC_PROBLEM = {"kind": "synthetic_mc", "m": 200, "n": 100, "r": 5, "density": 0.3,
              "noise": 0.01, "seed": 7}
ETA_GRID = [2.0**k for k in range(1, 9)]


def test_criterion_7_acceleration_regression(criterion, tmp_path):
    cfg = harness.ExperimentConfig.from_dict({
        "problem": MC_PROBLEM,
        "init": {"kind": "svd"},
        "methods": [
            {"name": "gd", "eta_grid": ETA_GRID},
            {"name": "ada-ragd", "label": "ada-ragd-nc", "preset": "paper-practical",
             "eta_grid": ETA_GRID},
            {"name": "ada-rhb", "label": "ada-rhb-nc", "preset": "paper-practical",
             "eta_grid": ETA_GRID},
        ],
        "iterations": 1000,
        "seeds": [7],
        "out": str(tmp_path),
    })
    summary, results = harness._run_all(cfg, False, False, None)
    cmp = harness.compare_results({lab: results[(lab, 7)]
                                   for lab in ("gd", "ada-ragd-nc", "ada-rhb-nc")})
    best = cmp["best_grad_at_common"]
    etas = {r["label"]: r.get("tuned_eta") for r in summary["runs"]}
    ok = best["ada-ragd-nc"] <= best["gd"] and best["ada-rhb-nc"] <= best["gd"]
    criterion(7, ok, f"at {cmp['common_evals']} evals best grad: gd {best['gd']:.2e}, "
                     f"ada-ragd {best['ada-ragd-nc']:.2e}, ada-rhb {best['ada-rhb-nc']:.2e} "
                     f"(eta {etas})")


def test_criterion_8_perturbed_contract(criterion):
    params, pert = theorem3_params(1.0, 1.0, EPS1, 10, 0.1)
    # a practical setting with many restarts exercises both branches of the indicator
    loose = practical_params(0.25, 1.0, EPS1, 2.0)
    loose = dataclasses.replace(loose, big_b=0.1, big_k=5)
    radius = 0.05
    kicks = skips = bad = 0
    for s in range(5):
        res = run_perturbed_ragd(COS10, loose, PerturbParams(1.0, radius, 0.5, seed=s),
                                 _start(s))
        # the trace row of each restarting step holds ||grad f(y^{K-1})||
        grads = [t.grad_norm for t in res.trace if t.restarted]
        for ep, g in zip([e for e in res.epochs if e.ended_by_restart], grads):
            if ep.perturbation is not None:
                kicks += 1
                bad += np.linalg.norm(ep.perturbation) > radius or g > loose.big_b / loose.eta
            else:
                skips += 1
                bad += g <= loose.big_b / loose.eta
    same = True
    for s in range(5):
        a = run_ragd(COS10, params, _start(s), keep_iterates=True)
        b = run_perturbed_ragd(COS10, params, dataclasses.replace(pert, radius=0.0, seed=s),
                               _start(s), keep_iterates=True)
        same &= np.array_equal(a.output, b.output) and check_trajectory_equivalence(a, b, 0.0)
    criterion(8, bad == 0 and kicks > 0 and skips > 0 and same,
              f"{kicks} perturbations within r and under the indicator, {skips} skipped, "
              f"{bad} contract breaks; r=0 bit-identical={same}")


def test_criterion_9_cli_determinism(criterion, tmp_path):
    cfg = {
        "problem": {"kind": "synthetic_mc", "m": 40, "n": 30, "r": 3, "density": 0.3,
                    "noise": 0.01, "seed": 1},
        "methods": [
            {"name": "gd", "eta": 4.0},
            {"name": "ada-ragd", "preset": "paper-practical", "eta": 8.0},
            {"name": "ada-rhb", "preset": "paper-practical", "eta": 8.0},
            {"name": "nlcg", "eta": 8.0},
            {"name": "perturbed-ragd", "mode": "practical", "eta": 4.0, "radius": 1e-3},
        ],
        "iterations": 300,
        "seeds": [0, 1],
    }
    dirs = []
    for name in ("first", "second"):
        out = tmp_path / name
        path = tmp_path / f"{name}.json"
        path.write_text(json.dumps({**cfg, "out": str(out)}))
        assert cli.main(["run", "--config", str(path)]) == 0
        dirs.append(out)
    csvs = sorted(p.name for p in dirs[0].glob("*.csv"))
    same = bool(csvs) and all((dirs[0] / n).read_bytes() == (dirs[1] / n).read_bytes()
                              for n in csvs)
    criterion(9, same and len(csvs) == 10, f"{len(csvs)} CSVs byte-identical across reruns={same}")
