"""Experiment configs, batch runs, trace export and comparison tables.

A config is a JSON object::

    {
      "problem": {"kind": "synthetic_mc", "m": 200, "n": 100, "r": 5,
                  "density": 0.3, "noise": 0.01, "seed": 7},
      "init": {"kind": "svd"},
      "methods": [
        {"name": "ada-ragd", "preset": "paper-practical", "eta": 32},
        {"name": "gd", "eta": 8}
      ],
      "iterations": 1000,
      "seeds": [7],
      "out": "runs/mc"
    }

Every (method, seed) pair writes ``<label>_seed<s>.csv`` and
``<label>_seed<s>.json`` into the output directory; ``summary.json`` is
written once after all runs finish.
"""

from __future__ import annotations

import csv
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import baselines, problems, ragd, rhb, verify
from .core import (
    AdaptiveParams,
    BudgetExhausted,
    EpochTranscript,
    EvalCounter,
    LinearSchedule,
    NonFiniteError,
    PerturbParams,
    Problem,
    RagdParams,
    RestartOptError,
    RhbParams,
    RunResult,
    practical_params,
    theorem1_params,
    theorem3_params,
    theorem4_params,
)

METHODS = ("gd", "heuristic-ragd", "nlcg", "ragd", "rhb", "ada-ragd", "ada-rhb",
           "perturbed-ragd")
RESTARTED = ("ragd", "rhb", "ada-ragd", "ada-rhb", "perturbed-ragd")
BASELINES = ("gd", "heuristic-ragd", "nlcg")

CSV_COLUMNS = ("iter", "epoch", "f", "grad_norm", "grad_evals", "fn_evals",
               "replay_grad_evals", "restarted", "wall_time_s")

# experiment settings for the factorized benchmarks
PAPER_PRACTICAL: dict[str, Any] = {
    "epsilon": 1e-4,
    "theta_coeff": 0.005,
    "rho": 1.0,
    "gamma": 1e-5,
    "b0": 100.0,
    "c0": {"linear": [1.0, 0.001]},
    "c1": 10.0,
    "c2": 2.0,
    "eta_min_factor": 2.0**-10,
    "lipschitz_mode": "unknown-lipschitz",
}

PRESETS = {"paper-practical": PAPER_PRACTICAL}


class ConfigError(RestartOptError, ValueError):
    pass


@dataclass
class MethodSpec:
    name: str
    label: str
    mode: str = "practical"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "MethodSpec":
        if not isinstance(d, dict) or "name" not in d:
            raise ConfigError("each method needs a 'name'")
        d = dict(d)
        name = d.pop("name")
        if name not in METHODS:
            raise ConfigError(f"unknown method {name!r}; expected one of {METHODS}")
        label = d.pop("label", name)
        preset = d.pop("preset", None)
        params: dict = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}")
            params.update(PRESETS[preset])
        mode = d.pop("mode", "practical" if preset else "strict")
        if mode not in ("strict", "practical"):
            raise ConfigError(f"mode must be 'strict' or 'practical', got {mode!r}")
        params.update(d)
        return cls(name=name, label=label, mode=mode, params=params)


@dataclass
class ExperimentConfig:
    problem: dict
    methods: list[MethodSpec]
    iterations: int
    seeds: list[int]
    out: Path
    init: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        if "problem" not in d or "kind" not in d.get("problem", {}):
            raise ConfigError("config needs a problem with a 'kind'")
        raw_methods = d.get("methods") or []
        if not raw_methods:
            raise ConfigError("config needs at least one method")
        methods = [MethodSpec.from_dict(m) for m in raw_methods]
        labels = [m.label for m in methods]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"method labels must be unique, got {labels}")
        iterations = d.get("iterations", 1000)
        if not isinstance(iterations, int) or iterations < 1:
            raise ConfigError("iterations must be a positive integer")
        seeds = d.get("seeds", [0])
        if not seeds or not all(isinstance(s, int) for s in seeds):
            raise ConfigError("seeds must be a nonempty list of integers")
        return cls(problem=dict(d["problem"]), methods=methods, iterations=iterations,
                   seeds=list(seeds), out=Path(d.get("out", "runs")),
                   init=dict(d.get("init", {})))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(raw)


# --- problems and starting points ---


@dataclass
class BuiltProblem:
    problem: Problem
    data: Optional[problems.ObservedMatrix] = None
    rank: Optional[int] = None


def _req(spec: dict, key: str):
    if key not in spec:
        raise ConfigError(f"problem kind {spec.get('kind')!r} needs {key!r}")
    return spec[key]


def build_problem(spec: dict) -> BuiltProblem:
    kind = spec.get("kind")
    if kind == "cosine":
        built = BuiltProblem(problems.cosine_problem(int(spec.get("d", 10))))
    elif kind == "quadratic":
        built = BuiltProblem(problems.diag_quadratic_problem(_req(spec, "lambdas")))
    elif kind in ("synthetic_mc", "synthetic_one_bit", "ratings_csv", "coo"):
        r = int(_req(spec, "r"))
        if kind == "synthetic_mc":
            data = problems.generate_synthetic_mc(
                int(_req(spec, "m")), int(_req(spec, "n")), r, float(_req(spec, "density")),
                float(spec.get("noise", 0.0)), int(spec.get("seed", 0)))
        elif kind == "synthetic_one_bit":
            data = problems.generate_synthetic_one_bit(
                int(_req(spec, "m")), int(_req(spec, "n")), r, float(_req(spec, "density")),
                int(spec.get("seed", 0)))
        elif kind == "ratings_csv":
            data = problems.load_ratings_csv(_req(spec, "path"))
        else:
            data = problems.load_coo(_req(spec, "path"), spec.get("m"), spec.get("n"))
        loss = spec.get("loss", "one_bit" if kind == "synthetic_one_bit" else "squared")
        if loss == "squared":
            prob = problems.matrix_completion_problem(data, r)
        elif loss == "one_bit":
            prob = problems.one_bit_problem(data, r)
        else:
            raise ConfigError(f"unknown loss {loss!r}")
        built = BuiltProblem(prob, data, r)
    else:
        raise ConfigError(f"unknown problem kind {kind!r}")
    if "corrupt_coordinate" in spec:
        built.problem = verify.with_corrupted_gradient(built.problem,
                                                       int(spec["corrupt_coordinate"]))
    return built


def initial_point(built: BuiltProblem, init: dict, seed: int) -> np.ndarray:
    kind = init.get("kind", "svd" if built.data is not None else "uniform")
    if kind == "uniform":
        rng = np.random.default_rng(seed)
        return rng.uniform(init.get("low", -3.0), init.get("high", 3.0), built.problem.dim)
    if kind == "zeros":
        return np.zeros(built.problem.dim)
    if kind == "svd":
        if built.data is None:
            raise ConfigError("svd initialization needs a matrix problem")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", problems.ConvergenceWarning)
            return problems.svd_init(built.data, built.rank, seed=seed).flatten()
    raise ConfigError(f"unknown init kind {kind!r}")


# --- method dispatch ---


def _schedule(c0):
    if isinstance(c0, dict) and "linear" in c0:
        a, b = c0["linear"]
        return LinearSchedule(float(a), float(b))
    return float(c0)


def _smoothness(problem: Problem, p: dict) -> tuple[float, float]:
    L = p.get("L", problem.lipschitz_gradient)
    rho = p.get("rho", problem.lipschitz_hessian)
    if L is None or rho is None:
        raise ConfigError(f"strict mode needs known L and rho for {problem.name}")
    return float(L), float(rho)


def _need(p: dict, key: str, method: str):
    if key not in p:
        raise ConfigError(f"method {method!r} needs {key!r}")
    return p[key]


def resolve_params(spec: MethodSpec, problem: Problem, eta: Optional[float] = None):
    """Turn a method spec into ``(params, adaptive, perturb, mode)`` for the driver."""
    p, name = spec.params, spec.name
    heavy = name in ("rhb", "ada-rhb")
    family = "rhb" if heavy else "ragd"
    if spec.mode == "strict":
        L, rho = _smoothness(problem, p)
        eps = float(_need(p, "epsilon", name))
        if name == "perturbed-ragd":
            params, perturb = theorem3_params(L, rho, eps, problem.dim,
                                              float(p.get("zeta", 0.1)))
            return params, perturb, "known"
        params = theorem4_params(L, rho, eps) if heavy else theorem1_params(L, rho, eps)
        ada = None
        if name.startswith("ada-"):
            ada = AdaptiveParams(b0_init=float(p.get("b0", 1.0)),
                                 gamma=float(p.get("gamma", 7 / 8 if not heavy else 1.0)),
                                 c0=_schedule(p.get("c0", 2.0)), c1=float(p.get("c1", 2.0)))
        return params, ada, "known"

    eta = float(eta if eta is not None else _need(p, "eta", name))
    params = practical_params(eta, float(p.get("rho", 1.0)), float(p.get("epsilon", 1e-4)),
                              float(p.get("theta_coeff", 0.005)), family,
                              b_divisor=float(p.get("b_divisor", 1.0)))
    if name == "perturbed-ragd":
        return params, PerturbParams(chi=1.0, radius=float(p.get("radius", 0.0)),
                                     zeta=float(p.get("zeta", 0.5))), "known"
    if not name.startswith("ada-"):
        return params, None, "known"
    lmode = p.get("lipschitz_mode", "known")
    common = dict(b0_init=float(p.get("b0", 100.0)), gamma=float(p.get("gamma", 1e-5)),
                  c0=_schedule(p.get("c0", 2.0)), c1=float(p.get("c1", 10.0)))
    if lmode == "unknown-lipschitz":
        ada = AdaptiveParams.unknown_lipschitz(
            params, c2=float(p.get("c2", 2.0)),
            eta_min=eta * float(p.get("eta_min_factor", 2.0**-10)), **common)
    elif lmode == "known":
        ada = AdaptiveParams(**common)
    else:
        raise ConfigError(f"unknown lipschitz_mode {lmode!r}")
    return params, ada, lmode


def run_method(spec: MethodSpec, problem: Problem, x0: np.ndarray, iterations: int,
               seed: int, eta: Optional[float] = None) -> RunResult:
    """Run one method once; ``eta`` overrides the configured step size."""
    name, p = spec.name, spec.params
    if name in BASELINES:
        step = float(eta if eta is not None else _need(p, "eta", name))
        with np.errstate(over="ignore", invalid="ignore"):
            return _run_baseline(name, p, problem, step, x0, iterations)

    params, extra, lmode = resolve_params(spec, problem, eta)
    # divergence surfaces as NonFiniteError; numpy's overflow chatter adds nothing
    with warnings.catch_warnings(), np.errstate(over="ignore", invalid="ignore"):
        warnings.simplefilter("ignore", BudgetExhausted)
        if name == "ragd":
            return ragd.run_ragd(problem, params, x0, iterations)
        if name == "rhb":
            return rhb.run_rhb(problem, params, x0, iterations)
        if name == "perturbed-ragd":
            perturb = PerturbParams(extra.chi, extra.radius, extra.zeta, seed)
            return ragd.run_perturbed_ragd(problem, params, perturb, x0, iterations)
        driver = ragd.run_ada_ragd if name == "ada-ragd" else rhb.run_ada_rhb
        return driver(problem, params, extra, x0, mode=lmode, budget=iterations)


def _run_baseline(name, p, problem, step, x0, iterations):
    if name == "gd":
        return baselines.run_gd(problem, step, x0, iterations)
    if name == "heuristic-ragd":
        return baselines.run_heuristic_ragd(problem, step, x0, iterations)
    ls = baselines.LineSearchConfig(step, int(p.get("max_halvings", 10)))
    return baselines.run_nlcg(problem, ls, x0, iterations)


def best_grad_within(result: RunResult, evals: int) -> float:
    """Best-so-far gradient norm among trace rows with ``grad + fn <= evals``."""
    vals = [t.grad_norm for t in result.trace if t.grad_evals + t.fn_evals <= evals]
    return min(vals) if vals else math.inf


def tune_eta(spec: MethodSpec, problem: Problem, x0: np.ndarray, iterations: int,
             seed: int) -> tuple[float, RunResult]:
    """Pick the step in ``eta_grid`` with the smallest best-so-far gradient norm.

    Runs are scored at an equal cost of ``iterations`` evaluations; a
    diverging step scores ``inf``. Ties go to the earlier grid entry.
    """
    best = None
    for eta in spec.params["eta_grid"]:
        try:
            res = run_method(spec, problem, x0, iterations, seed, eta=float(eta))
        except NonFiniteError:
            continue
        score = best_grad_within(res, iterations)
        if best is None or score < best[0]:
            best = (score, float(eta), res)
    if best is None:
        raise NonFiniteError(f"every step in eta_grid diverged for {spec.label}")
    return best[1], best[2]


# --- serialization ---


def _fmt(v: float) -> str:
    return repr(float(v))


def trace_rows(result: RunResult, wall_time: bool = False) -> list[list[str]]:
    rows = []
    for t in result.trace:
        rows.append([str(t.global_iter), str(t.epoch_index), _fmt(t.f_value),
                     _fmt(t.grad_norm), str(t.grad_evals), str(t.fn_evals),
                     str(t.replay_grad_evals), str(int(t.restarted)),
                     _fmt(t.wall_time_s) if wall_time else "nan"])
    return rows


def write_trace_csv(path, result: RunResult, wall_time: bool = False) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(trace_rows(result, wall_time))


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [float(a) for a in v]
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


_ARRAY_FIELDS = ("anchor", "end_point", "z_restart", "perturbation")


def params_to_dict(params: RagdParams) -> dict:
    d = {f.name: getattr(params, f.name) for f in fields(params)}
    d["family"] = "rhb" if isinstance(params, RhbParams) else "ragd"
    return d


def params_from_dict(d: dict) -> RagdParams:
    d = dict(d)
    cls = RhbParams if d.pop("family") == "rhb" else RagdParams
    return cls(**d)


def result_to_dict(result: RunResult) -> dict:
    return {
        "method": result.method,
        "terminated": result.terminated,
        "output": _jsonable(result.output),
        "output_grad_norm": result.output_grad_norm,
        "x_init": _jsonable(result.x_init),
        "counters": {"grad_evals": result.counters.grad_evals,
                     "fn_evals": result.counters.fn_evals,
                     "replay_grad_evals": result.counters.replay_grad_evals},
        "restart_iters": list(result.restart_iters),
        "final_params": (params_to_dict(result.final_params)
                         if result.final_params is not None else None),
        "epochs": [{f.name: _jsonable(getattr(ep, f.name)) for f in fields(ep)}
                   for ep in result.epochs],
    }


def result_from_dict(d: dict) -> RunResult:
    epochs = []
    for e in d["epochs"]:
        e = dict(e)
        for k in _ARRAY_FIELDS:
            if e.get(k) is not None:
                e[k] = np.array(e[k], dtype=np.float64)
        epochs.append(EpochTranscript(**e))
    c = d["counters"]
    fp = d.get("final_params")
    return RunResult(
        output=np.array(d["output"], dtype=np.float64),
        output_grad_norm=d["output_grad_norm"],
        counters=EvalCounter(c["grad_evals"], c["fn_evals"], c["replay_grad_evals"]),
        epochs_completed=len(epochs),
        restart_iters=list(d["restart_iters"]),
        trace=[],
        terminated=d["terminated"],
        method=d["method"],
        epochs=epochs,
        x_init=np.array(d["x_init"], dtype=np.float64) if d.get("x_init") else None,
        final_params=params_from_dict(fp) if fp is not None else None,
    )


# --- monitors ---


def audit_result(result: RunResult, problem: Problem, mode: str) -> list[verify.MonitorReport]:
    """Run the monitors that apply to this method and mode.

    Restart bookkeeping applies to the fixed-radius methods; descent and
    output bounds only under strict parameters.
    """
    params = result.final_params
    if result.method not in ("ragd", "rhb", "perturbed-ragd") or params is None:
        return []
    reports = [verify.monitor_restart_bookkeeping(result, params)]
    if mode != "strict" or result.method == "perturbed-ragd":
        return reports
    reports.append(verify.monitor_epoch_descent(result, params, problem, result.method))
    if problem.lower_bound is not None and problem.lipschitz_gradient is not None:
        delta_f = problem.value(result.x_init) - problem.lower_bound
        reports.append(verify.monitor_output_and_budget(result, params, problem, delta_f,
                                                        result.method))
    return reports


# --- batch runs ---


def _threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, threads)
    raw = os.environ.get("RESTARTOPT_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"RESTARTOPT_THREADS must be an integer, got {raw!r}") from exc


def run_experiment(config: ExperimentConfig, *, audit: bool = False, wall_time: bool = False,
                   threads: Optional[int] = None) -> dict:
    """Run every (method, seed) pair and write traces plus ``summary.json``."""
    return _run_all(config, audit, wall_time, threads)[0]


def _run_all(config: ExperimentConfig, audit: bool, wall_time: bool,
             threads: Optional[int]) -> tuple[dict, dict]:
    built = build_problem(config.problem)
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = [(spec, seed) for seed in config.seeds for spec in config.methods]
    results: dict[tuple[str, int], RunResult] = {}
    starts = {seed: initial_point(built, config.init, seed) for seed in config.seeds}

    def job(spec: MethodSpec, seed: int) -> dict:
        stem = f"{spec.label}_seed{seed}"
        entry: dict[str, Any] = {"label": spec.label, "method": spec.name, "seed": seed,
                                 "mode": spec.mode if spec.name in RESTARTED else None}
        x0 = starts[seed]
        try:
            if "eta_grid" in spec.params:
                eta, result = tune_eta(spec, built.problem, x0, config.iterations, seed)
                entry["tuned_eta"] = eta
            else:
                result = run_method(spec, built.problem, x0, config.iterations, seed)
        except NonFiniteError as exc:
            entry.update(status="nonfinite", error=str(exc))
            return entry
        results[(spec.label, seed)] = result
        write_trace_csv(out / f"{stem}.csv", result, wall_time)
        record = result_to_dict(result)
        record.update(label=spec.label, seed=seed, mode=entry["mode"],
                      problem=config.problem)
        with open(out / f"{stem}.json", "w") as fh:
            json.dump(record, fh)
        entry.update(
            status="ok", csv=f"{stem}.csv",
            output_grad_norm=result.output_grad_norm,
            grad_evals=result.counters.grad_evals,
            fn_evals=result.counters.fn_evals,
            replay_grad_evals=result.counters.replay_grad_evals,
            terminated=result.terminated,
            epochs=len(result.epochs),
            restarts=len(result.restart_iters),
            iterations=len(result.trace),
        )
        if audit:
            reports = audit_result(result, built.problem, spec.mode)
            entry["audit"] = [r.to_dict() for r in reports]
        return entry

    n = _threads(threads)
    if n == 1:
        entries = [job(s, seed) for s, seed in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            entries = list(pool.map(lambda js: job(*js), jobs))
    summary = {"problem": config.problem, "iterations": config.iterations,
               "seeds": config.seeds, "runs": entries}
    with open(out / "summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, default=_jsonable)
    return summary, results


def audit_directory(path) -> list[tuple[str, verify.MonitorReport]]:
    """Re-run the monitors over every saved run record in ``path``."""
    found = []
    for rec_path in sorted(Path(path).glob("*_seed*.json")):
        with open(rec_path) as fh:
            d = json.load(fh)
        problem = build_problem(d["problem"]).problem
        result = result_from_dict(d)
        for report in audit_result(result, problem, d.get("mode") or "practical"):
            found.append((rec_path.name, report))
    return found


# --- comparison tables ---


def align_best_so_far(series: dict[str, list[tuple[int, float, float, bool]]]
                      ) -> tuple[list[str], list[list]]:
    """Align per-method ``(evals, f, grad_norm, restarted)`` rows on the union grid.

    Each method contributes running minima of ``f`` and ``grad_norm``; at
    grid points past its last row the last values are carried forward, and
    before its first row the cells are empty. ``restart`` is 1 only at the
    grid points where that method restarted.
    """
    labels = list(series)
    grid = sorted({row[0] for rows in series.values() for row in rows})
    header = ["evals"]
    for lab in labels:
        header += [f"{lab}_f_best", f"{lab}_grad_best", f"{lab}_restart"]
    cursors = {lab: 0 for lab in labels}
    state = {lab: (math.inf, math.inf) for lab in labels}
    table = []
    for point in grid:
        row: list = [point]
        for lab in labels:
            rows, i = series[lab], cursors[lab]
            restarted = False
            f_best, g_best = state[lab]
            while i < len(rows) and rows[i][0] <= point:
                f_best = min(f_best, rows[i][1])
                g_best = min(g_best, rows[i][2])
                restarted = restarted or (rows[i][0] == point and rows[i][3])
                i += 1
            cursors[lab], state[lab] = i, (f_best, g_best)
            if math.isinf(g_best):
                row += ["", "", ""]
            else:
                row += [f_best, g_best, int(restarted)]
        table.append(row)
    return header, table


def _series(result: RunResult) -> list[tuple[int, float, float, bool]]:
    return [(t.grad_evals + t.fn_evals, t.f_value, t.grad_norm, t.restarted)
            for t in result.trace]


def compare_results(results: dict[str, RunResult]) -> dict:
    """Comparison table plus best-so-far gradient norms at the final common count."""
    series = {lab: _series(r) for lab, r in results.items() if r.trace}
    header, table = align_best_so_far(series)
    common = min(rows[-1][0] for rows in series.values())
    at_common = {lab: best_grad_within(r, common) for lab, r in results.items()}
    return {"header": header, "table": table, "common_evals": common,
            "best_grad_at_common": at_common}


def write_table_csv(path, header, table) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in table:
            w.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def compare_experiment(config: ExperimentConfig, *, threads: Optional[int] = None) -> dict:
    """Run the config, then write ``compare_seed<s>.csv`` for every seed."""
    if len(config.methods) < 2:
        raise ConfigError("compare needs at least two methods")
    _, all_results = _run_all(config, False, False, threads)
    out = Path(config.out)
    tables = {}
    for seed in config.seeds:
        results = {spec.label: all_results[(spec.label, seed)] for spec in config.methods
                   if (spec.label, seed) in all_results}
        if len(results) < 2:
            raise RestartOptError(f"fewer than two methods finished for seed {seed}")
        cmp = compare_results(results)
        write_table_csv(out / f"compare_seed{seed}.csv", cmp["header"], cmp["table"])
        tables[seed] = {"common_evals": cmp["common_evals"],
                        "best_grad_at_common": cmp["best_grad_at_common"]}
    with open(out / "compare_summary.json", "w") as fh:
        json.dump({str(k): v for k, v in tables.items()}, fh, indent=2)
    return tables


# --- gradient checks and synthetic data ---


def gradcheck_points(built: BuiltProblem, seed: int, n_points: int = 5) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    if built.data is not None:
        return [rng.standard_normal(built.problem.dim) for _ in range(n_points)]
    return [rng.uniform(-3.0, 3.0, built.problem.dim) for _ in range(n_points)]


def gradcheck(problem_spec: dict, seed: int, h: float = 1e-5,
              rel_tol: float = 1e-4) -> list[verify.GradCheckReport]:
    built = build_problem(problem_spec)
    return [verify.check_gradient(built.problem, x, h, rel_tol)
            for x in gradcheck_points(built, seed)]


def synth(m: int, n: int, r: int, density: float, noise: float, seed: int, path) -> int:
    """Write a synthetic completion instance as COO triplets; returns N."""
    obs = problems.generate_synthetic_mc(m, n, r, density, noise, seed)
    problems.save_coo(obs, path)
    return obs.nnz
