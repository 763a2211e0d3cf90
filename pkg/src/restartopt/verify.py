"""Independent checks on problems and on finished runs.

The gradient oracle uses central differences of ``value`` only. The run
monitors re-derive every restart inequality from the recorded step
lengths and re-evaluate ``f`` at epoch boundaries themselves; they never
read the trace or touch the run's counters.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .core import (
    EvalCounter,
    LengthMismatch,
    Problem,
    RagdParams,
    RegimeError,
    RunResult,
)


@dataclass
class GradCheckReport:
    max_abs_err: float
    max_rel_err: float
    worst_coordinate: int
    h: float
    rel_tol: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err <= self.rel_tol


@dataclass
class Violation:
    epoch: int
    quantity: str
    bound: float
    observed: float


@dataclass
class MonitorReport:
    name: str
    epochs_checked: int = 0
    violations: list[Violation] = field(default_factory=list)
    audit_fn_evals: int = 0
    audit_grad_evals: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d

    def format(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        lines = [f"{status} {self.name}: {self.epochs_checked} epochs checked, "
                 f"{len(self.violations)} violations"]
        for v in self.violations:
            lines.append(f"  epoch {v.epoch}: {v.quantity} observed={v.observed!r} "
                         f"bound={v.bound!r}")
        return "\n".join(lines)


# --- gradient oracle ---


def finite_diff_grad(problem: Problem, x, h: float,
                     counter: Optional[EvalCounter] = None) -> np.ndarray:
    """Central differences; charges ``2 * dim`` function evaluations."""
    if not h > 0:
        raise ValueError("h must be positive")
    x = np.array(x, dtype=np.float64)
    out = np.empty(problem.dim)
    for i in range(problem.dim):
        e = np.zeros_like(x)
        e[i] = h
        out[i] = (problem.value(x + e) - problem.value(x - e)) / (2.0 * h)
    if counter is not None:
        counter.fn_evals += 2 * problem.dim
    return out


def check_gradient(problem: Problem, x, h: float = 1e-5,
                   rel_tol: float = 1e-4) -> GradCheckReport:
    """Compare ``problem.gradient`` with central differences at ``x``.

    Relative error uses ``max(1, |fd_i|)`` as denominator.
    """
    if not (h > 0 and rel_tol > 0):
        raise ValueError("h and rel_tol must be positive")
    if problem.dim == 0:
        return GradCheckReport(0.0, 0.0, -1, h, rel_tol)
    fd = finite_diff_grad(problem, x, h)
    g = np.asarray(problem.gradient(np.array(x, dtype=np.float64)), dtype=np.float64)
    abs_err = np.abs(g - fd)
    rel_err = abs_err / np.maximum(1.0, np.abs(fd))
    worst = int(np.argmax(rel_err))
    return GradCheckReport(float(abs_err.max()), float(rel_err[worst]), worst, h, rel_tol)


def with_corrupted_gradient(problem: Problem, coordinate: int = 0) -> Problem:
    """Fault injection: flip the sign of one gradient coordinate."""

    def gradient(x):
        g = np.array(problem.gradient(x), dtype=np.float64)
        g[coordinate] = -g[coordinate]
        return g

    return Problem(
        dim=problem.dim, value=problem.value, gradient=gradient,
        lipschitz_gradient=problem.lipschitz_gradient,
        lipschitz_hessian=problem.lipschitz_hessian,
        lower_bound=problem.lower_bound, name=problem.name + "-corrupted",
    )


def check_lipschitz_gradient(problem: Problem, n_pairs: int = 1000, scale: float = 3.0,
                             seed: int = 0) -> float:
    """Largest observed ``||g(x) - g(y)|| / ||x - y||`` over random pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-scale, scale, problem.dim)
        y = rng.uniform(-scale, scale, problem.dim)
        dist = np.linalg.norm(x - y)
        if dist > 0:
            worst = max(worst, np.linalg.norm(problem.gradient(x) - problem.gradient(y)) / dist)
    return float(worst)


# --- run monitors ---


def _partial_sums(disp_norms):
    # same left-to-right accumulation as the optimizer's running sum
    sums = [0.0]
    for d in disp_norms:
        sums.append(sums[-1] + d * d)
    return sums


def monitor_restart_bookkeeping(result: RunResult, params: RagdParams) -> MonitorReport:
    """Check the restart inequalities of every recorded epoch against ``B``.

    Restarted epochs: ``1 <= K_r <= K``, ``K_r S_{K_r} > B^2`` and
    ``k S_k <= B^2`` plus ``||x^k - x^0|| <= B`` for ``k < K_r``. The final
    epoch: ``k S_k <= B^2`` and ``||x^k - x^0|| <= B`` for all ``k``.
    """
    report = MonitorReport("restart-bookkeeping")
    b_sq = params.big_b * params.big_b
    for ep in result.epochs:
        report.epochs_checked += 1
        sums = _partial_sums(ep.disp_norms)
        dists = ep.anchor_dists
        if ep.ended_by_restart:
            kr = ep.restart_trigger_k if ep.restart_trigger_k is not None else len(ep.disp_norms)
            if not 1 <= kr <= params.big_k:
                report.violations.append(Violation(ep.index, "trigger index", params.big_k, kr))
            trig = kr * sums[kr]
            if not trig > b_sq:
                report.violations.append(Violation(ep.index, "k*S_k at trigger > B^2", b_sq, trig))
            upto = kr
        else:
            upto = len(ep.disp_norms) + 1
        for k in range(upto):
            val = k * sums[k]
            if val > b_sq:
                report.violations.append(Violation(ep.index, f"k*S_k (k={k}) <= B^2", b_sq, val))
            if k < len(dists) and dists[k] > params.big_b:
                report.violations.append(
                    Violation(ep.index, f"||x^k - x^0|| (k={k}) <= B", params.big_b, dists[k]))
    return report


def epoch_descent_bound(params: RagdParams, method: str) -> float:
    """Guaranteed per-epoch change of ``f`` (a negative number)."""
    scale = params.epsilon**1.5 / math.sqrt(params.rho)
    if method == "ragd":
        return -7.0 * scale / 8.0
    if method == "rhb":
        return -scale
    raise ValueError(f"unknown method {method!r}")


def monitor_epoch_descent(result: RunResult, params: RagdParams, problem: Problem,
                          method: str) -> MonitorReport:
    """Every restarted epoch must lower ``f`` by the guaranteed amount.

    The end point is ``x^K`` for AGD and ``z^K`` for heavy ball.
    """
    if not params.strict:
        raise RegimeError("the descent bound holds only for strict parameters")
    bound = epoch_descent_bound(params, method)
    report = MonitorReport(f"epoch-descent-{method}")
    for ep in result.epochs:
        if not ep.ended_by_restart:
            continue
        report.epochs_checked += 1
        drop = problem.value(ep.end_point) - problem.value(ep.anchor)
        report.audit_fn_evals += 2
        if not drop <= bound:
            report.violations.append(Violation(ep.index, "f(end) - f(anchor)", bound, drop))
    return report


def output_bound(params: RagdParams, method: str) -> float:
    if method == "ragd":
        return 82.0 * params.epsilon
    if method == "rhb":
        return 242.0 * params.epsilon
    raise ValueError(f"unknown method {method!r}")


def gradient_budget(params: RagdParams, L: float, delta_f: float) -> float:
    return delta_f * math.sqrt(L) * params.rho**0.25 / params.epsilon**1.75


def monitor_output_and_budget(result: RunResult, params: RagdParams, problem: Problem,
                              delta_f: float, method: str) -> MonitorReport:
    """Output gradient norm and main gradient count against their bounds.

    The gradient count excludes replay work and the final, non-restarted epoch.

    The output gradient is recomputed here rather than read from the result.
    """
    report = MonitorReport(f"output-and-budget-{method}")
    if problem.lipschitz_gradient is None:
        raise ValueError("problem must declare its gradient Lipschitz constant")
    report.epochs_checked = len(result.epochs)
    if not result.terminated:
        report.violations.append(Violation(-1, "terminated", 1.0, 0.0))
    gnorm = float(np.linalg.norm(problem.gradient(result.output)))
    report.audit_grad_evals += 1
    limit = output_bound(params, method)
    if not gnorm <= limit:
        report.violations.append(Violation(-1, "||grad f(output)||", limit, gnorm))
    budget = gradient_budget(params, problem.lipschitz_gradient, delta_f)
    # the count argument bounds the restarted epochs; the closing epoch of at
    # most K steps rides on top, otherwise delta_f = 0 could never pass
    spent = result.counters.grad_evals
    if result.epochs and not result.epochs[-1].ended_by_restart:
        spent -= min(result.epochs[-1].steps_taken, params.big_k)
    if not spent <= budget:
        report.violations.append(Violation(-1, "grad_evals", budget, float(spent)))
    return report


def check_trajectory_equivalence(run_a: RunResult, run_b: RunResult, rel_tol: float) -> bool:
    """Coordinatewise ``|a - b| <= rel_tol * max(|a|, |b|)`` over all iterates."""
    if run_a.iterates is None or run_b.iterates is None:
        raise ValueError("both runs must keep their iterates")
    if len(run_a.iterates) != len(run_b.iterates):
        raise LengthMismatch(f"{len(run_a.iterates)} vs {len(run_b.iterates)} iterates")
    for a, b in zip(run_a.iterates, run_b.iterates):
        if a.shape != b.shape:
            return False
        if np.any(np.abs(a - b) > rel_tol * np.maximum(np.abs(a), np.abs(b))):
            return False
    return True
