"""Restarted accelerated gradient descent for nonconvex objectives.

Three drivers share the same epoch machinery:

* :func:`run_ragd` runs Nesterov steps and resets the momentum whenever
  ``k * sum_{t<k} ||x^{t+1} - x^t||^2`` exceeds ``B^2``; an epoch of ``K``
  steps without a reset ends the run.
* :func:`run_ada_ragd` starts from a much larger radius ``B0`` and shrinks
  it geometrically, rolling an epoch back when it fails to decrease ``f``.
* :func:`run_perturbed_ragd` adds a uniform-ball kick at restarts taken
  with a small gradient.

The output is an average of the extrapolated points ``y^0..y^{K0}`` of the
final epoch. Only the scalar step lengths are stored during the epoch; the
average is rebuilt afterwards by replaying the epoch from its anchor, and
those gradient calls are charged to ``replay_grad_evals``.
"""

from __future__ import annotations

import math
import time
import warnings
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_BUDGET,
    AdaptiveParams,
    BudgetExhausted,
    EpochState,
    EpochTranscript,
    EvalCounter,
    Evaluator,
    PerturbParams,
    Problem,
    RagdParams,
    RunResult,
    TraceRecord,
    Vector,
    ensure_finite,
)


def agd_step(state: EpochState, problem, eta: float, theta: float) -> EpochState:
    """One Nesterov step; charges one gradient evaluation at ``y^k``."""
    new_state, _, _ = _agd_step(state, _as_evaluator(problem), eta, theta)
    return new_state


def _agd_step(state, ev: Evaluator, eta, theta):
    x, x_prev = state.x_curr, state.x_prev
    y = x + (1.0 - theta) * (x - x_prev)
    g = ev.gradient(y)
    x_next = y - eta * g
    ensure_finite(y, g, x_next)
    return state.advanced(x_next), y, g


def _as_evaluator(problem) -> Evaluator:
    return problem if isinstance(problem, Evaluator) else Evaluator(problem)


def check_restart(state: EpochState, big_b: float) -> bool:
    """``k * sum_{t<k} ||x^{t+1} - x^t||^2 > B^2``, compared exactly."""
    return state.k * state.disp_sum > big_b * big_b


def select_k0(disp_norms, big_k: int) -> int:
    """Smallest minimiser of the step length over ``floor(K/2) <= k <= K-1``."""
    lo = big_k // 2
    window = disp_norms[lo:big_k]
    if len(window) == 0:
        raise ValueError("K0 window is empty")
    return lo + int(np.argmin(window))


def replay_agd_average(
    anchor: Vector, k0: int, ev: Evaluator, eta: float, theta: float
) -> tuple[Vector, list[float]]:
    """Mean of ``y^0..y^{k0}`` rebuilt from the epoch anchor.

    Returns the average and the replayed step lengths ``||x^{t+1} - x^t||``
    for ``t < k0``.
    """
    state = EpochState.start(anchor)
    total = np.zeros_like(state.x_curr)
    for _ in range(k0):
        y = state.x_curr + (1.0 - theta) * (state.x_curr - state.x_prev)
        total += y
        g = ev.replay_gradient(y)
        state = state.advanced(y - eta * g)
    total += state.x_curr + (1.0 - theta) * (state.x_curr - state.x_prev)
    return total / (k0 + 1), state.disp_norms


def select_k0_and_average(
    anchor: Vector,
    big_k: int,
    problem,
    eta: float,
    theta: float,
    disp_norms: Optional[list[float]] = None,
) -> tuple[int, Vector]:
    """Pick ``K0`` from the final epoch and return ``(K0, y_hat)``.

    ``disp_norms`` are the step lengths recorded during the epoch; if they
    are omitted the full epoch is replayed first to obtain them.
    """
    ev = _as_evaluator(problem)
    if disp_norms is None:
        _, disp_norms = replay_agd_average(anchor, big_k, ev, eta, theta)
    k0 = select_k0(disp_norms, big_k)
    y_hat, replayed = replay_agd_average(anchor, k0, ev, eta, theta)
    if replayed != list(disp_norms[:k0]):
        raise RuntimeError("epoch replay diverged from the recorded trajectory")
    return k0, y_hat


class _Recorder:
    """Trace and transcript bookkeeping shared by the restarted drivers."""

    def __init__(self, problem: Problem, counter: EvalCounter, trace: bool,
                 keep_iterates: bool, x_init: Vector):
        self.problem = problem
        self.counter = counter
        self.trace_on = trace
        self.trace: list[TraceRecord] = []
        self.iterates = [x_init.copy()] if keep_iterates else None
        self.epochs: list[EpochTranscript] = []
        self.restart_iters: list[int] = []
        self.global_iter = 0
        self.anchor_dists: list[float] = [0.0]
        self.t0 = time.perf_counter()

    def step(self, point: Vector, grad: Vector, x_next: Vector, anchor: Vector,
             restarted: bool = False) -> None:
        self.global_iter += 1
        self.anchor_dists.append(float(np.linalg.norm(x_next - anchor)))
        if self.iterates is not None:
            self.iterates.append(x_next.copy())
        if self.trace_on:
            c = self.counter
            self.trace.append(TraceRecord(
                global_iter=self.global_iter,
                epoch_index=len(self.epochs),
                # trace values are reporting only and never charged
                f_value=float(self.problem.value(point)),
                grad_norm=float(np.linalg.norm(grad)),
                grad_evals=c.grad_evals,
                fn_evals=c.fn_evals,
                replay_grad_evals=c.replay_grad_evals,
                restarted=restarted,
                wall_time_s=time.perf_counter() - self.t0,
            ))

    def mark_restart(self) -> None:
        if self.trace_on and self.trace:
            last = self.trace[-1]
            self.trace[-1] = TraceRecord(**{**last.__dict__, "restarted": True})

    def close_epoch(self, state: EpochState, restarted: bool, **extra) -> EpochTranscript:
        tr = EpochTranscript(
            index=len(self.epochs),
            anchor=state.epoch_anchor,
            steps_taken=state.k,
            disp_norms=list(state.disp_norms),
            ended_by_restart=restarted,
            restart_trigger_k=state.k if restarted else None,
            anchor_dists=self.anchor_dists,
            **extra,
        )
        self.epochs.append(tr)
        if restarted:
            self.restart_iters.append(state.k)
        self.anchor_dists = [0.0]
        return tr


def _finish(rec: _Recorder, ev: Evaluator, output: Vector, out_grad: Vector,
            terminated: bool, method: str, x_init: Vector, params) -> RunResult:
    ensure_finite(output, out_grad, what="output")
    return RunResult(
        output=output,
        output_grad_norm=float(np.linalg.norm(out_grad)),
        counters=ev.counter,
        epochs_completed=len(rec.epochs),
        restart_iters=rec.restart_iters,
        trace=rec.trace,
        terminated=terminated,
        method=method,
        epochs=rec.epochs,
        iterates=rec.iterates,
        x_init=x_init,
        final_params=params,
    )


def _budget_warning(method: str, budget: int) -> None:
    warnings.warn(f"{method}: iteration budget {budget} exhausted", BudgetExhausted,
                  stacklevel=3)


def sample_ball(rng: np.random.Generator, dim: int, radius: float) -> Vector:
    """Uniform sample from the centred ball of the given radius."""
    if radius == 0 or dim == 0:
        return np.zeros(dim)
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    return radius * rng.random() ** (1.0 / dim) * direction


def run_ragd(
    problem: Problem,
    params: RagdParams,
    x_init,
    budget: int = DEFAULT_BUDGET,
    *,
    perturb: Optional[PerturbParams] = None,
    trace: bool = True,
    keep_iterates: bool = False,
) -> RunResult:
    """Restarted AGD. Stops after an epoch of ``K`` steps with no restart.

    With ``perturb`` set, restarts taken when ``||grad f(y^{k-1})|| <= B/eta``
    move the new anchor by a uniform sample from the ball of radius
    ``perturb.radius``.
    """
    x_init = np.array(x_init, dtype=np.float64)
    ensure_finite(x_init)
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x_init)
    eta, theta, big_b, big_k = params.eta, params.theta, params.big_b, params.big_k
    rng = np.random.default_rng(perturb.seed) if perturb is not None else None
    method = "perturbed-ragd" if perturb is not None else "ragd"

    state = EpochState.start(x_init)
    terminated = True
    while state.k < big_k:
        if rec.global_iter >= budget:
            terminated = False
            break
        state, y, g = _agd_step(state, ev, eta, theta)
        rec.step(y, g, state.x_curr, state.epoch_anchor)
        if check_restart(state, big_b):
            rec.mark_restart()
            new_anchor = state.x_curr
            extra = {"end_point": state.x_curr}
            if rng is not None:
                gnorm = float(np.linalg.norm(g))
                extra["indicator_grad_norm"] = gnorm
                if gnorm <= big_b / eta and perturb.radius > 0:
                    xi = sample_ball(rng, problem.dim, perturb.radius)
                    extra["perturbation"] = xi
                    new_anchor = state.x_curr + xi
            rec.close_epoch(state, True, threshold_sq=big_b * big_b, **extra)
            state = EpochState.start(new_anchor)

    if not terminated:
        _budget_warning(method, budget)
        rec.close_epoch(state, False, end_point=state.x_curr, threshold_sq=big_b * big_b)
        out = state.x_curr
        return _finish(rec, ev, out, ev.replay_gradient(out), False, method, x_init, params)

    rec.close_epoch(state, False, end_point=state.x_curr, threshold_sq=big_b * big_b)
    _, y_hat = select_k0_and_average(state.epoch_anchor, big_k, ev, eta, theta,
                                     state.disp_norms)
    return _finish(rec, ev, y_hat, ev.replay_gradient(y_hat), True, method, x_init, params)


def run_perturbed_ragd(
    problem: Problem,
    params: RagdParams,
    perturb: PerturbParams,
    x_init,
    budget: int = DEFAULT_BUDGET,
    **kw,
) -> RunResult:
    return run_ragd(problem, params, x_init, budget, perturb=perturb, **kw)


def run_ada_ragd(
    problem: Problem,
    params: RagdParams,
    ada: AdaptiveParams,
    x_init,
    mode: str = "known",
    budget: int = DEFAULT_BUDGET,
    *,
    trace: bool = True,
    keep_iterates: bool = False,
) -> RunResult:
    """Adaptively restarted AGD.

    ``mode="unknown-lipschitz"`` additionally halves the step size (by
    ``c2``) and raises the Hessian estimate (by ``c2^2``) on every rollback,
    re-deriving ``B``, ``theta`` and ``K`` from the new values.
    """
    return _run_adaptive(problem, params, ada, x_init, mode, budget, trace,
                         keep_iterates, heavy_ball=False)


def _run_adaptive(problem, params, ada, x_init, mode, budget, trace, keep_iterates,
                  heavy_ball):
    # shared by Ada-RAGD and Ada-RHB; heavy_ball switches step, anchor and average
    from . import rhb

    if mode not in ("known", "unknown-lipschitz"):
        raise ValueError(f"unknown mode {mode!r}")
    if params.strict and callable(ada.c0):
        raise ValueError("strict mode needs a constant c0")
    if mode == "unknown-lipschitz":
        ada.validate_unknown_lipschitz(params.eta, params.rho)

    method = "ada-rhb" if heavy_ball else "ada-ragd"
    x_init = np.array(x_init, dtype=np.float64)
    ensure_finite(x_init)
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x_init)

    p = params
    eta, rho = p.eta, p.rho
    b0 = ada.b0_init
    x_cur0 = x_init
    f_anchor = ev.value(x_init)
    triggers = 0

    state = EpochState.start(x_init)
    terminated = True
    while state.k < p.big_k or b0 > p.big_b:
        if rec.global_iter >= budget:
            terminated = False
            break
        if heavy_ball:
            state, point, g = rhb._hb_step(state, ev, p.eta, p.theta)
        else:
            state, point, g = _agd_step(state, ev, p.eta, p.theta)
        rec.step(point, g, state.x_curr, state.epoch_anchor)

        threshold_sq = max(p.big_b**2, b0**2)
        if state.k * state.disp_sum > threshold_sq or state.k > p.big_k:
            rec.mark_restart()
            triggers += 1
            b0 = b0 / ada.c0_at(triggers)
            if heavy_ball:
                end = rhb.restart_anchor_z(state.x_curr, state.x_prev, p.theta)
            else:
                end = state.x_curr
            f_end = ev.value(end)
            required = -ada.gamma * p.epsilon**1.5 / math.sqrt(rho)
            accepted = f_end - f_anchor <= required
            rec.close_epoch(state, True, end_point=end, accepted=accepted,
                            threshold_sq=threshold_sq,
                            z_restart=end if heavy_ball else None)
            if accepted:
                x_cur0, f_anchor = end, f_end
            else:
                b0 = b0 / ada.c1
                if mode == "unknown-lipschitz":
                    eta = max(eta / ada.c2, ada.eta_min)
                    rho = min(rho * ada.c2**2, ada.rho_max)
                    p = p.rederive(eta, rho)
            state = EpochState.start(x_cur0)

    if not terminated:
        _budget_warning(method, budget)
        rec.close_epoch(state, False, end_point=state.x_curr,
                        threshold_sq=max(p.big_b**2, b0**2))
        out = state.x_curr
        return _finish(rec, ev, out, ev.replay_gradient(out), False, method, x_init, p)

    rec.close_epoch(state, False, end_point=state.x_curr, threshold_sq=p.big_b**2)
    if heavy_ball:
        _, avg = rhb.select_k0_and_average_hb(state.epoch_anchor, p.big_k, ev, p.eta,
                                              p.theta, state.disp_norms)
    else:
        _, avg = select_k0_and_average(state.epoch_anchor, p.big_k, ev, p.eta, p.theta,
                                       state.disp_norms)
    # output selection is part of the method, so both gradients are charged
    x_last = state.x_curr
    g_last = ev.gradient(x_last)
    g_avg = ev.gradient(avg)
    if np.linalg.norm(g_avg) <= np.linalg.norm(g_last):
        return _finish(rec, ev, avg, g_avg, True, method, x_init, p)
    return _finish(rec, ev, x_last, g_last, True, method, x_init, p)
