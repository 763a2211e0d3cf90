"""Restarted heavy ball.

Same restart test as :mod:`restartopt.ragd`, but the step evaluates the
gradient at ``x^k`` itself and a restart moves to the point
``z = (x^k + c x^{k-1}) / (1 + c)`` with ``c = (1 - 2 theta)(1 - theta)``.
The output averages ``x^0..x^{K0}`` (not extrapolated points).
"""

from __future__ import annotations

import numpy as np

from .core import (
    DEFAULT_BUDGET,
    AdaptiveParams,
    EpochState,
    Evaluator,
    Problem,
    RhbParams,
    RunResult,
    Vector,
    ensure_finite,
)
from .ragd import (
    _as_evaluator,
    _budget_warning,
    _finish,
    _Recorder,
    _run_adaptive,
    check_restart,
    select_k0,
)


def hb_step(state: EpochState, problem, eta: float, theta: float) -> EpochState:
    """One heavy-ball step; charges one gradient evaluation at ``x^k``."""
    new_state, _, _ = _hb_step(state, _as_evaluator(problem), eta, theta)
    return new_state


def _hb_step(state, ev: Evaluator, eta, theta):
    x = state.x_curr
    g = ev.gradient(x)
    x_next = x - eta * g + (1.0 - theta) * (x - state.x_prev)
    ensure_finite(g, x_next)
    return state.advanced(x_next), x, g


def hb_step_momentum_form(m_prev: Vector, x: Vector, problem, eta: float, beta: float):
    """Running-average form: ``m = beta m_prev + grad f(x)``, ``x_next = x - eta m``."""
    m, x_next, _ = _hb_momentum_step(m_prev, x, _as_evaluator(problem), eta, beta)
    return m, x_next


def _hb_momentum_step(m_prev, x, ev: Evaluator, eta, beta):
    g = ev.gradient(x)
    m = beta * m_prev + g
    x_next = x - eta * m
    ensure_finite(m, x_next)
    return m, x_next, g


def restart_anchor_z(x_curr: Vector, x_prev: Vector, theta: float) -> Vector:
    c = (1.0 - 2.0 * theta) * (1.0 - theta)
    return (x_curr + c * x_prev) / (1.0 + c)


def replay_hb_average(anchor: Vector, k0: int, ev: Evaluator, eta: float, theta: float):
    """Mean of ``x^0..x^{k0}`` rebuilt from the epoch anchor."""
    state = EpochState.start(anchor)
    total = state.x_curr.copy()
    for _ in range(k0):
        g = ev.replay_gradient(state.x_curr)
        x_next = state.x_curr - eta * g + (1.0 - theta) * (state.x_curr - state.x_prev)
        state = state.advanced(x_next)
        total += state.x_curr
    return total / (k0 + 1), state.disp_norms


def select_k0_and_average_hb(anchor, big_k, problem, eta, theta, disp_norms=None):
    ev = _as_evaluator(problem)
    if disp_norms is None:
        _, disp_norms = replay_hb_average(anchor, big_k, ev, eta, theta)
    k0 = select_k0(disp_norms, big_k)
    x_hat, replayed = replay_hb_average(anchor, k0, ev, eta, theta)
    if replayed != list(disp_norms[:k0]):
        raise RuntimeError("epoch replay diverged from the recorded trajectory")
    return k0, x_hat


def run_rhb(
    problem: Problem,
    params: RhbParams,
    x_init,
    budget: int = DEFAULT_BUDGET,
    *,
    trace: bool = True,
    keep_iterates: bool = False,
) -> RunResult:
    x_init = np.array(x_init, dtype=np.float64)
    ensure_finite(x_init)
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x_init)
    eta, theta, big_b, big_k = params.eta, params.theta, params.big_b, params.big_k

    state = EpochState.start(x_init)
    terminated = True
    while state.k < big_k:
        if rec.global_iter >= budget:
            terminated = False
            break
        state, x, g = _hb_step(state, ev, eta, theta)
        rec.step(x, g, state.x_curr, state.epoch_anchor)
        if check_restart(state, big_b):
            rec.mark_restart()
            z = restart_anchor_z(state.x_curr, state.x_prev, theta)
            rec.close_epoch(state, True, end_point=z, z_restart=z,
                            threshold_sq=big_b * big_b)
            state = EpochState.start(z)

    if not terminated:
        _budget_warning("rhb", budget)
        rec.close_epoch(state, False, end_point=state.x_curr, threshold_sq=big_b * big_b)
        out = state.x_curr
        return _finish(rec, ev, out, ev.replay_gradient(out), False, "rhb", x_init, params)

    rec.close_epoch(state, False, end_point=state.x_curr, threshold_sq=big_b * big_b)
    _, x_hat = select_k0_and_average_hb(state.epoch_anchor, big_k, ev, eta, theta,
                                        state.disp_norms)
    return _finish(rec, ev, x_hat, ev.replay_gradient(x_hat), True, "rhb", x_init, params)


def run_ada_rhb(
    problem: Problem,
    params: RhbParams,
    ada: AdaptiveParams,
    x_init,
    mode: str = "known",
    budget: int = DEFAULT_BUDGET,
    *,
    trace: bool = True,
    keep_iterates: bool = False,
) -> RunResult:
    """Adaptively restarted heavy ball; the decrease test is taken at ``z^k``."""
    return _run_adaptive(problem, params, ada, x_init, mode, budget, trace,
                         keep_iterates, heavy_ball=True)


def run_hb(
    problem: Problem,
    eta: float,
    theta: float,
    x_init,
    iters: int,
    form: str = "direct",
    *,
    trace: bool = True,
    keep_iterates: bool = True,
) -> RunResult:
    """Plain heavy ball without restarts, in either algebraic form.

    ``form="momentum"`` runs the running-average recursion with
    ``beta = 1 - theta`` and ``m^{-1} = 0``.
    """
    if form not in ("direct", "momentum"):
        raise ValueError(f"unknown form {form!r}")
    x = np.array(x_init, dtype=np.float64)
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x)
    state = EpochState.start(x)
    m = np.zeros_like(x)
    for _ in range(iters):
        if form == "direct":
            state, point, g = _hb_step(state, ev, eta, theta)
        else:
            point = state.x_curr
            m, x_next, g = _hb_momentum_step(m, point, ev, eta, 1.0 - theta)
            state = state.advanced(x_next)
        rec.step(point, g, state.x_curr, state.epoch_anchor)
    out = state.x_curr
    return _finish(rec, ev, out, ev.replay_gradient(out), True, f"hb-{form}", x, None)
