"""Comparison methods: gradient descent, heuristic restarted AGD, nonlinear CG."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Evaluator, Problem, RunResult, ensure_finite
from .ragd import _finish, _Recorder


@dataclass(frozen=True)
class LineSearchConfig:
    """Doubling backtracking line search for :func:`run_nlcg`.

    ``eta_init`` plays the role of the previous step, so the first step
    tried is ``2 * eta_init`` when ``doubling`` is on.
    """

    eta_init: float
    max_halvings: int = 10
    doubling: bool = True

    def __post_init__(self):
        if not self.eta_init > 0:
            raise ValueError("eta_init must be positive")
        if self.max_halvings < 1:
            raise ValueError("max_halvings must be >= 1")


def run_gd(problem: Problem, eta: float, x_init, iters: int, *, trace: bool = True,
           keep_iterates: bool = False) -> RunResult:
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    x = np.array(x_init, dtype=np.float64)
    ensure_finite(x)
    x0 = x
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x)
    for _ in range(iters):
        g = ev.gradient(x)
        x_next = x - eta * g
        ensure_finite(g, x_next)
        rec.step(x, g, x_next, x0)
        x = x_next
    return _finish(rec, ev, x, ev.replay_gradient(x), True, "gd", x0, None)


def momentum_coefficient(m: int) -> float:
    return (m - 1) / (m + 2)


def run_heuristic_ragd(problem: Problem, eta: float, x_init, iters: int, *,
                       trace: bool = True, keep_iterates: bool = False) -> RunResult:
    """AGD with momentum ``(m-1)/(m+2)``; ``m`` resets to 1 when ``f`` goes up.

    One gradient and one function evaluation per iteration, plus one
    function evaluation at the starting point.
    """
    x = np.array(x_init, dtype=np.float64)
    ensure_finite(x)
    x0 = x
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x)
    y = x
    m = 1
    f_x = ev.value(x)
    for _ in range(iters):
        g = ev.gradient(y)
        x_next = y - eta * g
        ensure_finite(g, x_next)
        f_next = ev.value(x_next)
        m = m + 1 if f_next <= f_x else 1
        y_next = x_next + momentum_coefficient(m) * (x_next - x)
        rec.step(y, g, x_next, x0, restarted=(m == 1))
        x, y, f_x = x_next, y_next, f_next
    return _finish(rec, ev, x, ev.replay_gradient(x), True, "heuristic-ragd", x0, None)


def pr_plus_beta(g: np.ndarray, g_prev: np.ndarray) -> float:
    """Polak-Ribiere coefficient clamped at zero; zero when ``g_prev = 0``."""
    denom = float(g_prev @ g_prev)
    if denom == 0.0:
        return 0.0
    return max(float(g @ (g - g_prev)) / denom, 0.0)


def run_nlcg(problem: Problem, ls: LineSearchConfig, x_init, iters: int, *,
             trace: bool = True, keep_iterates: bool = False) -> RunResult:
    """Nonlinear conjugate gradient (PR+) with doubling backtracking.

    The step first doubles the previous one, then halves until
    ``f(x + eta d) <= f(x) + eta <d, g> / 2``. After ``max_halvings`` failed
    halvings the last tried step is taken anyway.
    """
    x = np.array(x_init, dtype=np.float64)
    ensure_finite(x)
    x0 = x
    ev = Evaluator(problem)
    rec = _Recorder(problem, ev.counter, trace, keep_iterates, x)
    f_x = ev.value(x)
    eta = ls.eta_init
    g_prev = None
    d_prev = np.zeros_like(x)
    for _ in range(iters):
        g = ev.gradient(x)
        beta = 0.0 if g_prev is None else pr_plus_beta(g, g_prev)
        d = -g + beta * d_prev
        slope = float(d @ g)
        eta = 2.0 * eta if ls.doubling else ls.eta_init
        for halvings in range(ls.max_halvings + 1):
            x_try = x + eta * d
            f_try = ev.value(x_try)
            if f_try <= f_x + eta * slope / 2.0 or halvings == ls.max_halvings:
                break
            eta /= 2.0
        ensure_finite(g, x_try)
        rec.step(x, g, x_try, x0, restarted=(beta == 0.0))
        x, f_x, g_prev, d_prev = x_try, f_try, g, d
    return _finish(rec, ev, x, ev.replay_gradient(x), True, "nlcg", x0, None)

