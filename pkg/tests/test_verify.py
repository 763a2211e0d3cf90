import dataclasses
import json

import numpy as np
import pytest

from restartopt.core import (
    BudgetExhausted,
    EpochTranscript,
    EvalCounter,
    LengthMismatch,
    Problem,
    RegimeError,
    RunResult,
    practical_params,
    theorem1_params,
    theorem4_params,
)
from restartopt.problems import cosine_problem, diag_quadratic_problem
from restartopt.ragd import run_ragd
from restartopt.rhb import run_rhb
from restartopt.verify import (
    check_gradient,
    check_trajectory_equivalence,
    epoch_descent_bound,
    finite_diff_grad,
    monitor_epoch_descent,
    monitor_output_and_budget,
    monitor_restart_bookkeeping,
    output_bound,
    with_corrupted_gradient,
)

COS10 = cosine_problem(10)


def _x0(seed, dim=10):
    return np.random.default_rng(seed).uniform(-3, 3, dim)


def _result(epochs, grad_evals=0):
    return RunResult(output=np.zeros(1), output_grad_norm=0.0,
                     counters=EvalCounter(grad_evals=grad_evals), epochs_completed=len(epochs),
                     restart_iters=[], trace=[], terminated=True, epochs=epochs)


# --- finite differences ---


def test_fd_cosine_symmetric_point():
    assert np.array_equal(finite_diff_grad(cosine_problem(3), np.zeros(3), 1e-3), np.zeros(3))


def test_fd_quadratic_exact():
    g = finite_diff_grad(diag_quadratic_problem([1.0]), np.array([1.0]), 1e-5)
    assert g[0] == pytest.approx(1.0, abs=1e-10)


def test_fd_cosine_taylor_bound():
    h = 1e-3
    g = finite_diff_grad(cosine_problem(1), np.array([np.pi / 2]), h)
    # truncation sits right at h^2/6; allow for rounding in the difference
    assert abs(g[0] + 1.0) <= h * h / 6 + 1e-12


def test_fd_second_order():
    x = np.array([1.0, 0.4, -2.2])
    p = cosine_problem(3)
    exact = p.gradient(x)
    e1 = np.abs(finite_diff_grad(p, x, 1e-2) - exact).max()
    e2 = np.abs(finite_diff_grad(p, x, 5e-3) - exact).max()
    assert 2.5 <= e1 / e2 <= 6


def test_fd_charges_counter():
    c = EvalCounter()
    finite_diff_grad(COS10, np.zeros(10), 1e-4, c)
    assert c.fn_evals == 20 and c.grad_evals == 0


# --- gradient check ---


def test_check_gradient_cosine():
    rep = check_gradient(COS10, _x0(0))
    assert rep.passed and rep.max_rel_err < 1e-8


def test_check_gradient_finds_corruption():
    x = np.full(10, 1.0)
    rep = check_gradient(with_corrupted_gradient(COS10, 6), x)
    assert not rep.passed
    assert rep.worst_coordinate == 6


def test_check_gradient_dim_zero():
    empty = Problem(dim=0, value=lambda x: 0.0, gradient=lambda x: np.zeros(0))
    rep = check_gradient(empty, np.zeros(0))
    assert rep.passed and rep.worst_coordinate == -1
    with pytest.raises(ValueError):
        check_gradient(COS10, np.zeros(10), h=0.0)


# --- bookkeeping ---


def test_bookkeeping_strict_runs_clean():
    params = theorem1_params(1.0, 1.0, 1e-2)
    for seed in range(5):
        res = run_ragd(COS10, params, _x0(seed))
        rep = monitor_restart_bookkeeping(res, params)
        assert rep.passed, rep.format()
        assert rep.epochs_checked == len(res.epochs)


def test_bookkeeping_boundary_is_a_violation():
    params = practical_params(1.0, 1.0, 1e-4, 0.005)
    b = params.big_b
    # K * S_K equals B^2 exactly: the trigger needs strict excess
    ep = EpochTranscript(index=0, anchor=np.zeros(1), steps_taken=1, disp_norms=[b],
                         ended_by_restart=True, restart_trigger_k=1, anchor_dists=[0.0, b])
    rep = monitor_restart_bookkeeping(_result([ep]), params)
    assert not rep.passed
    assert rep.violations[0].quantity.startswith("k*S_k at trigger")


def test_bookkeeping_final_epoch_only():
    params = practical_params(1.0, 1.0, 1e-4, 0.005)
    b = params.big_b
    ok = EpochTranscript(index=0, anchor=np.zeros(1), steps_taken=2, disp_norms=[b / 2, b / 2],
                         ended_by_restart=False, anchor_dists=[0.0, b / 2, b])
    assert monitor_restart_bookkeeping(_result([ok]), params).passed
    far = dataclasses.replace(ok, anchor_dists=[0.0, b / 2, 2 * b])
    rep = monitor_restart_bookkeeping(_result([far]), params)
    assert [v.quantity for v in rep.violations] == ["||x^k - x^0|| (k=2) <= B"]


def test_bookkeeping_catches_late_trigger():
    params = practical_params(1.0, 1.0, 1e-4, 0.005)
    b = params.big_b
    # trigger at k=2 although k=1 already exceeded
    ep = EpochTranscript(index=0, anchor=np.zeros(1), steps_taken=2, disp_norms=[2 * b, b],
                         ended_by_restart=True, restart_trigger_k=2,
                         anchor_dists=[0.0, 2 * b, 3 * b])
    assert not monitor_restart_bookkeeping(_result([ep]), params).passed


# --- descent ---


def test_descent_threshold_value():
    params = theorem1_params(1.0, 1.0, 1e-2)
    assert epoch_descent_bound(params, "ragd") == pytest.approx(-8.75e-4)
    assert epoch_descent_bound(theorem4_params(1, 1, 1.6e-7), "rhb") == pytest.approx(
        -(1.6e-7) ** 1.5)


def test_descent_strict_runs_clean():
    params = theorem1_params(1.0, 1.0, 1e-2)
    for seed in range(5):
        res = run_ragd(COS10, params, _x0(seed))
        counters = dataclasses.replace(res.counters)
        rep = monitor_epoch_descent(res, params, COS10, "ragd")
        assert rep.passed, rep.format()
        assert rep.audit_fn_evals == 2 * rep.epochs_checked
        # auditing leaves the run's own counters alone
        assert res.counters == counters


def test_descent_requires_strict():
    params = practical_params(1.0, 1.0, 1e-4, 0.005)
    with pytest.warns(BudgetExhausted):
        res = run_ragd(COS10, params, _x0(0), budget=50)
    with pytest.raises(RegimeError):
        monitor_epoch_descent(res, params, COS10, "ragd")


def test_descent_no_restarts_is_empty():
    params = theorem1_params(1.0, 1.0, 1e-2)
    res = run_ragd(COS10, params, np.zeros(10))
    rep = monitor_epoch_descent(res, params, COS10, "ragd")
    assert rep.passed and rep.epochs_checked == 0


def test_descent_fires_on_misdeclared_rho():
    # declaring rho 1e4 times too small makes the required drop 100 times larger
    params = theorem1_params(1.0, 1.0, 1e-2)
    res = run_ragd(COS10, params, _x0(3))
    wrong = dataclasses.replace(params, rho=params.rho / 1e4)
    rep = monitor_epoch_descent(res, wrong, COS10, "ragd")
    assert not rep.passed
    assert all(v.quantity == "f(end) - f(anchor)" for v in rep.violations)


def test_descent_fires_on_corrupted_transcript():
    params = theorem1_params(1.0, 1.0, 1e-2)
    res = run_ragd(COS10, params, _x0(1))
    ep = next(e for e in res.epochs if e.ended_by_restart)
    ep.end_point = ep.anchor.copy()
    rep = monitor_epoch_descent(res, params, COS10, "ragd")
    assert [v.epoch for v in rep.violations] == [ep.index]


# --- output and budget ---


def test_output_and_budget_strict_ragd():
    params = theorem1_params(1.0, 1.0, 1e-2)
    for seed in range(5):
        x0 = _x0(seed)
        res = run_ragd(COS10, params, x0)
        rep = monitor_output_and_budget(res, params, COS10, COS10.value(x0) + 10, "ragd")
        assert rep.passed, rep.format()
        assert rep.audit_grad_evals == 1


def test_output_and_budget_zero_gap():
    params = theorem1_params(1.0, 1.0, 1e-2)
    res = run_ragd(COS10, params, np.full(10, np.pi))
    assert res.restart_iters == []
    assert monitor_output_and_budget(res, params, COS10, 0.0, "ragd").passed


def test_output_and_budget_rhb():
    params = theorem4_params(1.0, 1.0, 1.6e-7)
    assert output_bound(params, "rhb") == pytest.approx(3.872e-5)
    x0 = _x0(2)
    res = run_rhb(COS10, params, x0)
    rep = monitor_output_and_budget(res, params, COS10, COS10.value(x0) + 10, "rhb")
    assert rep.passed, rep.format()


def test_output_check_fires_on_bad_output():
    params = theorem1_params(1.0, 1.0, 1e-2)
    res = run_ragd(COS10, params, _x0(0))
    res.output = np.full(10, 1.0)
    rep = monitor_output_and_budget(res, params, COS10, 20.0, "ragd")
    assert [v.quantity for v in rep.violations] == ["||grad f(output)||"]


# --- equivalence ---


def test_equivalence_self_and_mismatch():
    params = theorem1_params(1.0, 1.0, 1e-2)
    a = run_ragd(COS10, params, _x0(0), keep_iterates=True)
    assert check_trajectory_equivalence(a, a, 0.0)
    b = run_ragd(COS10, params, _x0(1), keep_iterates=True)
    b.iterates = b.iterates[:3]
    with pytest.raises(LengthMismatch):
        check_trajectory_equivalence(a, b, 1.0)


# --- report ---


def test_report_serialization():
    params = practical_params(1.0, 1.0, 1e-4, 0.005)
    ep = EpochTranscript(index=4, anchor=np.zeros(1), steps_taken=1, disp_norms=[params.big_b],
                         ended_by_restart=True, restart_trigger_k=1)
    rep = monitor_restart_bookkeeping(_result([ep]), params)
    d = rep.to_dict()
    assert d["passed"] is False and d["violations"][0]["epoch"] == 4
    json.dumps(d)
    text = rep.format()
    assert text.startswith("FAIL restart-bookkeeping: 1 epochs checked, 1 violations")
    assert "epoch 4" in text
