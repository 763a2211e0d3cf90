"""Domain types, evaluation counting and parameter derivation.

Everything an optimizer run needs that is not the iteration itself lives
here: the :class:`Problem` evaluator, the counters that audit how many
gradient and function calls a method made, the parameter records for the
restarted methods, and the closed-form rules that turn ``(L, rho, eps)``
into step size, momentum, restart radius and epoch length.
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np
import numpy.typing as npt

Vector = npt.NDArray[np.float64]


# --- exceptions ---


class RestartOptError(Exception):
    """Base class for library errors."""


class RegimeError(RestartOptError, ValueError):
    """Parameters fall outside the regime where the guarantees hold."""


class NonFiniteError(RestartOptError, FloatingPointError):
    """An iterate or gradient contains NaN or Inf."""


class DimensionMismatch(RestartOptError, ValueError):
    pass


class LengthMismatch(RestartOptError, ValueError):
    pass


class BudgetExhausted(UserWarning):
    """Emitted when a run hits its iteration cap before its own exit test."""


# --- problem and counters ---


@dataclass(frozen=True)
class Problem:
    """A smooth objective with value and gradient oracles.

    ``value`` and ``gradient`` must be pure. ``lipschitz_gradient`` (L) and
    ``lipschitz_hessian`` (rho) are optional; strict parameter derivation
    needs both. ``lower_bound`` is used to form the optimality gap.
    """

    dim: int
    value: Callable[[Vector], float]
    gradient: Callable[[Vector], Vector]
    lipschitz_gradient: Optional[float] = None
    lipschitz_hessian: Optional[float] = None
    lower_bound: Optional[float] = None
    name: str = "problem"

    def __post_init__(self):
        if self.dim < 0:
            raise ValueError("dim must be nonnegative")


@dataclass
class EvalCounter:
    grad_evals: int = 0
    fn_evals: int = 0
    replay_grad_evals: int = 0

    @property
    def total(self) -> int:
        """Gradient plus function evaluations (replay excluded)."""
        return self.grad_evals + self.fn_evals

    def snapshot(self) -> "EvalCounter":
        return replace(self)


class Evaluator:
    """Wraps a :class:`Problem` so that every call is charged to a counter."""

    def __init__(self, problem: Problem, counter: Optional[EvalCounter] = None):
        self.problem = problem
        self.counter = counter if counter is not None else EvalCounter()

    def value(self, x: Vector) -> float:
        self.counter.fn_evals += 1
        return float(self.problem.value(x))

    def gradient(self, x: Vector) -> Vector:
        self.counter.grad_evals += 1
        return self._checked(self.problem.gradient(x))

    def replay_gradient(self, x: Vector) -> Vector:
        self.counter.replay_grad_evals += 1
        return self._checked(self.problem.gradient(x))

    def _checked(self, g) -> Vector:
        g = np.asarray(g, dtype=np.float64)
        if g.shape != (self.problem.dim,):
            raise DimensionMismatch(
                f"gradient has shape {g.shape}, expected ({self.problem.dim},)"
            )
        return g


def ensure_finite(*arrays: Vector, what: str = "iterate") -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteError(f"non-finite {what}")


# --- parameter records ---


@dataclass(frozen=True)
class RagdParams:
    """Parameters of restarted AGD.

    ``theta_coeff`` and ``b_divisor`` record how ``theta`` and ``big_b`` were
    formed from ``(eta, rho, epsilon)`` so that the adaptive methods can
    re-derive them after changing ``eta`` and ``rho``.
    """

    eta: float
    theta: float
    big_b: float
    big_k: int
    epsilon: float
    rho: float
    strict: bool = True
    theta_coeff: float = 4.0
    b_divisor: float = 1.0

    # strict-mode ceiling on theta; RhbParams lowers it
    theta_max = 1.0

    def __post_init__(self):
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if not 0 < self.theta <= 1:
            raise ValueError(f"theta must lie in (0, 1], got {self.theta}")
        if not self.big_b > 0:
            raise ValueError("big_b must be positive")
        if self.big_k < 1:
            raise ValueError("big_k must be a positive integer")
        if self.strict and self.theta > self.theta_max:
            raise RegimeError(
                f"theta={self.theta:.6g} exceeds {self.theta_max} (epsilon too large)"
            )

    def rederive(self, eta: float, rho: float) -> "RagdParams":
        """Same coefficients and epsilon, new step size and Hessian constant."""
        return _derive(type(self), eta, rho, self.epsilon, self.theta_coeff,
                       self.b_divisor, self.strict)


@dataclass(frozen=True)
class RhbParams(RagdParams):
    theta_coeff: float = 10.0
    b_divisor: float = 4.0

    theta_max = 0.1


def epoch_length(theta: float) -> int:
    return max(1, math.floor(1.0 / theta))


def _derive(cls, eta, rho, epsilon, theta_coeff, b_divisor, strict):
    if not (eta > 0 and rho > 0 and epsilon > 0):
        raise ValueError("eta, rho and epsilon must be positive")
    theta = theta_coeff * (epsilon * rho * eta**2) ** 0.25
    if strict and theta > cls.theta_max:
        raise RegimeError(
            f"theta={theta:.6g} exceeds {cls.theta_max} (epsilon too large)"
        )
    if not strict and not 0 < theta < 1:
        raise ValueError(f"practical theta must lie in (0, 1), got {theta}")
    return cls(
        eta=eta,
        theta=theta,
        big_b=math.sqrt(epsilon / (b_divisor * rho)),
        big_k=epoch_length(theta),
        epsilon=epsilon,
        rho=rho,
        strict=strict,
        theta_coeff=theta_coeff,
        b_divisor=b_divisor,
    )


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0:
            raise ValueError(f"{name} must be positive, got {v}")


def theorem1_params(L: float, rho: float, epsilon: float) -> RagdParams:
    """eta = 1/(4L), B = sqrt(eps/rho), theta = 4 (eps rho eta^2)^(1/4)."""
    _check_positive(L=L, rho=rho, epsilon=epsilon)
    return _derive(RagdParams, 1.0 / (4.0 * L), rho, epsilon, 4.0, 1.0, True)


def theorem4_params(L: float, rho: float, epsilon: float) -> RhbParams:
    """eta = 1/(4L), B = sqrt(eps/(4 rho)), theta = 10 (eps rho eta^2)^(1/4)."""
    _check_positive(L=L, rho=rho, epsilon=epsilon)
    return _derive(RhbParams, 1.0 / (4.0 * L), rho, epsilon, 10.0, 4.0, True)


def practical_params(
    eta: float,
    rho: float,
    epsilon: float,
    theta_coeff: float,
    method: str = "ragd",
    b_divisor: float = 1.0,
) -> RagdParams:
    """Experiment-style parameters: any theta in (0, 1), strict checks off.

    Both methods default to ``B = sqrt(eps/rho)``; pass ``b_divisor=4`` for
    the tighter heavy-ball radius used by the strict constructor.
    """
    _check_positive(eta=eta, rho=rho, epsilon=epsilon, theta_coeff=theta_coeff,
                    b_divisor=b_divisor)
    if method == "ragd":
        return _derive(RagdParams, eta, rho, epsilon, theta_coeff, b_divisor, False)
    if method == "rhb":
        return _derive(RhbParams, eta, rho, epsilon, theta_coeff, b_divisor, False)
    raise ValueError(f"unknown method {method!r}")


@dataclass(frozen=True)
class PerturbParams:
    chi: float
    radius: float
    zeta: float
    seed: int = 0

    def __post_init__(self):
        if self.chi < 1:
            raise ValueError("chi must be >= 1")
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")
        if not 0 < self.zeta < 1:
            raise ValueError("zeta must lie in (0, 1)")


def theorem3_params(
    L: float, rho: float, epsilon: float, d: int, zeta: float, seed: int = 0
) -> tuple[RagdParams, PerturbParams]:
    """Parameters of the perturbed restarted AGD.

    ``chi = max(1, ln(d / (zeta eps)))``; the epoch length is
    ``ceil(2 chi / theta)``.
    """
    _check_positive(L=L, rho=rho, epsilon=epsilon)
    if d < 1:
        raise ValueError("d must be a positive integer")
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    chi = max(1.0, math.log(d / (zeta * epsilon)))
    eta = 1.0 / (4.0 * L)
    theta = 0.5 * (epsilon * rho / L**2) ** 0.25
    if theta >= 1:
        raise RegimeError(f"theta={theta:.6g} must be < 1")
    big_b = math.sqrt(epsilon / rho) / (288.0 * chi**2)
    big_k = math.ceil(2.0 * chi / theta)
    radius = min(big_b / 2, theta * big_b / (20 * big_k), math.sqrt(theta * big_b**2 / (2 * big_k)))
    params = RagdParams(
        eta=eta, theta=theta, big_b=big_b, big_k=big_k, epsilon=epsilon, rho=rho,
        strict=True, theta_coeff=float("nan"), b_divisor=float("nan"),
    )
    return params, PerturbParams(chi=chi, radius=radius, zeta=zeta, seed=seed)


Schedule = Callable[[int], float]


@dataclass(frozen=True)
class LinearSchedule:
    """``t -> a + b t``, a picklable stand-in for a lambda."""

    a: float
    b: float

    def __call__(self, t: int) -> float:
        return self.a + self.b * t


@dataclass(frozen=True)
class AdaptiveParams:
    """Settings of the adaptive restart loop.

    ``c0`` is either a constant > 1 or a schedule ``t -> c0(t)`` over the
    1-based trigger count (practical mode only). ``c2``, ``eta_min`` and
    ``rho_max`` are used only when the Lipschitz constants are unknown.
    """

    b0_init: float
    gamma: float
    c0: Union[float, Schedule]
    c1: float
    c2: Optional[float] = None
    eta_min: Optional[float] = None
    rho_max: Optional[float] = None

    def __post_init__(self):
        if not self.b0_init > 0:
            raise ValueError("b0_init must be positive")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if not callable(self.c0) and not self.c0 > 1:
            raise ValueError("c0 must exceed 1")
        if not self.c1 > 1:
            raise ValueError("c1 must exceed 1")

    def c0_at(self, t: int) -> float:
        return float(self.c0(t)) if callable(self.c0) else float(self.c0)

    def validate_unknown_lipschitz(self, eta_init: float, rho_init: float) -> None:
        if self.c2 is None or self.eta_min is None or self.rho_max is None:
            raise ValueError("unknown-lipschitz mode needs c2, eta_min and rho_max")
        if not self.c1 >= self.c2 > 1:
            raise ValueError("unknown-lipschitz mode needs c1 >= c2 > 1")
        want = (eta_init / self.eta_min) ** 2
        got = self.rho_max / rho_init
        if not math.isclose(got, want, rel_tol=1e-9):
            raise ValueError(
                f"rho_max/rho_init = {got:.6g} must equal (eta_init/eta_min)^2 = {want:.6g}"
            )

    @classmethod
    def unknown_lipschitz(
        cls,
        params: RagdParams,
        b0_init: float,
        gamma: float,
        c0: Union[float, Schedule],
        c1: float,
        c2: float,
        eta_min: float,
    ) -> "AdaptiveParams":
        """Fill ``rho_max`` from the coupling ``rho_max/rho = (eta/eta_min)^2``."""
        rho_max = params.rho * (params.eta / eta_min) ** 2
        return cls(b0_init=b0_init, gamma=gamma, c0=c0, c1=c1, c2=c2,
                   eta_min=eta_min, rho_max=rho_max)


# --- run state and results ---


@dataclass
class EpochState:
    x_curr: Vector
    x_prev: Vector
    k: int
    disp_sum: float
    epoch_anchor: Vector
    disp_norms: list[float] = field(default_factory=list)

    @classmethod
    def start(cls, x: Vector) -> "EpochState":
        x = np.array(x, dtype=np.float64)
        return cls(x_curr=x, x_prev=x, k=0, disp_sum=0.0, epoch_anchor=x, disp_norms=[])

    def advanced(self, x_next: Vector) -> "EpochState":
        disp = float(np.linalg.norm(x_next - self.x_curr))
        return EpochState(
            x_curr=x_next,
            x_prev=self.x_curr,
            k=self.k + 1,
            disp_sum=self.disp_sum + disp * disp,
            epoch_anchor=self.epoch_anchor,
            disp_norms=self.disp_norms + [disp],
        )


@dataclass(frozen=True)
class TraceRecord:
    global_iter: int
    epoch_index: int
    f_value: float
    grad_norm: float
    grad_evals: int
    fn_evals: int
    replay_grad_evals: int
    restarted: bool
    wall_time_s: float = math.nan


@dataclass
class EpochTranscript:
    """What one epoch did, kept for the monitors in :mod:`restartopt.verify`.

    ``end_point`` is the point the next epoch starts from before any
    perturbation: ``x^K`` for AGD, ``z^K`` for heavy ball. ``anchor_dists``
    holds ``||x^k - x^0||`` for ``k = 0..steps_taken``.
    """

    index: int
    anchor: Vector
    steps_taken: int
    disp_norms: list[float]
    ended_by_restart: bool
    restart_trigger_k: Optional[int] = None
    end_point: Optional[Vector] = None
    anchor_dists: list[float] = field(default_factory=list)
    z_restart: Optional[Vector] = None
    accepted: Optional[bool] = None
    threshold_sq: Optional[float] = None
    indicator_grad_norm: Optional[float] = None
    perturbation: Optional[Vector] = None


# AGD and heavy-ball epochs share one record type
AgdEpochTranscript = EpochTranscript
HbEpochTranscript = EpochTranscript


@dataclass
class RunResult:
    output: Vector
    output_grad_norm: float
    counters: EvalCounter
    epochs_completed: int
    restart_iters: list[int]
    trace: list[TraceRecord]
    terminated: bool
    method: str = ""
    epochs: list[EpochTranscript] = field(default_factory=list)
    iterates: Optional[list[Vector]] = None
    x_init: Optional[Vector] = None
    final_params: Optional[RagdParams] = None


DEFAULT_BUDGET = 10**7
