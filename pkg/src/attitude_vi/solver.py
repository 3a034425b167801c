"""Newton iteration on so(3) for the implicit step equation.

Each step of the integrator needs the rotation ``F`` solving::

    hat(h * Pi) = F @ Jd - Jd @ F.T

``F`` is parametrized as ``exp(hat(w))`` and Newton's method is run on the
vector residual ``f(w) = vee(exp(w) Jd - Jd exp(w)^T) - h Pi``. Because every
iterate is an exponential, ``F`` lies on SO(3) by construction and is never
projected.

Two Newton directions are available:

``"approx"``
    Column ``i`` is ``vee(F E_i Jd + Jd E_i F^T)`` with ``E_i = hat(e_i)``.
    This treats ``d exp(w) / dw_i`` as ``exp(w) E_i``, which is exact only at
    ``w = 0``. Away from the identity the error is first order in ``|w|``,
    so convergence degrades to linear with rate roughly ``|w| / 2``.
``"exact"`` (default)
    The same matrix right-multiplied by the right Jacobian of ``exp``,
    ``Jr(w) = I - (1 - cos t)/t^2 W + (t - sin t)/t^3 W^2``, which is the true
    derivative of ``f``. Quadratic convergence.

Both agree at ``w = 0``. Either way a converged ``w`` solves the original
equation, since the stopping test is on the exact residual.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from attitude_vi import _kernels as K
from attitude_vi.so3 import as_mat3, as_vec3

__all__ = [
    "SolverOptions",
    "SolveResult",
    "SolverError",
    "NonConvergenceError",
    "SingularJacobianError",
    "residual_matrix",
    "residual_vec",
    "jacobian",
    "jacobian_exact",
    "newton_solve",
]

W0Strategy = Literal["momentum_guess", "zero"]
JacobianKind = Literal["exact", "approx"]


@dataclass(frozen=True)
class SolverOptions:
    """Newton settings.

    Attributes:
        alpha: Step length in ``w <- w - alpha Df^-1 f``, in ``(0, 1]``.
        tol: Absolute stopping tolerance on ``||f(w)||_2``.
        max_iters: Iteration cap before :class:`NonConvergenceError`.
        w0_strategy: ``"momentum_guess"`` starts from ``h J^-1 Pi``,
            ``"zero"`` from the identity.
        jacobian: Newton direction, ``"exact"`` or ``"approx"`` (see module
            docstring).
    """

    alpha: float = 1.0
    tol: float = 1e-12
    max_iters: int = 50
    w0_strategy: W0Strategy = "momentum_guess"
    jacobian: JacobianKind = "exact"

    def __post_init__(self):
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError("alpha must be in (0, 1]")
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError("max_iters must be an integer >= 1")
        if self.w0_strategy not in ("momentum_guess", "zero"):
            raise ValueError(f"unknown w0_strategy {self.w0_strategy!r}")
        if self.jacobian not in ("exact", "approx"):
            raise ValueError(f"unknown jacobian {self.jacobian!r}")

    @property
    def kernel_args(self) -> tuple:
        jac = K.JAC_EXACT if self.jacobian == "exact" else K.JAC_APPROX
        return (float(self.alpha), float(self.tol), int(self.max_iters), jac,
                self.w0_strategy == "zero")


@dataclass(frozen=True)
class SolveResult:
    w: np.ndarray
    F: np.ndarray
    iterations: int
    residual_norm: float


class SolverError(RuntimeError):
    """Newton failed. ``step_index`` is set when raised from inside a run."""

    def __init__(self, message: str, residual_norm: float, iterations: int,
                 step_index: int | None = None):
        super().__init__(message)
        self.residual_norm = residual_norm
        self.iterations = iterations
        self.step_index = step_index

    def __str__(self) -> str:
        msg = super().__str__()
        if self.step_index is not None:
            msg = f"step {self.step_index}: {msg}"
        return msg


class NonConvergenceError(SolverError):
    pass


class SingularJacobianError(SolverError):
    pass


def raise_for_status(status: int, residual_norm: float, iterations: int,
                     step_index: int | None = None) -> None:
    if status == K.STATUS_NONCONVERGED:
        raise NonConvergenceError(
            f"Newton did not converge after {iterations} iterations "
            f"(residual {residual_norm:.3e})",
            residual_norm, iterations, step_index)
    if status == K.STATUS_SINGULAR:
        raise SingularJacobianError(
            f"Newton Jacobian is singular (condition number > {K.COND_LIMIT:.0e}) "
            f"at iteration {iterations} (residual {residual_norm:.3e})",
            residual_norm, iterations, step_index)


def _check_h(h: float) -> float:
    h = float(h)
    if not h > 0.0 or not math.isfinite(h):
        raise ValueError("h must be positive")
    return h


def residual_matrix(F, Jd, h: float, Pi) -> np.ndarray:
    """``F Jd - Jd F^T - hat(h Pi)``; zero iff ``F`` solves the step equation."""
    h = _check_h(h)
    return K.residual_matrix(as_mat3(F, "F"), as_mat3(Jd, "Jd"), h * as_vec3(Pi, "Pi"))


def residual_vec(w, Jd, h: float, Pi) -> np.ndarray:
    """``vee(residual_matrix(exp(w), Jd, h, Pi))``."""
    h = _check_h(h)
    return K.residual_vec(as_vec3(w, "w"), as_mat3(Jd, "Jd"), h * as_vec3(Pi, "Pi"))


def jacobian(w, Jd) -> np.ndarray:
    """Newton matrix with columns ``vee(F E_i Jd + Jd E_i F^T)``, ``F = exp(w)``.

    Exact derivative of :func:`residual_vec` at ``w = 0`` only; see
    :func:`jacobian_exact` for the derivative everywhere.
    """
    return K.jacobian_approx(as_vec3(w, "w"), as_mat3(Jd, "Jd"))


def jacobian_exact(w, Jd) -> np.ndarray:
    """Derivative of :func:`residual_vec`: ``jacobian(w, Jd) @ Jr(w)``."""
    return K.jacobian_exact(as_vec3(w, "w"), as_mat3(Jd, "Jd"))


def newton_solve(Jd, h: float, Pi, opts: SolverOptions | None = None) -> SolveResult:
    """Find ``F = exp(w)`` with ``F Jd - Jd F^T = hat(h Pi)``.

    Iterates ``w <- w - alpha Df(w)^-1 f(w)`` until ``||f(w)||_2 <= tol``. If
    an update would leave the ball ``|w| < pi``, alpha is halved for that
    iteration, at most five times.

    Raises:
        NonConvergenceError: after ``max_iters`` iterations or on a
            non-finite residual.
        SingularJacobianError: if the Newton matrix has condition number
            above 1e14.
    """
    opts = opts or SolverOptions()
    h = _check_h(h)
    Jd = as_mat3(Jd, "Jd")
    hpi = h * as_vec3(Pi, "Pi")
    alpha, tol, max_iters, jac, zero_guess = opts.kernel_args
    J = np.trace(Jd) * np.eye(3) - Jd
    w0 = K.initial_guess(J, hpi, zero_guess)
    w, it, r, status = K.newton(Jd, hpi, w0, alpha, tol, max_iters, jac)
    raise_for_status(status, r, it)
    return SolveResult(w=w, F=K.exp_so3(w), iterations=int(it), residual_norm=float(r))
