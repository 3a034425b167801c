"""Rigid-body model: the inertia pair (J, Jd), kinetic energy, momentum maps.

Besides the ordinary body inertia ``J`` the variational integrator works with
the nonstandard inertia ``Jd = 1/2 int rho X X^T``. The two are related by::

    J  = tr(Jd) I - Jd
    Jd = tr(J)/2 I - J

``Jd`` is positive semidefinite exactly when the principal moments of ``J``
satisfy the triangle inequalities ``l_i + l_j >= l_k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from attitude_vi.so3 import as_mat3, as_vec3, validate_rotation

__all__ = [
    "InertiaError",
    "InertiaPair",
    "AttitudeState",
    "jd_from_j",
    "j_from_jd",
    "kinetic_energy",
    "momentum_from_velocity",
    "velocity_from_momentum",
]

SYMMETRY_TOL = 1e-9
PSD_TOL = 1e-12
MAX_CONDITION = 1e12


class InertiaError(ValueError):
    """An inertia matrix that cannot belong to a physical rigid body."""


def _symmetric(M, name: str) -> np.ndarray:
    M = as_mat3(M, name)
    defect = float(np.linalg.norm(M - M.T))
    if defect > SYMMETRY_TOL:
        raise InertiaError(f"{name} is not symmetric (||M - M^T||_F = {defect:.3e})")
    return M


def jd_from_j(J) -> np.ndarray:
    """Nonstandard inertia ``Jd = tr(J)/2 I - J``.

    Raises:
        InertiaError: if ``J`` is not symmetric, or the result has a
            negative eigenvalue (principal moments violate the triangle
            inequality).
    """
    J = _symmetric(J, "J")
    Jd = 0.5 * np.trace(J) * np.eye(3) - J
    lam_min = float(np.linalg.eigvalsh(Jd).min())
    if lam_min < -PSD_TOL:
        raise InertiaError(
            f"J violates the triangle inequality on its principal moments "
            f"(Jd has eigenvalue {lam_min:.3e})"
        )
    return Jd


def j_from_jd(Jd) -> np.ndarray:
    """Body inertia ``J = tr(Jd) I - Jd``."""
    Jd = _symmetric(Jd, "Jd")
    return np.trace(Jd) * np.eye(3) - Jd


def kinetic_energy(J, omega) -> float:
    """``1/2 Omega^T J Omega`` in joules."""
    J = np.asarray(J, dtype=np.float64)
    omega = as_vec3(omega, "omega")
    return 0.5 * float(omega @ J @ omega)


def momentum_from_velocity(J, omega) -> np.ndarray:
    """Body angular momentum ``Pi = J Omega``."""
    return np.asarray(J, dtype=np.float64) @ as_vec3(omega, "omega")


def velocity_from_momentum(J, pi) -> np.ndarray:
    """Body angular velocity ``Omega = J^-1 Pi``.

    Raises:
        InertiaError: if ``cond(J) > 1e12``.
    """
    J = as_mat3(J, "J")
    if np.linalg.cond(J) > MAX_CONDITION:
        raise InertiaError("J is near-singular (condition number > 1e12)")
    return np.linalg.solve(J, as_vec3(pi, "pi"))


@dataclass(frozen=True)
class InertiaPair:
    """The body inertia ``J`` and its companion ``Jd``, kept consistent.

    Construct with :meth:`from_j`, :meth:`from_principal` or :meth:`from_jd`;
    the direct constructor validates a pair you already have.
    """

    J: np.ndarray
    Jd: np.ndarray
    Jinv: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        J = _symmetric(self.J, "J").copy()
        Jd = _symmetric(self.Jd, "Jd").copy()
        lam = np.linalg.eigvalsh(J)
        if lam.min() <= 0.0:
            raise InertiaError(f"J is not positive definite (eigenvalues {lam})")
        if lam.max() / lam.min() > MAX_CONDITION:
            raise InertiaError("J is near-singular (condition number > 1e12)")
        if np.linalg.eigvalsh(Jd).min() < -PSD_TOL:
            raise InertiaError("Jd is not positive semidefinite")
        mismatch = float(np.abs(np.trace(Jd) * np.eye(3) - Jd - J).max())
        if mismatch > 1e-12 * max(1.0, float(np.abs(J).max())):
            raise InertiaError(f"J != tr(Jd) I - Jd (max deviation {mismatch:.3e})")
        for name, value in (("J", J), ("Jd", Jd)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        Jinv = np.linalg.inv(J)
        Jinv.setflags(write=False)
        object.__setattr__(self, "Jinv", Jinv)

    @classmethod
    def from_j(cls, J) -> "InertiaPair":
        return cls(J, jd_from_j(J))

    @classmethod
    def from_principal(cls, moments) -> "InertiaPair":
        return cls.from_j(np.diag(as_vec3(moments, "principal moments")))

    @classmethod
    def from_jd(cls, Jd) -> "InertiaPair":
        return cls(j_from_jd(Jd), Jd)

    def energy(self, pi) -> float:
        """Kinetic energy for body momentum ``pi``."""
        pi = as_vec3(pi, "pi")
        return 0.5 * float(pi @ np.linalg.solve(self.J, pi))


@dataclass(frozen=True)
class AttitudeState:
    """Orientation ``R`` (body to inertial) and body momentum ``Pi`` at time ``t``."""

    R: np.ndarray
    Pi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        R = as_mat3(self.R, "R").copy()
        check = validate_rotation(R, 1e-9)
        if not check:
            raise ValueError(
                f"R is not a rotation matrix (defect {check.defect:.3e}, det {check.det:.3e})"
            )
        Pi = as_vec3(self.Pi, "Pi").copy()
        R.setflags(write=False)
        Pi.setflags(write=False)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "Pi", Pi)
        object.__setattr__(self, "t", float(self.t))

    @classmethod
    def from_velocity(cls, R, omega, inertia: InertiaPair, t: float = 0.0) -> "AttitudeState":
        return cls(R, momentum_from_velocity(inertia.J, omega), t)

    @property
    def spatial_momentum(self) -> np.ndarray:
        return self.R @ self.Pi
