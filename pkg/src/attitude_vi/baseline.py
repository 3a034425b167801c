"""Reference RK4 integrator and conservation diagnostics.

The baseline integrates the continuous rigid-body equations::

    dR/dt  = R hat(Omega)
    dPi/dt = Pi x Omega + u,      Omega = J^-1 Pi

with classical RK4, treating ``R`` as nine independent reals. Nothing keeps
it on SO(3) unless ``project=True``, in which case ``R`` is replaced by its
polar factor after every step. It exists to be compared against, and doubles
as a fine-step reference solution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from attitude_vi import _kernels as K
from attitude_vi.integrator import CHUNK, TorqueSchedule, Trajectory, _check_run_args
from attitude_vi.rigid_body import AttitudeState, InertiaPair
from attitude_vi.so3 import as_mat3, as_vec3

__all__ = [
    "continuous_rhs",
    "rk4_step",
    "propagate_rk4",
    "DiagnosticsSeries",
    "compute_diagnostics",
]


def _jinv(J) -> np.ndarray:
    return np.linalg.inv(as_mat3(J, "J"))


def continuous_rhs(R, Pi, u, J) -> tuple[np.ndarray, np.ndarray]:
    """Time derivative ``(R hat(Omega), Pi x Omega + u)``."""
    return K.rigid_rhs(as_mat3(R, "R"), as_vec3(Pi, "Pi"), as_vec3(u, "u"), _jinv(J))


def rk4_step(R, Pi, u, h: float, J) -> tuple[np.ndarray, np.ndarray]:
    """One classical RK4 step, no projection. Torque is held over the step."""
    if not h > 0:
        raise ValueError("h must be positive")
    return K.rk4_step(as_mat3(R, "R"), as_vec3(Pi, "Pi"), as_vec3(u, "u"), float(h), _jinv(J))


def propagate_rk4(initial: AttitudeState, schedule: TorqueSchedule, h: float, n_steps: int,
                  inertia: InertiaPair, project: bool = False,
                  decimation: int = 1) -> Trajectory:
    """RK4 counterpart of :func:`attitude_vi.integrator.propagate`."""
    h, n_steps, decimation = _check_run_args(initial, h, n_steps, decimation)
    t0 = initial.t
    schedule.check_horizon(t0, t0 + n_steps * h)
    Jinv = np.array(inertia.Jinv)

    R = np.array(initial.R)
    Pi = np.array(initial.Pi)
    parts = [(R[None], Pi[None], np.zeros(1, np.int64))]
    for k0 in range(0, n_steps, CHUNK):
        k1 = min(k0 + CHUNK, n_steps)
        torques = np.ascontiguousarray(schedule.sample(t0 + np.arange(k0, k1) * h))
        Rs, Ps, ks, R, Pi = K.rk4_run(R, Pi, torques, h, Jinv, project, decimation, k0, n_steps)
        parts.append((Rs, Ps, ks))

    Rs, Ps, ks = (np.concatenate(col) for col in zip(*parts))
    return Trajectory(
        steps=ks, t=t0 + ks * h, R=Rs, Pi=Ps, h=h,
        method="rk4_projected" if project else "rk4",
    )


@dataclass(frozen=True)
class DiagnosticsSeries:
    """Per-record conserved quantities and structure defects of a trajectory."""

    steps: np.ndarray
    t: np.ndarray
    energy: np.ndarray
    pi_norm: np.ndarray
    spatial_momentum: np.ndarray
    ortho_defect: np.ndarray
    det_defect: np.ndarray
    newton_iterations: np.ndarray | None = None
    newton_residual: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.t)

    def energy_drift(self) -> np.ndarray:
        """``|E_k - E_0| / E_0`` (absolute drift if ``E_0 == 0``)."""
        d = np.abs(self.energy - self.energy[0])
        return d / self.energy[0] if self.energy[0] > 0 else d

    def pi_norm_drift(self) -> np.ndarray:
        d = np.abs(self.pi_norm - self.pi_norm[0])
        return d / self.pi_norm[0] if self.pi_norm[0] > 0 else d

    def spatial_momentum_drift(self) -> np.ndarray:
        """``||R_k Pi_k - R_0 Pi_0|| / ||Pi_0||`` (absolute if ``Pi_0 == 0``)."""
        d = np.linalg.norm(self.spatial_momentum - self.spatial_momentum[0], axis=1)
        return d / self.pi_norm[0] if self.pi_norm[0] > 0 else d

    def summary(self) -> dict:
        out = {
            "records": len(self),
            "max_energy_drift": float(self.energy_drift().max()),
            "max_pi_norm_drift": float(self.pi_norm_drift().max()),
            "max_spatial_momentum_drift": float(self.spatial_momentum_drift().max()),
            "max_ortho_defect": float(self.ortho_defect.max()),
            "max_det_defect": float(self.det_defect.max()),
        }
        if self.newton_iterations is not None:
            its = self.newton_iterations[1:] if len(self) > 1 else self.newton_iterations
            out["newton_iterations_mean"] = float(its.mean())
            out["newton_iterations_max"] = int(its.max())
            out["newton_residual_max"] = float(self.newton_residual.max())
        return out


def compute_diagnostics(trajectory: Trajectory, J) -> DiagnosticsSeries:
    """Energy, momenta and SO(3) defects for every stored record.

    Reads the trajectory only; its arrays are not modified.
    """
    R = trajectory.R
    Pi = trajectory.Pi
    if len(trajectory) == 0:
        raise ValueError("empty trajectory")
    J = as_mat3(J, "J")
    omega = np.linalg.solve(J, Pi.T).T
    energy = 0.5 * np.einsum("ki,ij,kj->k", omega, J, omega)
    gram = np.einsum("kji,kjl->kil", R, R) - np.eye(3)
    return DiagnosticsSeries(
        steps=trajectory.steps.copy(),
        t=trajectory.t.copy(),
        energy=energy,
        pi_norm=np.linalg.norm(Pi, axis=1),
        spatial_momentum=np.einsum("kij,kj->ki", R, Pi),
        ortho_defect=np.linalg.norm(gram, axis=(1, 2)),
        det_defect=np.abs(np.linalg.det(R) - 1.0),
        newton_iterations=None if trajectory.newton_iterations is None
        else trajectory.newton_iterations.copy(),
        newton_residual=None if trajectory.newton_residual is None
        else trajectory.newton_residual.copy(),
    )
