"""Lie group variational integrator for the rigid body.

One step maps ``(R_k, Pi_k)`` to ``(R_{k+1}, Pi_{k+1})`` by::

    hat(h Pi_k) = F_k Jd - Jd F_k^T     (solved for F_k by Newton on so(3))
    R_{k+1}     = R_k F_k
    Pi_{k+1}    = F_k^T Pi_k + h u_k

``u_k`` is a body-frame torque sampled at ``t_k`` (zero-order hold). ``R`` is
never re-orthonormalized: staying on SO(3) is a property of the scheme and
is measured, not enforced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from attitude_vi import _kernels as K
from attitude_vi.rigid_body import AttitudeState, InertiaPair
from attitude_vi.so3 import as_vec3, validate_rotation
from attitude_vi.solver import SolverOptions, raise_for_status

__all__ = [
    "TorqueSchedule",
    "StepRecord",
    "Trajectory",
    "step",
    "propagate",
]

CHUNK = 1 << 16

TorqueKind = Literal["zero", "constant", "sinusoidal", "tabulated"]


@dataclass(frozen=True)
class TorqueSchedule:
    """Body-frame torque as a function of time [N m].

    ``sinusoidal`` evaluates ``amplitude * sin(2 pi frequency t + phase)``
    per axis (frequency in Hz). ``tabulated`` holds ``values[j]`` on
    ``[times[j], times[j+1])``; the table must start at or before the run
    start and reach the run end.
    """

    kind: TorqueKind = "zero"
    value: np.ndarray | None = None
    amplitude: np.ndarray | None = None
    frequency: np.ndarray | None = None
    phase: np.ndarray | None = None
    times: np.ndarray | None = None
    values: np.ndarray | None = None

    @classmethod
    def zero(cls) -> "TorqueSchedule":
        return cls("zero")

    @classmethod
    def constant(cls, value) -> "TorqueSchedule":
        return cls("constant", value=as_vec3(value, "torque"))

    @classmethod
    def sinusoidal(cls, amplitude, frequency, phase=(0.0, 0.0, 0.0)) -> "TorqueSchedule":
        return cls(
            "sinusoidal",
            amplitude=as_vec3(amplitude, "amplitude"),
            frequency=as_vec3(frequency, "frequency"),
            phase=as_vec3(phase, "phase"),
        )

    @classmethod
    def tabulated(cls, times, values) -> "TorqueSchedule":
        times = np.asarray(times, dtype=np.float64)
        values = np.asarray(values, dtype=np.float64)
        if times.ndim != 1 or times.size == 0:
            raise ValueError("torque table needs a non-empty 1-D time column")
        if values.shape != (times.size, 3):
            raise ValueError(f"torque table values must have shape ({times.size}, 3)")
        if np.any(np.diff(times) <= 0):
            raise ValueError("torque table times must be strictly increasing")
        if not (np.all(np.isfinite(times)) and np.all(np.isfinite(values))):
            raise ValueError("torque table has non-finite entries")
        return cls("tabulated", times=times, values=values)

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def check_horizon(self, t0: float, t_end: float) -> None:
        """Raise ``ValueError`` if a table does not cover ``[t0, t_end]``."""
        if self.kind != "tabulated":
            return
        slack = 1e-12 * max(1.0, abs(t_end))
        if self.times[0] > t0 + slack or self.times[-1] < t_end - slack:
            raise ValueError(
                f"torque table covers [{self.times[0]}, {self.times[-1]}] "
                f"but the run spans [{t0}, {t_end}]"
            )

    def sample(self, t) -> np.ndarray:
        """Torque at times ``t``, shape ``(len(t), 3)``."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        if self.kind == "zero":
            return np.zeros((t.size, 3))
        if self.kind == "constant":
            return np.tile(self.value, (t.size, 1))
        if self.kind == "sinusoidal":
            arg = 2.0 * np.pi * t[:, None] * self.frequency[None, :] + self.phase[None, :]
            return self.amplitude[None, :] * np.sin(arg)
        if self.kind == "tabulated":
            idx = np.searchsorted(self.times, t, side="right") - 1
            return self.values[np.clip(idx, 0, self.times.size - 1)]
        raise ValueError(f"unknown torque kind {self.kind!r}")


@dataclass(frozen=True)
class StepRecord:
    state: AttitudeState
    newton_iterations: int
    newton_residual: float
    F: np.ndarray


@dataclass
class Trajectory:
    """Stored states of a run, as stacked arrays.

    ``steps[i]`` is the global step index of row ``i``; with decimation
    ``d`` the rows are steps ``0, d, 2d, ...`` plus the last step.
    ``newton_iterations``/``newton_residual`` are ``None`` for integrators
    without an implicit solve.
    """

    steps: np.ndarray
    t: np.ndarray
    R: np.ndarray
    Pi: np.ndarray
    h: float
    method: str = "variational"
    newton_iterations: np.ndarray | None = None
    newton_residual: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.t)

    def state(self, i: int) -> AttitudeState:
        return AttitudeState(self.R[i], self.Pi[i], self.t[i])

    @property
    def final(self) -> AttitudeState:
        return self.state(-1)


def _check_run_args(initial: AttitudeState, h: float, n_steps: int, decimation: int):
    h = float(h)
    if not h > 0.0 or not math.isfinite(h):
        raise ValueError("h must be positive")
    if int(n_steps) != n_steps or n_steps < 1:
        raise ValueError("number of steps must be an integer >= 1")
    if int(decimation) != decimation or decimation < 1:
        raise ValueError("decimation must be an integer >= 1")
    if not validate_rotation(initial.R, 1e-9):
        raise ValueError("initial attitude is not a rotation matrix")
    return h, int(n_steps), int(decimation)


def step(state: AttitudeState, u, h: float, inertia: InertiaPair,
         opts: SolverOptions | None = None) -> StepRecord:
    """Advance ``state`` by one step of length ``h`` under body torque ``u``.

    Raises:
        SolverError: if the implicit equation for ``F_k`` is not solved.
    """
    opts = opts or SolverOptions()
    h = float(h)
    if not h > 0.0:
        raise ValueError("h must be positive")
    R1, Pi1, F, it, r, status = K.lgvi_step(
        np.array(state.R), np.array(state.Pi), as_vec3(u, "u"), h,
        inertia.J, inertia.Jd, *opts.kernel_args)
    raise_for_status(status, r, it)
    return StepRecord(AttitudeState(R1, Pi1, state.t + h), int(it), float(r), F)


def propagate(initial: AttitudeState, schedule: TorqueSchedule, h: float, n_steps: int,
              inertia: InertiaPair, opts: SolverOptions | None = None,
              decimation: int = 1) -> Trajectory:
    """Run ``n_steps`` steps from ``initial``; record 0 is the initial state.

    Raises:
        SolverError: with ``step_index`` set to the step that failed.
        ValueError: on bad arguments or a torque table not covering the run.
    """
    opts = opts or SolverOptions()
    h, n_steps, decimation = _check_run_args(initial, h, n_steps, decimation)
    t0 = initial.t
    schedule.check_horizon(t0, t0 + n_steps * h)
    kargs = opts.kernel_args

    R = np.array(initial.R)
    Pi = np.array(initial.Pi)
    parts = [(R[None], Pi[None], np.zeros(1, np.int64), np.zeros(1, np.int64), np.zeros(1))]
    for k0 in range(0, n_steps, CHUNK):
        k1 = min(k0 + CHUNK, n_steps)
        torques = np.ascontiguousarray(schedule.sample(t0 + np.arange(k0, k1) * h))
        Rs, Ps, ks, its, res, R, Pi, fail_k, fail_r, fail_it, status = K.lgvi_run(
            R, Pi, torques, h, inertia.J, inertia.Jd, *kargs, decimation, k0, n_steps)
        raise_for_status(status, fail_r, int(fail_it), step_index=int(fail_k))
        parts.append((Rs, Ps, ks, its, res))

    Rs, Ps, ks, its, res = (np.concatenate(col) for col in zip(*parts))
    return Trajectory(
        steps=ks, t=t0 + ks * h, R=Rs, Pi=Ps, h=h, method="variational",
        newton_iterations=its, newton_residual=res,
    )
