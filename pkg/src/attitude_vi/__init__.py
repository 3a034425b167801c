"""Structure-preserving rigid-body attitude simulation on SO(3)."""

from attitude_vi.baseline import (
    DiagnosticsSeries,
    compute_diagnostics,
    continuous_rhs,
    propagate_rk4,
    rk4_step,
)
from attitude_vi.integrator import StepRecord, TorqueSchedule, Trajectory, propagate, step
from attitude_vi.rigid_body import (
    AttitudeState,
    InertiaError,
    InertiaPair,
    j_from_jd,
    jd_from_j,
    kinetic_energy,
    momentum_from_velocity,
    velocity_from_momentum,
)
from attitude_vi.so3 import (
    RotationCheck,
    SkewViolationError,
    exp_so3,
    hat,
    validate_rotation,
    vee,
)
from attitude_vi.solver import (
    NonConvergenceError,
    SingularJacobianError,
    SolveResult,
    SolverError,
    SolverOptions,
    jacobian,
    jacobian_exact,
    newton_solve,
    residual_matrix,
    residual_vec,
)

__version__ = "0.1.0"
