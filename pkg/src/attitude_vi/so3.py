"""Rotation-group primitives: hat/vee, the exponential map, SO(3) checks.

Vectors are numpy arrays of shape ``(3,)``; matrices are ``(3, 3)``. The
hat map follows the usual cross-product convention::

    hat([w1, w2, w3]) = [[  0, -w3,  w2],
                         [ w3,   0, -w1],
                         [-w2,  w1,   0]]

so that ``hat(w) @ v == np.cross(w, v)``. It is a linear isomorphism
between R^3 and so(3); ``vee`` is its inverse.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from attitude_vi import _kernels as K

__all__ = [
    "SkewViolationError",
    "RotationCheck",
    "as_vec3",
    "as_mat3",
    "hat",
    "vee",
    "exp_so3",
    "validate_rotation",
    "orthogonality_defect",
]

DEFAULT_ROTATION_TOL = 1e-9


class SkewViolationError(ValueError):
    """Raised when a matrix handed to :func:`vee` is not skew-symmetric."""

    def __init__(self, defect: float):
        super().__init__(f"matrix is not skew-symmetric: ||S + S^T||_F = {defect:.3e}")
        self.defect = defect


class RotationCheck(NamedTuple):
    """Outcome of :func:`validate_rotation`. Truthy iff the check passed."""

    ok: bool
    defect: float
    det: float

    def __bool__(self) -> bool:
        return self.ok


def as_vec3(x, name: str = "vector") -> np.ndarray:
    v = np.ascontiguousarray(x, dtype=np.float64).reshape(-1)
    if v.shape != (3,):
        raise ValueError(f"{name} must have 3 components, got shape {np.shape(x)}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} has non-finite components")
    return v


def as_mat3(x, name: str = "matrix") -> np.ndarray:
    m = np.ascontiguousarray(x, dtype=np.float64)
    if m.shape != (3, 3):
        raise ValueError(f"{name} must be 3x3, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} has non-finite entries")
    return m


def hat(w) -> np.ndarray:
    """Skew-symmetric matrix of ``w``; ``hat(w) @ v`` is ``w x v``."""
    return K.hat(as_vec3(w, "w"))


def vee(S) -> np.ndarray:
    """Inverse of :func:`hat`.

    Roundoff-level asymmetry (e.g. from ``F @ Jd - Jd @ F.T``) is removed by
    taking the skew part first. A skew defect above 1e-9 is an error.

    Raises:
        SkewViolationError: if ``||S + S^T||_F > 1e-9``.
    """
    S = as_mat3(S, "S")
    defect = K.skew_defect(S)
    if defect > K.SKEW_REJECT:
        raise SkewViolationError(defect)
    return K.vee(S)


def exp_so3(w) -> np.ndarray:
    """Matrix exponential of ``hat(w)`` by the Rodrigues formula.

    ``I + (sin t / t) W + ((1 - cos t) / t^2) W^2`` with ``t = |w|``; the
    coefficients switch to their Taylor series for ``t < 1e-4``.
    """
    return K.exp_so3(as_vec3(w, "w"))


def orthogonality_defect(R) -> float:
    """``||R^T R - I||_F``."""
    R = np.asarray(R, dtype=np.float64)
    return float(np.linalg.norm(R.T @ R - np.eye(3)))


def validate_rotation(R, tol: float = DEFAULT_ROTATION_TOL) -> RotationCheck:
    """Check ``||R^T R - I||_F <= tol`` and ``det R > 0``.

    Never raises on a bad matrix; the measured defect is returned either way.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        return RotationCheck(False, float("inf"), float("nan"))
    defect = orthogonality_defect(R)
    det = float(np.linalg.det(R))
    return RotationCheck(defect <= tol and det > 0.0, defect, det)
