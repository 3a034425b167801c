"""Compiled numerical kernels.

Every number this package produces comes out of the functions in this
module. The public modules (:mod:`attitude_vi.so3`, :mod:`attitude_vi.solver`,
:mod:`attitude_vi.integrator`, :mod:`attitude_vi.baseline`) validate inputs,
call in here, and turn status codes into exceptions. Keeping one compiled
path means a single ``step`` and a long ``propagate`` run execute the same
machine code, which is what makes trajectories reproducible bit for bit.

All arrays are float64, C-contiguous, shape ``(3,)`` or ``(3, 3)``. The 3x3
products are written out by hand instead of going through BLAS so that the
operation order is fixed.
"""

import math

import numpy as np
from numba import njit

# Below this angle the Rodrigues coefficients use their Taylor series.
SMALL_ANGLE = 1e-4
# (theta - sin theta) / theta^3 cancels much earlier than the other two.
SMALL_ANGLE_CUBIC = 1e-2

SKEW_REJECT = 1e-9
COND_LIMIT = 1e14

STATUS_OK = 0
STATUS_NONCONVERGED = 1
STATUS_SINGULAR = 2

JAC_APPROX = 0
JAC_EXACT = 1


@njit(cache=True)
def mm(A, B):
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = A[i, 0] * B[0, j] + A[i, 1] * B[1, j] + A[i, 2] * B[2, j]
    return C


@njit(cache=True)
def mmt(A, B):
    """A @ B.T"""
    C = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            C[i, j] = A[i, 0] * B[j, 0] + A[i, 1] * B[j, 1] + A[i, 2] * B[j, 2]
    return C


@njit(cache=True)
def mv(A, x):
    y = np.empty(3)
    for i in range(3):
        y[i] = A[i, 0] * x[0] + A[i, 1] * x[1] + A[i, 2] * x[2]
    return y


@njit(cache=True)
def mtv(A, x):
    """A.T @ x"""
    y = np.empty(3)
    for i in range(3):
        y[i] = A[0, i] * x[0] + A[1, i] * x[1] + A[2, i] * x[2]
    return y


@njit(cache=True)
def cross(a, b):
    c = np.empty(3)
    c[0] = a[1] * b[2] - a[2] * b[1]
    c[1] = a[2] * b[0] - a[0] * b[2]
    c[2] = a[0] * b[1] - a[1] * b[0]
    return c


@njit(cache=True)
def norm3(x):
    return math.sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2])


@njit(cache=True)
def hat(w):
    S = np.zeros((3, 3))
    S[0, 1] = -w[2]
    S[0, 2] = w[1]
    S[1, 0] = w[2]
    S[1, 2] = -w[0]
    S[2, 0] = -w[1]
    S[2, 1] = w[0]
    return S


@njit(cache=True)
def skew_defect(S):
    s = 0.0
    for i in range(3):
        for j in range(3):
            d = S[i, j] + S[j, i]
            s += d * d
    return math.sqrt(s)


@njit(cache=True)
def vee(S):
    # Extract from the skew part (S - S^T)/2; exact when S is exactly skew.
    w = np.empty(3)
    w[0] = 0.5 * (S[2, 1] - S[1, 2])
    w[1] = 0.5 * (S[0, 2] - S[2, 0])
    w[2] = 0.5 * (S[1, 0] - S[0, 1])
    return w


@njit(cache=True)
def rodrigues_coeffs(theta):
    """sin(t)/t, (1-cos t)/t^2, (t - sin t)/t^3."""
    t2 = theta * theta
    if theta < SMALL_ANGLE:
        a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0
        b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0
    else:
        a = math.sin(theta) / theta
        b = (1.0 - math.cos(theta)) / t2
    if theta < SMALL_ANGLE_CUBIC:
        c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0
    else:
        c = (theta - math.sin(theta)) / (t2 * theta)
    return a, b, c


@njit(cache=True)
def exp_so3(w):
    theta = norm3(w)
    a, b, _ = rodrigues_coeffs(theta)
    W = hat(w)
    W2 = mm(W, W)
    R = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            R[i, j] = a * W[i, j] + b * W2[i, j]
        R[i, i] += 1.0
    return R


@njit(cache=True)
def right_jacobian(w):
    """Right Jacobian of exp: d exp(w) = exp(w) hat(Jr(w) dw)."""
    theta = norm3(w)
    _, b, c = rodrigues_coeffs(theta)
    W = hat(w)
    W2 = mm(W, W)
    Jr = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            Jr[i, j] = -b * W[i, j] + c * W2[i, j]
        Jr[i, i] += 1.0
    return Jr


@njit(cache=True)
def residual_matrix(F, Jd, hpi):
    A = mm(F, Jd)
    B = mmt(Jd, F)
    H = hat(hpi)
    G = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            G[i, j] = A[i, j] - B[i, j] - H[i, j]
    return G


@njit(cache=True)
def residual_vec(w, Jd, hpi):
    return vee(residual_matrix(exp_so3(w), Jd, hpi))


@njit(cache=True)
def jacobian_approx(w, Jd):
    """Columns vee(F E_i Jd + Jd E_i F^T) with E_i = hat(e_i), F = exp(w)."""
    F = exp_so3(w)
    D = np.empty((3, 3))
    e = np.zeros(3)
    for i in range(3):
        e[:] = 0.0
        e[i] = 1.0
        E = hat(e)
        A = mm(mm(F, E), Jd)
        B = mmt(mm(Jd, E), F)
        M = np.empty((3, 3))
        for r in range(3):
            for s in range(3):
                M[r, s] = A[r, s] + B[r, s]
        col = vee(M)
        for r in range(3):
            D[r, i] = col[r]
    return D


@njit(cache=True)
def jacobian_exact(w, Jd):
    return mm(jacobian_approx(w, Jd), right_jacobian(w))


@njit(cache=True)
def newton(Jd, hpi, w0, alpha, tol, max_iters, jac_kind):
    """Damped Newton iteration on f(w) = vee(exp(w) Jd - Jd exp(w)^T) - h Pi.

    Returns ``(w, iterations, residual_norm, status)``.
    """
    w = w0.copy()
    f = residual_vec(w, Jd, hpi)
    r = norm3(f)
    it = 0
    while not r <= tol:
        if it >= max_iters or not math.isfinite(r):
            return w, it, r, STATUS_NONCONVERGED
        if jac_kind == JAC_EXACT:
            D = jacobian_exact(w, Jd)
        else:
            D = jacobian_approx(w, Jd)
        if not np.all(np.isfinite(D)) or np.linalg.cond(D) > COND_LIMIT:
            return w, it, r, STATUS_SINGULAR
        dw = np.linalg.solve(D, f)
        a = alpha
        w_new = w - a * dw
        halvings = 0
        while norm3(w_new) >= math.pi and halvings < 5:
            a *= 0.5
            w_new = w - a * dw
            halvings += 1
        w = w_new
        it += 1
        f = residual_vec(w, Jd, hpi)
        r = norm3(f)
    return w, it, r, STATUS_OK


@njit(cache=True)
def initial_guess(J, hpi, zero_guess):
    if zero_guess:
        return np.zeros(3)
    return np.linalg.solve(J, hpi)


@njit(cache=True)
def lgvi_step(R, Pi, u, h, J, Jd, alpha, tol, max_iters, jac_kind, zero_guess):
    """One step of the discrete Hamilton equations.

    Solves h Pi_k^ = F Jd - Jd F^T for F, then R_{k+1} = R_k F and
    Pi_{k+1} = F^T Pi_k + h u_k.
    """
    hpi = h * Pi
    w0 = initial_guess(J, hpi, zero_guess)
    w, it, r, status = newton(Jd, hpi, w0, alpha, tol, max_iters, jac_kind)
    F = exp_so3(w)
    R1 = mm(R, F)
    Pi1 = mtv(F, Pi) + h * u
    return R1, Pi1, F, it, r, status


@njit(cache=True)
def lgvi_run(R0, Pi0, torques, h, J, Jd, alpha, tol, max_iters, jac_kind,
             zero_guess, stride, k0, k_last):
    """Run ``len(torques)`` steps, storing every state whose global index is a
    multiple of ``stride`` plus the final one.

    ``k0`` is the global index of the input state (for chunked runs) and
    ``k_last`` the global index of the last step of the whole run; the input
    state itself is not stored. Returns the stored arrays, the final state,
    and ``(fail_index, fail_residual, fail_iterations, status)``.
    """
    n = torques.shape[0]
    cap = n // stride + 2
    Rs = np.empty((cap, 3, 3))
    Ps = np.empty((cap, 3))
    ks = np.empty(cap, dtype=np.int64)
    its = np.empty(cap, dtype=np.int64)
    res = np.empty(cap)
    m = 0
    R = R0.copy()
    Pi = Pi0.copy()
    for i in range(n):
        R1, Pi1, F, it, r, status = lgvi_step(
            R, Pi, torques[i], h, J, Jd, alpha, tol, max_iters, jac_kind, zero_guess)
        if status != STATUS_OK:
            return Rs[:m], Ps[:m], ks[:m], its[:m], res[:m], R, Pi, k0 + i, r, it, status
        R = R1
        Pi = Pi1
        k = k0 + i + 1
        if k % stride == 0 or k == k_last:
            Rs[m] = R
            Ps[m] = Pi
            ks[m] = k
            its[m] = it
            res[m] = r
            m += 1
    return Rs[:m], Ps[:m], ks[:m], its[:m], res[:m], R, Pi, -1, 0.0, 0, STATUS_OK


@njit(cache=True)
def rigid_rhs(R, Pi, u, Jinv):
    """(R hat(Omega), Pi x Omega + u) with Omega = J^-1 Pi."""
    Om = mv(Jinv, Pi)
    dR = mm(R, hat(Om))
    dPi = cross(Pi, Om) + u
    return dR, dPi


@njit(cache=True)
def polar_project(R):
    U, _, Vt = np.linalg.svd(R)
    return mm(U, Vt)


@njit(cache=True)
def rk4_step(R, Pi, u, h, Jinv):
    k1R, k1P = rigid_rhs(R, Pi, u, Jinv)
    k2R, k2P = rigid_rhs(R + 0.5 * h * k1R, Pi + 0.5 * h * k1P, u, Jinv)
    k3R, k3P = rigid_rhs(R + 0.5 * h * k2R, Pi + 0.5 * h * k2P, u, Jinv)
    k4R, k4P = rigid_rhs(R + h * k3R, Pi + h * k3P, u, Jinv)
    R1 = R + (h / 6.0) * (k1R + 2.0 * k2R + 2.0 * k3R + k4R)
    Pi1 = Pi + (h / 6.0) * (k1P + 2.0 * k2P + 2.0 * k3P + k4P)
    return R1, Pi1


@njit(cache=True)
def rk4_run(R0, Pi0, torques, h, Jinv, project, stride, k0, k_last):
    n = torques.shape[0]
    cap = n // stride + 2
    Rs = np.empty((cap, 3, 3))
    Ps = np.empty((cap, 3))
    ks = np.empty(cap, dtype=np.int64)
    m = 0
    R = R0.copy()
    Pi = Pi0.copy()
    for i in range(n):
        R, Pi = rk4_step(R, Pi, torques[i], h, Jinv)
        if project:
            R = polar_project(R)
        k = k0 + i + 1
        if k % stride == 0 or k == k_last:
            Rs[m] = R
            Ps[m] = Pi
            ks[m] = k
            m += 1
    return Rs[:m], Ps[:m], ks[:m], R, Pi
