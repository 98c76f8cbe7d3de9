"""Hot numeric kernels: pairwise kernel matrices and RK4 stepping loops.

Two implementations of every kernel live here.  The numpy versions are the
reference; the numba versions are drop-in replacements compiled with
``@njit(cache=True)``.  Selection happens once at import time:

* numba is used when it imports cleanly,
* setting the environment variable ``NLDISP_NO_NUMBA=1`` forces the pure
  numpy path (useful for debugging and for the benchmark in
  ``benchmarks/bench_accel.py``).

Both paths are exercised against each other in the test suite.
"""

from __future__ import annotations

import os

import numpy as np

PROFILE_BUMP = 0
PROFILE_TRIANGLE = 1
PROFILE_COSINE = 2

_env = os.environ.get("NLDISP_NO_NUMBA", "").strip().lower()
NUMBA_DISABLED = _env in {"1", "true", "yes", "on"}

try:
    if NUMBA_DISABLED:
        raise ImportError("numba disabled via NLDISP_NO_NUMBA")
    from numba import njit

    USING_NUMBA = True
except ImportError:
    USING_NUMBA = False


# ---------------------------------------------------------------------------
# numpy reference implementations
# ---------------------------------------------------------------------------

def _profile_unit_np(u, profile):
    """Evaluate the unit-scale profile at displacements ``u`` of shape (..., N)."""
    if profile == PROFILE_BUMP:
        s = np.einsum("...i,...i->...", u, u)
        out = np.zeros(s.shape)
        inside = s < 1.0
        out[inside] = np.exp(1.0 / (s[inside] - 1.0))
        return out
    au = np.abs(u)
    inside = np.all(au < 1.0, axis=-1)
    if profile == PROFILE_TRIANGLE:
        vals = np.prod(1.0 - au, axis=-1)
    else:
        vals = np.prod(0.5 * (1.0 + np.cos(np.pi * u)), axis=-1)
    return np.where(inside, vals, 0.0)


def kernel_values_np(z, delta, profile, cnorm):
    """k_delta at displacements ``z`` (..., N): cnorm * unit(z/delta) / delta^N."""
    z = np.asarray(z, dtype=np.float64)
    ndim = z.shape[-1]
    return cnorm * _profile_unit_np(z / delta, profile) / delta**ndim


def kmat_open_np(nodes, delta, profile, cnorm):
    """Pairwise matrix K[j, l] = k_delta(x_l - x_j) on a bounded domain."""
    m = nodes.shape[0]
    out = np.empty((m, m))
    # chunk rows to bound the (chunk, M, N) displacement workspace
    chunk = max(1, int(4.0e6 // max(m, 1)))
    for j0 in range(0, m, chunk):
        j1 = min(j0 + chunk, m)
        z = nodes[None, :, :] - nodes[j0:j1, None, :]
        out[j0:j1, :] = kernel_values_np(z, delta, profile, cnorm)
    return out


def kmat_periodic_np(nodes, periods, shifts, delta, profile, cnorm):
    """Pairwise matrix of the periodized kernel at min-image displacements.

    shifts is the (S, N) array of lattice translates whose images can
    intersect the scaled support; the lattice sum is exact for compactly
    supported kernels.
    """
    m = nodes.shape[0]
    out = np.zeros((m, m))
    chunk = max(1, int(2.0e6 // max(m, 1)))
    half = 0.5 * periods
    for j0 in range(0, m, chunk):
        j1 = min(j0 + chunk, m)
        z = nodes[None, :, :] - nodes[j0:j1, None, :]
        z = np.mod(z + half, periods) - half
        acc = np.zeros(z.shape[:-1])
        for s in shifts:
            acc += kernel_values_np(z + s, delta, profile, cnorm)
        out[j0:j1, :] = acc
    return out


def rk4_linear_np(a_mat, u0, dt, nsteps):
    """nsteps classical RK4 steps of u' = A u; returns the final state."""
    u = u0.copy()
    for _ in range(nsteps):
        k1 = a_mat @ u
        k2 = a_mat @ (u + 0.5 * dt * k1)
        k3 = a_mat @ (u + 0.5 * dt * k2)
        k4 = a_mat @ (u + dt * k3)
        u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return u


def _competition_rhs_np(kmat_w, bmass, rvals, q, nu, u, v):
    w = u + v
    f = rvals - w - q * w * w
    du = nu * (kmat_w @ u - u) + u * f
    dv = nu * (kmat_w @ v - bmass * v) + v * f
    return du, dv


def rk4_competition_np(kmat_w, bmass, rvals, q, nu, u0, v0, dt, nsteps):
    """nsteps RK4 steps of the two-species system; returns final (u, v)."""
    u = u0.copy()
    v = v0.copy()
    for _ in range(nsteps):
        du1, dv1 = _competition_rhs_np(kmat_w, bmass, rvals, q, nu, u, v)
        du2, dv2 = _competition_rhs_np(
            kmat_w, bmass, rvals, q, nu, u + 0.5 * dt * du1, v + 0.5 * dt * dv1
        )
        du3, dv3 = _competition_rhs_np(
            kmat_w, bmass, rvals, q, nu, u + 0.5 * dt * du2, v + 0.5 * dt * dv2
        )
        du4, dv4 = _competition_rhs_np(
            kmat_w, bmass, rvals, q, nu, u + dt * du3, v + dt * dv3
        )
        u = u + (dt / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4)
        v = v + (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
    return u, v


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if USING_NUMBA:

    @njit(cache=True, inline="always")
    def _pair_value(z0, z1, n, inv_delta, scale, profile):
        """Kernel value at the displacement (z0, z1); z1 ignored when n == 1.

        Scalar arithmetic only: the pairwise loops must not allocate.
        """
        if profile == PROFILE_BUMP:
            u0 = z0 * inv_delta
            s = u0 * u0
            if n == 2:
                u1 = z1 * inv_delta
                s += u1 * u1
            if s >= 1.0:
                return 0.0
            return scale * np.exp(1.0 / (s - 1.0))
        val = 1.0
        for i in range(n):
            u = (z0 if i == 0 else z1) * inv_delta
            a = abs(u)
            if a >= 1.0:
                return 0.0
            if profile == PROFILE_TRIANGLE:
                val *= 1.0 - a
            else:
                val *= 0.5 * (1.0 + np.cos(np.pi * u))
        return scale * val

    @njit(cache=True)
    def kmat_open_nb(nodes, delta, profile, cnorm):
        m, n = nodes.shape
        out = np.empty((m, m))
        inv_delta = 1.0 / delta
        scale = cnorm / delta**n
        for j in range(m):
            for l in range(m):
                z0 = nodes[l, 0] - nodes[j, 0]
                z1 = nodes[l, 1] - nodes[j, 1] if n == 2 else 0.0
                out[j, l] = _pair_value(z0, z1, n, inv_delta, scale, profile)
        return out

    @njit(cache=True)
    def kmat_periodic_nb(nodes, periods, shifts, delta, profile, cnorm):
        m, n = nodes.shape
        ns = shifts.shape[0]
        out = np.zeros((m, m))
        inv_delta = 1.0 / delta
        scale = cnorm / delta**n
        p0 = periods[0]
        p1 = periods[1] if n == 2 else 1.0
        for j in range(m):
            for l in range(m):
                z0 = nodes[l, 0] - nodes[j, 0]
                z0 = (z0 + 0.5 * p0) % p0 - 0.5 * p0
                z1 = 0.0
                if n == 2:
                    z1 = nodes[l, 1] - nodes[j, 1]
                    z1 = (z1 + 0.5 * p1) % p1 - 0.5 * p1
                acc = 0.0
                for s in range(ns):
                    s1 = shifts[s, 1] if n == 2 else 0.0
                    acc += _pair_value(
                        z0 + shifts[s, 0], z1 + s1, n, inv_delta, scale, profile
                    )
                out[j, l] = acc
        return out

    @njit(cache=True)
    def rk4_linear_nb(a_mat, u0, dt, nsteps):
        u = u0.copy()
        for _ in range(nsteps):
            k1 = a_mat @ u
            k2 = a_mat @ (u + 0.5 * dt * k1)
            k3 = a_mat @ (u + 0.5 * dt * k2)
            k4 = a_mat @ (u + dt * k3)
            u = u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        return u

    @njit(cache=True)
    def _competition_rhs_nb(kmat_w, bmass, rvals, q, nu, u, v):
        w = u + v
        f = rvals - w - q * w * w
        du = nu * (kmat_w @ u - u) + u * f
        dv = nu * (kmat_w @ v - bmass * v) + v * f
        return du, dv

    @njit(cache=True)
    def rk4_competition_nb(kmat_w, bmass, rvals, q, nu, u0, v0, dt, nsteps):
        u = u0.copy()
        v = v0.copy()
        for _ in range(nsteps):
            du1, dv1 = _competition_rhs_nb(kmat_w, bmass, rvals, q, nu, u, v)
            du2, dv2 = _competition_rhs_nb(
                kmat_w, bmass, rvals, q, nu, u + 0.5 * dt * du1, v + 0.5 * dt * dv1
            )
            du3, dv3 = _competition_rhs_nb(
                kmat_w, bmass, rvals, q, nu, u + 0.5 * dt * du2, v + 0.5 * dt * dv2
            )
            du4, dv4 = _competition_rhs_nb(
                kmat_w, bmass, rvals, q, nu, u + dt * du3, v + dt * dv3
            )
            u = u + (dt / 6.0) * (du1 + 2.0 * du2 + 2.0 * du3 + du4)
            v = v + (dt / 6.0) * (dv1 + 2.0 * dv2 + 2.0 * dv3 + dv4)
        return u, v

    kmat_open = kmat_open_nb
    kmat_periodic = kmat_periodic_nb
    rk4_linear = rk4_linear_nb
    rk4_competition = rk4_competition_nb
else:
    kmat_open = kmat_open_np
    kmat_periodic = kmat_periodic_np
    rk4_linear = rk4_linear_np
    rk4_competition = rk4_competition_np
