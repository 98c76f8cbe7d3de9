"""Time integration of the linear dispersal evolution equations and
comparison-principle harnesses.

One classical RK4 code path serves both the linear equations here and the
nonlinear competition system; a dense matrix exponential is kept alongside
as an accuracy oracle only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from . import _accel
from .errors import NumericsError
from .grid import GridDiscretization
from .kernels import CoefficientField
from .operators import OperatorMatrix, assemble_dispersal

POSITIVITY_TOL = 1e-10


@dataclass
class EvolutionState:
    time: float
    values: np.ndarray = field(repr=False)
    grid_ref: str = ""


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (n_captures, M)

    def to_long_csv(self, path) -> None:
        """Columns {t, node_index, value}."""
        with open(path, "w") as fh:
            fh.write("t,node_index,value\n")
            for t, row in zip(self.times, self.states):
                for j, v in enumerate(row):
                    fh.write(f"{t:.17g},{j},{v:.17g}\n")

    def to_wide_csv(self, path) -> None:
        """Columns {t, v_0, ..., v_M-1}."""
        m = self.states.shape[1]
        with open(path, "w") as fh:
            fh.write("t," + ",".join(f"v_{j}" for j in range(m)) + "\n")
            for t, row in zip(self.times, self.states):
                fh.write(f"{t:.17g}," + ",".join(f"{v:.17g}" for v in row) + "\n")


def stability_dt_bound(a_op: OperatorMatrix) -> float:
    """Explicit-step bound 1 / (2 max |diag A|)."""
    cap = float(np.abs(np.diag(a_op.entries)).max())
    return np.inf if cap == 0.0 else 0.5 / cap


def default_dt(a_op: OperatorMatrix) -> float:
    cap = float(np.abs(np.diag(a_op.entries)).max())
    return 0.1 if cap == 0.0 else 0.25 / cap


def _check_state(u: np.ndarray, t: float, nonneg: bool) -> None:
    if not np.all(np.isfinite(u)):
        raise NumericsError(f"non-finite state at t={t:.6g}")
    if nonneg:
        umin = float(u.min())
        if umin < -POSITIVITY_TOL * max(1.0, float(np.abs(u).max())):
            j = int(np.argmin(u))
            raise NumericsError(
                f"positivity lost at t={t:.6g}: u[{j}] = {umin:.3e}"
            )


def evolve_linear(
    a_op: OperatorMatrix,
    u0: np.ndarray,
    t_final: float,
    dt: Optional[float] = None,
    capture_stride: Optional[int] = None,
) -> tuple[EvolutionState, Optional[Trajectory]]:
    """Integrate u' = A u to t_final with classical RK4.

    dt must respect the explicit stability bound; the final step is shortened
    to land on t_final exactly.  With capture_stride set, snapshots every
    stride steps (plus the endpoints) are returned as a Trajectory.
    Nonnegative initial data is monitored: an undershoot below the positivity
    tolerance raises instead of being clipped.
    """
    if t_final <= 0:
        raise ValueError("t_final must be positive")
    if dt is None:
        dt = default_dt(a_op)
    bound = stability_dt_bound(a_op)
    if dt > bound:
        raise ValueError(f"dt={dt:.3e} violates the stability bound {bound:.3e}")
    u = np.asarray(u0, dtype=float).copy()
    if u.shape != (a_op.size,):
        raise ValueError("u0 does not match the operator size")
    nonneg = bool(u.min() >= 0.0)
    mat = a_op.entries

    nsteps = int(np.ceil(t_final / dt - 1e-12))
    stride = capture_stride if capture_stride else max(1, min(64, nsteps))
    times = [0.0]
    states = [u.copy()] if capture_stride else None

    done = 0
    t = 0.0
    while done < nsteps:
        block = min(stride, nsteps - done)
        block_dt = dt
        # shorten the final block so the last step lands on t_final
        if done + block == nsteps:
            remaining = t_final - t
            block_dt = remaining / block
        u = _accel.rk4_linear(mat, u, block_dt, block)
        done += block
        t = t_final if done == nsteps else t + block * block_dt
        _check_state(u, t, nonneg)
        if capture_stride:
            times.append(t)
            states.append(u.copy())

    final = EvolutionState(time=t_final, values=u, grid_ref=a_op.grid_ref)
    traj = (
        Trajectory(times=np.asarray(times), states=np.asarray(states))
        if capture_stride
        else None
    )
    return final, traj


def expm_reference(a_op: OperatorMatrix, u0: np.ndarray, t_final: float) -> np.ndarray:
    """Dense matrix-exponential solution (scaling-and-squaring); oracle only."""
    return scipy.linalg.expm(t_final * a_op.entries) @ np.asarray(u0, dtype=float)


@dataclass
class ComparisonVerdict:
    passed: bool
    strict_at_end: Optional[bool] = None
    violation_time: Optional[float] = None
    violation_node: Optional[int] = None
    violation_amount: Optional[float] = None

    def __bool__(self) -> bool:
        return self.passed


def check_comparison(
    a_op: OperatorMatrix,
    u1_0: np.ndarray,
    u2_0: np.ndarray,
    t_final: float,
    dt: Optional[float] = None,
    capture_stride: int = 10,
) -> ComparisonVerdict:
    """Evolve ordered initial data and verify the ordering at every capture.

    For u1_0 <= u2_0 with u1_0 != u2_0, additionally verifies strict ordering
    of the final states.
    """
    u1_0 = np.asarray(u1_0, dtype=float)
    u2_0 = np.asarray(u2_0, dtype=float)
    if (u2_0 - u1_0).min() < 0:
        raise ValueError("initial data must satisfy u1_0 <= u2_0")
    _, traj1 = evolve_linear(a_op, u1_0, t_final, dt, capture_stride=capture_stride)
    _, traj2 = evolve_linear(a_op, u2_0, t_final, dt, capture_stride=capture_stride)
    scale = max(1.0, float(np.abs(traj2.states).max()))
    for t, s1, s2 in zip(traj1.times, traj1.states, traj2.states):
        diff = s2 - s1
        dmin = float(diff.min())
        if dmin < -POSITIVITY_TOL * scale:
            j = int(np.argmin(diff))
            return ComparisonVerdict(
                passed=False,
                violation_time=float(t),
                violation_node=j,
                violation_amount=dmin,
            )
    strict = None
    if float(np.abs(u2_0 - u1_0).max()) > 0:
        strict = bool((traj2.states[-1] - traj1.states[-1]).min() > 0)
        if not strict:
            return ComparisonVerdict(passed=False, strict_at_end=False,
                                     violation_time=t_final)
    return ComparisonVerdict(passed=True, strict_at_end=strict)


def check_coefficient_comparison(
    grid: GridDiscretization,
    kernel,
    bc,
    nu: float,
    a1: CoefficientField,
    a2: CoefficientField,
    u0: np.ndarray,
    t_final: float,
    dt: Optional[float] = None,
    capture_stride: int = 10,
) -> ComparisonVerdict:
    """Ordering of solutions under ordered coefficients from shared data."""
    if (a2.values - a1.values).min() < 0:
        raise ValueError("coefficients must satisfy a1 <= a2 pointwise")
    u0 = np.asarray(u0, dtype=float)
    if u0.min() < 0:
        raise ValueError("u0 must be nonnegative")
    op1 = assemble_dispersal(grid, kernel, bc, nu, a1)
    op2 = assemble_dispersal(grid, kernel, bc, nu, a2)
    if dt is None:
        dt = min(default_dt(op1), default_dt(op2))
    _, traj1 = evolve_linear(op1, u0, t_final, dt, capture_stride=capture_stride)
    _, traj2 = evolve_linear(op2, u0, t_final, dt, capture_stride=capture_stride)
    scale = max(1.0, float(np.abs(traj2.states).max()))
    for t, s1, s2 in zip(traj1.times, traj1.states, traj2.states):
        diff = s2 - s1
        dmin = float(diff.min())
        if dmin < -POSITIVITY_TOL * scale:
            j = int(np.argmin(diff))
            return ComparisonVerdict(
                passed=False,
                violation_time=float(t),
                violation_node=j,
                violation_amount=dmin,
            )
    return ComparisonVerdict(passed=True)
