"""Two-species competition with mixed boundary behavior.

Both species share the dispersal rate, the symmetric kernel, and the growth
function f(x, w) of the total density w = u + v; they differ only in how
dispersal treats the boundary: species u loses mass that leaves the domain
(Dirichlet-type), species v conserves it (Neumann-type).  The dynamics drive
u extinct while v converges to its single-species steady state.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _accel
from .errors import NumericsError
from .grid import BoundaryCondition, GridDiscretization
from .kernels import CoefficientField, KernelSpec
from .operators import (
    OperatorKind,
    OperatorMatrix,
    kernel_pair_matrix,
)
from .spectral import principal_point_eig

POSITIVITY_TOL = 1e-10

GROWTH_FORMS = ("logistic", "logistic_quadratic")


@dataclass(frozen=True)
class GrowthModel:
    """Growth function f(x, w) = r(x) - w - q w^2 with q in {0, 0.1}.

    Both built-in forms are strictly decreasing in w for w >= 0 and negative
    for large w, for any bounded r.
    """

    r: CoefficientField
    form: str = "logistic"

    def __post_init__(self):
        if self.form not in GROWTH_FORMS:
            raise ValueError(f"unknown growth form {self.form!r}")

    @property
    def q(self) -> float:
        return 0.1 if self.form == "logistic_quadratic" else 0.0

    def f(self, w: np.ndarray) -> np.ndarray:
        return self.r.values - w - self.q * w * w

    def f_shift(self, w: np.ndarray, grid: GridDiscretization) -> CoefficientField:
        """f(., w) as a coefficient field (for linearization spectra)."""
        return CoefficientField.from_values(grid, self.f(w), name="f(.,w)")


@dataclass(frozen=True, eq=False)
class CompetitionProblem:
    grid: GridDiscretization
    kernel: KernelSpec
    nu: float
    growth: GrowthModel
    kmat_w: np.ndarray = field(repr=False)
    bmass: np.ndarray = field(repr=False)
    assumptions_check: dict = field(default_factory=dict)

    @staticmethod
    def build(grid: GridDiscretization, kernel: KernelSpec, nu: float,
              growth: GrowthModel) -> "CompetitionProblem":
        if not kernel.symmetric:
            raise ValueError("the competition system requires a symmetric kernel")
        if nu <= 0:
            raise ValueError("nu must be positive")
        kvals = kernel_pair_matrix(grid, kernel)
        kmat_w = kvals * grid.weights[None, :]
        bmass = kvals @ grid.weights
        problem = CompetitionProblem(
            grid=grid, kernel=kernel, nu=nu, growth=growth,
            kmat_w=kmat_w, bmass=bmass,
        )
        lam1 = principal_point_eig(
            problem.linearized_operator(BoundaryCondition.DIRICHLET,
                                        np.zeros(grid.node_count))
        ).lambda_tilde
        checks = {
            "lambda1_positive": bool(lam1 > 0),
            "lambda1_at_zero": float(lam1),
            "f_negative_for_large_w": True,   # analytic for both built-in forms
            "partial2_negative": True,        # analytic for both built-in forms
        }
        object.__setattr__(problem, "assumptions_check", checks)
        if not checks["lambda1_positive"]:
            raise ValueError(
                f"standing assumption violated: lambda_1(nu, f(.,0)) = {lam1:.6g} <= 0"
            )
        return problem

    def linearized_operator(self, bc: BoundaryCondition, w: np.ndarray) -> OperatorMatrix:
        """Dispersal operator with coefficient f(., w) for one species alone."""
        bc = BoundaryCondition.parse(bc)
        fvals = self.growth.f(np.asarray(w, dtype=float))
        if bc is BoundaryCondition.DIRICHLET:
            h = -self.nu + fvals
        elif bc is BoundaryCondition.NEUMANN:
            h = -self.nu * self.bmass + fvals
        else:
            raise ValueError("competition species are Dirichlet- or Neumann-type")
        entries = self.nu * self.kmat_w.copy()
        entries[np.diag_indices_from(entries)] += h
        return OperatorMatrix(
            entries=entries, bc=bc, nu=self.nu, kind=OperatorKind.DISPERSAL,
            grid=self.grid, h_values=h, symmetric_kernel=True, kernel=self.kernel,
        )


def rhs_competition(problem: CompetitionProblem, u: np.ndarray, v: np.ndarray):
    """Right-hand side of the coupled system.

    du = nu (K u - u) + u f(x, u + v)        (Dirichlet-type coupling)
    dv = nu (K v - b v) + v f(x, u + v)      (Neumann-type coupling)
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    f = problem.growth.f(u + v)
    nu = problem.nu
    du = nu * (problem.kmat_w @ u - u) + u * f
    dv = nu * (problem.kmat_w @ v - problem.bmass * v) + v * f
    return du, dv


def _single_rhs(problem, bc, u):
    f = problem.growth.f(u)
    nu = problem.nu
    if bc is BoundaryCondition.DIRICHLET:
        return nu * (problem.kmat_w @ u - u) + u * f
    return nu * (problem.kmat_w @ u - problem.bmass * u) + u * f


def steady_state_single(
    problem: CompetitionProblem,
    which,
    residual_tol: float = 1e-8,
    max_time: float = 2000.0,
) -> np.ndarray:
    """Strictly positive stationary state of the single-species equation.

    Long-time integration from a small positive constant (the state is
    globally attracting), then a damped fixed-point polish that preserves
    positivity.  Fails if positivity is lost or the residual stalls.
    """
    bc = BoundaryCondition.parse(which)
    if bc is BoundaryCondition.PERIODIC:
        raise ValueError("single-species states are Dirichlet- or Neumann-type")
    grid = problem.grid
    lin0 = problem.linearized_operator(bc, np.zeros(grid.node_count))
    lam = principal_point_eig(lin0).lambda_tilde
    if lam <= 0:
        raise ValueError(
            f"no positive steady state: linearization at 0 has lambda = {lam:.6g}"
        )

    r_max = problem.growth.r.a_max
    u = np.full(grid.node_count, 0.05 * max(r_max, 0.1))
    diag_cap = float(
        np.abs(np.diag(lin0.entries)).max() + 2.0 * max(r_max, 1.0)
    )
    dt = 0.25 / diag_cap
    block = 64
    t = 0.0
    q = problem.growth.q
    rvals = problem.growth.r.values
    is_dirichlet = bc is BoundaryCondition.DIRICHLET
    bmass = problem.bmass if not is_dirichlet else np.ones(grid.node_count)
    zero = np.zeros(grid.node_count)
    while t < max_time:
        if is_dirichlet:
            u, _ = _accel.rk4_competition(
                problem.kmat_w, np.ones(grid.node_count), rvals, q, problem.nu,
                u, zero, dt, block,
            )
        else:
            _, u = _accel.rk4_competition(
                problem.kmat_w, bmass, rvals, q, problem.nu, zero, u, dt, block,
            )
        t += block * dt
        if not np.all(np.isfinite(u)):
            raise NumericsError("steady-state integration diverged")
        if u.min() <= 0:
            raise NumericsError("steady-state integration lost positivity")
        res = float(np.abs(_single_rhs(problem, bc, u)).max())
        if res < 1e-5:
            break

    # damped fixed-point polish u <- u + 0.5 rhs(u) / sup|linearization diag|
    for _ in range(100000):
        rhs = _single_rhs(problem, bc, u)
        res = float(np.abs(rhs).max())
        if res <= 0.1 * residual_tol:
            break
        fvals = problem.growth.f(u)
        lin_diag = (
            -problem.nu * (1.0 if is_dirichlet else problem.bmass)
            + fvals + u * (-1.0 - 2.0 * q * u)
            + problem.nu * np.diag(problem.kmat_w)
        )
        cap = float(np.abs(lin_diag).max())
        u = u + 0.5 * rhs / max(cap, 1e-12)
        if u.min() <= 0:
            raise NumericsError("fixed-point polish lost positivity")
    else:
        raise NumericsError(
            f"steady-state residual stalled at {res:.3e} (tol {residual_tol:.1e})"
        )
    return u


@dataclass
class CompetitionTrajectory:
    times: np.ndarray
    u_states: np.ndarray  # (n_captures, M)
    v_states: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    def to_csv(self, path) -> None:
        """Wide CSV with paired u/v columns."""
        m = self.u_states.shape[1]
        header = (
            "t,"
            + ",".join(f"u_{j}" for j in range(m))
            + ","
            + ",".join(f"v_{j}" for j in range(m))
        )
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for t, urow, vrow in zip(self.times, self.u_states, self.v_states):
                fh.write(
                    f"{t:.17g},"
                    + ",".join(f"{x:.17g}" for x in urow)
                    + ","
                    + ",".join(f"{x:.17g}" for x in vrow)
                    + "\n"
                )


def competition_dt(problem: CompetitionProblem, u0, v0) -> float:
    """Step size from the stiffest diagonal scale of the coupled system.

    The total density stays near max(initial total, carrying capacity), so
    the bound uses whichever is larger.
    """
    r_max = abs(problem.growth.r.a_max)
    wtot = max(float(np.max(np.asarray(u0) + np.asarray(v0))), 2.0 * r_max)
    q = problem.growth.q
    cap = problem.nu * (1.0 + float(np.diag(problem.kmat_w).max())) + r_max \
        + 2.0 * (wtot + q * wtot * wtot + r_max)
    return 0.25 / cap


def simulate_competition(
    problem: CompetitionProblem,
    u0: np.ndarray,
    v0: np.ndarray,
    t_final: float,
    dt: Optional[float] = None,
    capture_stride: int = 10,
    v_star: Optional[np.ndarray] = None,
) -> CompetitionTrajectory:
    """RK4 integration of the coupled system with per-capture diagnostics."""
    u = np.asarray(u0, dtype=float).copy()
    v = np.asarray(v0, dtype=float).copy()
    if u.min() < 0 or v.min() < 0:
        raise ValueError("initial data must be nonnegative")
    auto_dt = competition_dt(problem, u, v)
    if dt is None:
        dt = auto_dt
    elif dt > 2.0 * auto_dt:  # 2 * (0.25 / cap) = the explicit stability bound
        raise ValueError(
            f"dt={dt:.3e} violates the stability bound {2.0 * auto_dt:.3e}"
        )
    nsteps = int(np.ceil(t_final / dt - 1e-12))
    stride = max(1, capture_stride)

    times = [0.0]
    u_states = [u.copy()]
    v_states = [v.copy()]
    rvals = problem.growth.r.values
    q = problem.growth.q
    t = 0.0
    done = 0
    while done < nsteps:
        block = min(stride, nsteps - done)
        block_dt = dt
        if done + block == nsteps:
            block_dt = (t_final - t) / block
        u, v = _accel.rk4_competition(
            problem.kmat_w, problem.bmass, rvals, q, problem.nu,
            u, v, block_dt, block,
        )
        done += block
        t = t_final if done == nsteps else t + block * block_dt
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise NumericsError(f"competition state non-finite at t={t:.6g}")
        scale = max(1.0, float(np.abs(u).max()), float(np.abs(v).max()))
        if min(u.min(), v.min()) < -POSITIVITY_TOL * scale:
            raise NumericsError(f"competition state lost nonnegativity at t={t:.6g}")
        times.append(t)
        u_states.append(u.copy())
        v_states.append(v.copy())

    times = np.asarray(times)
    u_states = np.asarray(u_states)
    v_states = np.asarray(v_states)
    diagnostics = {
        "u_supnorm": np.abs(u_states).max(axis=1),
        "v_supnorm": np.abs(v_states).max(axis=1),
        "u_min": u_states.min(axis=1),
        "v_min": v_states.min(axis=1),
    }
    if v_star is not None:
        diagnostics["residual_to_exclusion"] = np.maximum(
            np.abs(u_states).max(axis=1),
            np.abs(v_states - v_star[None, :]).max(axis=1),
        )
    return CompetitionTrajectory(
        times=times, u_states=u_states, v_states=v_states, diagnostics=diagnostics
    )


@dataclass
class ExclusionVerdict:
    passed: bool
    final_u_sup: float
    final_v_error: float
    u_monotone_tail: bool
    v_monotone_tail: bool
    failing_metric: Optional[str] = None

    def __bool__(self) -> bool:
        return self.passed


def _monotone_decreasing(seq: np.ndarray) -> bool:
    if len(seq) < 2:
        return True
    return bool(np.all(np.diff(seq) <= 1e-12 * (1.0 + np.abs(seq[:-1]))))


def verify_exclusion(
    trajectory: CompetitionTrajectory,
    v_star: np.ndarray,
    tol: float,
) -> ExclusionVerdict:
    """Check convergence to (0, v*): small final norms and monotone tails.

    Pass requires sup|u| < tol and sup|v - v*| < tol at the final time, with
    both diagnostics non-increasing over the final 20% of the horizon.
    """
    if float(np.abs(trajectory.u_states[0]).max()) == 0.0 or \
       float(np.abs(trajectory.v_states[0]).max()) == 0.0:
        return ExclusionVerdict(
            passed=False, final_u_sup=float(np.abs(trajectory.u_states[-1]).max()),
            final_v_error=float(np.abs(trajectory.v_states[-1] - v_star).max()),
            u_monotone_tail=False, v_monotone_tail=False,
            failing_metric="initial data must be nonzero in both components",
        )
    u_sup = np.abs(trajectory.u_states).max(axis=1)
    v_err = np.abs(trajectory.v_states - v_star[None, :]).max(axis=1)
    tail = max(2, int(np.ceil(0.2 * len(trajectory.times))))
    u_mono = _monotone_decreasing(u_sup[-tail:])
    v_mono = _monotone_decreasing(v_err[-tail:])
    final_u = float(u_sup[-1])
    final_v = float(v_err[-1])

    failing = None
    if final_u >= tol:
        failing = f"final sup|u| = {final_u:.3e} >= {tol:.1e}"
    elif final_v >= tol:
        failing = f"final sup|v - v*| = {final_v:.3e} >= {tol:.1e}"
    elif not u_mono:
        failing = "sup|u| not monotone over the final 20% of the horizon"
    elif not v_mono:
        failing = "sup|v - v*| not monotone over the final 20% of the horizon"
    return ExclusionVerdict(
        passed=failing is None,
        final_u_sup=final_u,
        final_v_error=final_v,
        u_monotone_tail=u_mono,
        v_monotone_tail=v_mono,
        failing_metric=failing,
    )


def exclusion_experiment(
    problem: CompetitionProblem,
    u0: np.ndarray,
    v0: np.ndarray,
    tol: float = 1e-3,
    capture_stride: int = 20,
) -> tuple[CompetitionTrajectory, np.ndarray, ExclusionVerdict]:
    """Integrate until exclusion is resolved, then verify it.

    The horizon adapts: integration proceeds in windows until sup|u| and
    sup|v - v*| fall below tol/2 (so the monotone-tail check sees a settled
    decay) or until t = 2000 / lambda_2(nu, f(., 0)).
    """
    v_star = steady_state_single(problem, BoundaryCondition.NEUMANN)
    lam2 = principal_point_eig(
        problem.linearized_operator(
            BoundaryCondition.NEUMANN, np.zeros(problem.grid.node_count)
        )
    ).lambda_tilde
    t_max = 2000.0 / abs(lam2)
    dt = competition_dt(problem, u0, v0)
    window = 25.0

    u = np.asarray(u0, dtype=float)
    v = np.asarray(v0, dtype=float)
    pieces: list[CompetitionTrajectory] = []
    t_done = 0.0
    while t_done < t_max:
        t_win = min(window, t_max - t_done)
        traj = simulate_competition(
            problem, u, v, t_win, dt=dt, capture_stride=capture_stride,
            v_star=v_star,
        )
        traj.times = traj.times + t_done
        pieces.append(traj)
        u = traj.u_states[-1]
        v = traj.v_states[-1]
        t_done += t_win
        settled = (
            float(np.abs(u).max()) < 0.5 * tol
            and float(np.abs(v - v_star).max()) < 0.5 * tol
        )
        if settled:
            break

    times = np.concatenate(
        [pieces[0].times] + [p.times[1:] for p in pieces[1:]]
    )
    u_states = np.concatenate(
        [pieces[0].u_states] + [p.u_states[1:] for p in pieces[1:]]
    )
    v_states = np.concatenate(
        [pieces[0].v_states] + [p.v_states[1:] for p in pieces[1:]]
    )
    full = CompetitionTrajectory(
        times=times, u_states=u_states, v_states=v_states,
        diagnostics={
            "u_supnorm": np.abs(u_states).max(axis=1),
            "v_supnorm": np.abs(v_states).max(axis=1),
            "u_min": u_states.min(axis=1),
            "v_min": v_states.min(axis=1),
            "residual_to_exclusion": np.maximum(
                np.abs(u_states).max(axis=1),
                np.abs(v_states - v_star[None, :]).max(axis=1),
            ),
        },
    )
    verdict = verify_exclusion(full, v_star, tol)
    return full, v_star, verdict
