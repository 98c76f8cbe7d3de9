"""Experiment execution: spectrum reports, parameter sweeps, evolution and
competition runs, with CSV tables, structured text reports, and line plots.

Sweep points are pure functions of their payload, so they can be dispatched
to a process pool; results are gathered in input order either way, which
keeps the emitted CSV byte-identical for a fixed config and seed.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, make_coefficient
from .errors import NumericsError
from .competition import (
    CompetitionProblem,
    GrowthModel,
    exclusion_experiment,
)
from .grid import BoundaryCondition, build_grid
from .kernels import periodize_kernel
from .operators import assemble_dispersal
from .spectral import (
    CSV_HEADER,
    SpectralReport,
    bar_lambda3,
    principal_point_eig,
)
from .evolution import evolve_linear

DENSE_BUDGET = 4096  # largest node count assembled as a dense matrix

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICS = 3


def _write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _spectral_row(cfg: ScenarioConfig, grid, nu, delta, rng) -> tuple[SpectralReport, list[str]]:
    kernel = cfg.build_kernel(delta)
    if cfg.bc is BoundaryCondition.PERIODIC:
        kernel_eff = periodize_kernel(kernel, grid.periods)
    else:
        kernel_eff = kernel
    a = cfg.build_coefficient(grid, rng)
    a_op = assemble_dispersal(grid, kernel_eff, cfg.bc, nu, a)
    report = principal_point_eig(a_op, eps_gap=cfg.tolerances.get("eps_gap"))
    row = report.csv_row(cfg.bc, nu, delta, a.name, grid.nodes_per_axis[0])
    return report, row


def _sweep_point(payload: dict) -> list[str]:
    """Worker entry: evaluate one sweep point from primitives."""
    cfg = payload["cfg"]
    nu = payload["nu"]
    delta = payload["delta"]
    nodes = payload["nodes"]
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.build_grid(nodes=nodes)
    _, row = _spectral_row(cfg, grid, nu, delta, rng)
    return row


def _run_points(points: list[dict], workers: int) -> list[list[str]]:
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, points))
    return [_sweep_point(p) for p in points]


@dataclass
class ScenarioResult:
    exit_code: int
    files: list[str]
    summary: str


def run_spectrum(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
                 fmt: str = "csv") -> ScenarioResult:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.build_grid()
    report, row = _spectral_row(cfg, grid, cfg.nu[0], cfg.kernel_delta, rng)
    files = []
    if fmt == "csv":
        csv_path = os.path.join(out_dir, "spectrum.csv")
        _write_csv(csv_path, CSV_HEADER, [row])
        files.append(csv_path)
    rec_path = os.path.join(out_dir, "spectrum.txt")
    with open(rec_path, "w") as fh:
        fh.write(report.to_record())
    files.append(rec_path)
    return ScenarioResult(
        EXIT_OK, files,
        f"lambda_tilde = {report.lambda_tilde:.12g} ({report.existence_verdict.value})",
    )


def run_sweep_nu(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
                 fmt: str = "csv") -> ScenarioResult:
    """One spectral row per nu, with trend annotations.

    For symmetric kernels and non-constant coefficients the principal point
    strictly decreases in nu; the small-nu end approaches max(a) and the
    large-nu end approaches the spatial mean (Neumann/periodic) or diverges
    to -infinity (Dirichlet; checked through the surrogate lambda < -K).
    """
    points = [
        {"cfg": cfg, "nu": nu, "delta": cfg.kernel_delta, "nodes": cfg.grid_nodes}
        for nu in cfg.nu
    ]
    rows = _run_points(points, workers)
    files = []
    if fmt == "csv":
        csv_path = os.path.join(out_dir, "sweep_nu.csv")
        _write_csv(csv_path, CSV_HEADER, rows)
        files.append(csv_path)

    lams = np.array([float(r[6]) for r in rows])
    grid = cfg.build_grid()
    rng = np.random.default_rng(cfg.seed)
    a = cfg.build_coefficient(grid, rng)
    div_k = float(cfg.tolerances.get("divergence_threshold") or 100.0)
    annotations = {
        "monotone_decreasing": bool(np.all(np.diff(lams) < 0.0)),
        "first_vs_a_max": float(lams[0] - a.a_max),
        "last_vs_a_hat": float(lams[-1] - a.a_hat),
        "divergence_surrogate": bool(lams[-1] < -div_k)
        if cfg.bc is BoundaryCondition.DIRICHLET
        else None,
    }
    rep_path = os.path.join(out_dir, "sweep_nu.txt")
    with open(rep_path, "w") as fh:
        for key, val in annotations.items():
            if val is not None:
                fh.write(f"{key} = {val}\n")
    files.append(rep_path)
    plot_path = os.path.join(out_dir, "sweep_nu.svg")
    try:
        from .plots import line_chart

        line_chart(
            plot_path, cfg.nu, {"lambda_tilde": lams},
            xlabel="nu", ylabel="principal spectrum point", logx=True,
        )
        files.append(plot_path)
    except Exception:
        pass
    return ScenarioResult(EXIT_OK, files, f"{len(rows)} sweep rows")


def _delta_nodes(cfg: ScenarioConfig, delta: float) -> tuple[int, ...]:
    """Auto-scale resolution so delta * nodes-per-unit-length >= 8."""
    widths = np.asarray(cfg.grid_upper) - np.asarray(cfg.grid_lower)
    nodes = []
    for base_n, width in zip(cfg.grid_nodes, widths):
        need = int(np.ceil(8.0 * width / delta))
        nodes.append(max(base_n, need))
    total = int(np.prod(nodes))
    if total > DENSE_BUDGET:
        warnings.warn(
            f"delta={delta:g} forces {total} nodes, beyond the dense budget "
            f"{DENSE_BUDGET}; expect slow dense solves",
            RuntimeWarning,
        )
    return tuple(nodes)


def run_sweep_delta(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
                    fmt: str = "csv") -> ScenarioResult:
    """One spectral row per delta with endpoint annotations.

    Small delta approaches max(a) for every boundary condition; large delta
    approaches -nu + max(a) (Dirichlet), max(a) (Neumann), and the averaged
    operator's principal point (periodic).
    """
    points = [
        {"cfg": cfg, "nu": cfg.nu[0], "delta": d, "nodes": _delta_nodes(cfg, d)}
        for d in cfg.delta_list
    ]
    rows = _run_points(points, workers)
    files = []
    if fmt == "csv":
        csv_path = os.path.join(out_dir, "sweep_delta.csv")
        _write_csv(csv_path, CSV_HEADER, rows)
        files.append(csv_path)

    lams = np.array([float(r[6]) for r in rows])
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.build_grid()
    a = cfg.build_coefficient(grid, rng)
    nu = cfg.nu[0]
    if cfg.bc is BoundaryCondition.DIRICHLET:
        large_target = -nu + a.a_max
    elif cfg.bc is BoundaryCondition.NEUMANN:
        large_target = a.a_max
    else:
        large_target = bar_lambda3(nu, a, grid)
    annotations = {
        "small_delta_vs_a_max": float(lams[0] - a.a_max),
        "large_delta_vs_target": float(lams[-1] - large_target),
        "large_delta_target": float(large_target),
    }
    rep_path = os.path.join(out_dir, "sweep_delta.txt")
    with open(rep_path, "w") as fh:
        for key, val in annotations.items():
            fh.write(f"{key} = {val}\n")
    files.append(rep_path)
    plot_path = os.path.join(out_dir, "sweep_delta.svg")
    try:
        from .plots import line_chart

        line_chart(
            plot_path, cfg.delta_list, {"lambda_tilde": lams},
            xlabel="delta", ylabel="principal spectrum point", logx=True,
        )
        files.append(plot_path)
    except Exception:
        pass
    return ScenarioResult(EXIT_OK, files, f"{len(rows)} sweep rows")


def run_evolve(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
               fmt: str = "csv") -> ScenarioResult:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.build_grid()
    kernel = cfg.build_kernel()
    if cfg.bc is BoundaryCondition.PERIODIC:
        kernel = periodize_kernel(kernel, grid.periods)
    a = cfg.build_coefficient(grid, rng)
    a_op = assemble_dispersal(grid, kernel, cfg.bc, cfg.nu[0], a)
    u0_spec = cfg.evolve.get("u0", {"form": "constant", "value": 1.0})
    u0 = make_coefficient(u0_spec, grid, rng).values
    t_final = float(cfg.evolve.get("T", 1.0))
    dt = cfg.evolve.get("dt")
    stride = int(cfg.evolve.get("capture_stride", 10))
    final, traj = evolve_linear(
        a_op, u0, t_final, dt=float(dt) if dt else None, capture_stride=stride
    )
    csv_path = os.path.join(out_dir, "trajectory.csv")
    if cfg.trajectory_format == "long":
        traj.to_long_csv(csv_path)
    else:
        traj.to_wide_csv(csv_path)
    return ScenarioResult(
        EXIT_OK, [csv_path],
        f"evolved to t={final.time:g}; sup|u(T)| = {np.abs(final.values).max():.6g}",
    )


def run_compete(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
                fmt: str = "csv") -> ScenarioResult:
    rng = np.random.default_rng(cfg.seed)
    grid = cfg.build_grid()
    kernel = cfg.build_kernel()
    r_spec = cfg.compete.get("r", {"form": "constant", "value": 1.0})
    r = make_coefficient(r_spec, grid, rng)
    growth = GrowthModel(r=r, form=cfg.compete.get("growth_form", "logistic"))
    problem = CompetitionProblem.build(grid, kernel, cfg.nu[0], growth)
    u0_spec = cfg.compete.get("u0", {"form": "constant", "value": 0.5})
    v0_spec = cfg.compete.get("v0", {"form": "constant", "value": 0.5})
    u0 = make_coefficient(u0_spec, grid, rng).values
    v0 = make_coefficient(v0_spec, grid, rng).values
    tol = float(cfg.tolerances.get("exclusion_tol") or 1e-3)
    traj, v_star, verdict = exclusion_experiment(problem, u0, v0, tol=tol)
    csv_path = os.path.join(out_dir, "competition.csv")
    traj.to_csv(csv_path)
    rec_path = os.path.join(out_dir, "competition.txt")
    with open(rec_path, "w") as fh:
        fh.write(f"passed = {verdict.passed}\n")
        fh.write(f"final_sup_u = {verdict.final_u_sup:.17g}\n")
        fh.write(f"final_v_error = {verdict.final_v_error:.17g}\n")
        fh.write(f"u_monotone_tail = {verdict.u_monotone_tail}\n")
        fh.write(f"v_monotone_tail = {verdict.v_monotone_tail}\n")
        if verdict.failing_metric:
            fh.write(f"failing_metric = {verdict.failing_metric}\n")
    return ScenarioResult(
        EXIT_OK, [csv_path, rec_path],
        f"exclusion {'verified' if verdict.passed else 'NOT verified'}; "
        f"sup|u(T)| = {verdict.final_u_sup:.3e}",
    )


def run_verify(cfg: ScenarioConfig, out_dir: str, workers: int = 1,
               fmt: str = "csv") -> ScenarioResult:
    from .verification import run_battery, write_report

    results = run_battery(seed=cfg.seed, skip=set(cfg.verify_skip))
    csv_path, txt_path = write_report(results, out_dir)
    failed = [r for r in results if r.status == "fail"]
    code = EXIT_OK if not failed else EXIT_CHECK_FAILED
    return ScenarioResult(
        code, [csv_path, txt_path],
        f"{sum(r.status == 'pass' for r in results)} passed, "
        f"{len(failed)} failed, "
        f"{sum(r.status == 'skip' for r in results)} skipped",
    )


_RUNNERS = {
    "spectrum": run_spectrum,
    "sweep_nu": run_sweep_nu,
    "sweep_delta": run_sweep_delta,
    "evolve": run_evolve,
    "compete": run_compete,
    "verify": run_verify,
}


def run_scenario(cfg: ScenarioConfig, out_dir=None, seed=None, workers: int = 1,
                 fmt: str = "csv") -> ScenarioResult:
    """Execute the configured experiment; deterministic for a fixed seed."""
    if seed is not None:
        cfg.seed = int(seed)
    out_dir = out_dir or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    runner = _RUNNERS[cfg.experiment]
    try:
        return runner(cfg, out_dir, workers=workers, fmt=fmt)
    except NumericsError as exc:
        return ScenarioResult(EXIT_NUMERICS, [], f"numerical failure: {exc}")
