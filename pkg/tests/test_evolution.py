import numpy as np
import pytest

from nldisp import (
    BoundaryCondition,
    BoxDomain,
    CoefficientField,
    KernelSpec,
    NumericsError,
    assemble_dispersal,
    build_grid,
    check_coefficient_comparison,
    check_comparison,
    evolve_linear,
    expm_reference,
    principal_point_eig,
    random_fourier_field,
)
from nldisp.operators import OperatorKind, OperatorMatrix
from nldisp.evolution import default_dt, stability_dt_bound

UNIT = BoxDomain((0.0,), (1.0,))
BUMP = KernelSpec("bump", 0.4, 1)


def _zero_operator(n=16):
    grid = build_grid(UNIT, (n,), "neumann")
    return OperatorMatrix(
        entries=np.zeros((n, n)),
        bc=BoundaryCondition.NEUMANN,
        nu=1.0,
        kind=OperatorKind.DISPERSAL,
        grid=grid,
        h_values=np.zeros(n),
        symmetric_kernel=True,
    )


def _sin_operator(n=64, nu=1.0, bc="neumann"):
    grid = build_grid(UNIT, (n,), bc)
    a = CoefficientField.from_callable(
        grid, lambda x: 0.4 * np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    return grid, assemble_dispersal(grid, BUMP, bc, nu, a)


def test_zero_matrix_identity_flow():
    a_op = _zero_operator()
    u0 = np.linspace(0.5, 2.0, a_op.size)
    final, _ = evolve_linear(a_op, u0, 3.0, dt=0.1)
    assert np.array_equal(final.values, u0)


def test_neumann_constant_is_stationary():
    grid = build_grid(UNIT, (64,), "neumann")
    a0 = CoefficientField.constant(grid, 0.0)
    a_op = assemble_dispersal(grid, BUMP, "neumann", 1.0, a0)
    final, _ = evolve_linear(a_op, np.ones(64), 5.0)
    assert np.abs(final.values - 1.0).max() <= 1e-10


def test_matches_matrix_exponential():
    _, a_op = _sin_operator(n=64)
    u0 = 1.0 + 0.3 * np.cos(2 * np.pi * np.arange(64) / 64)
    exact = expm_reference(a_op, u0, 1.0)
    final, _ = evolve_linear(a_op, u0, 1.0, dt=1.0 / 2048.0)
    assert np.abs(final.values - exact).max() <= 1e-8


def test_step_halving_order():
    _, a_op = _sin_operator(n=48)
    u0 = np.ones(48)
    exact = expm_reference(a_op, u0, 1.0)
    errors = []
    for nsteps in (32, 64, 128):
        final, _ = evolve_linear(a_op, u0, 1.0, dt=1.0 / nsteps)
        errors.append(np.abs(final.values - exact).max())
    orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
    assert min(orders) >= 3.5


def test_linearity():
    _, a_op = _sin_operator(n=48)
    rng = np.random.default_rng(5)
    u0 = rng.normal(size=48)
    v0 = rng.normal(size=48)
    dt = default_dt(a_op)
    lhs, _ = evolve_linear(a_op, 2.0 * u0 - 3.0 * v0, 1.0, dt=dt)
    eu, _ = evolve_linear(a_op, u0, 1.0, dt=dt)
    ev, _ = evolve_linear(a_op, v0, 1.0, dt=dt)
    combo = 2.0 * eu.values - 3.0 * ev.values
    assert np.abs(lhs.values - combo).max() <= 1e-10 * max(1, np.abs(combo).max())


def test_positivity_preserved():
    _, a_op = _sin_operator(n=64)
    rng = np.random.default_rng(6)
    u0 = np.abs(rng.normal(size=64))
    _, traj = evolve_linear(a_op, u0, 2.0, capture_stride=5)
    assert traj.states.min() >= -1e-10


def test_growth_rate_consistency_with_spectrum():
    _, a_op = _sin_operator(n=96)
    lam = principal_point_eig(a_op).lambda_tilde
    u0 = np.ones(96)
    t_span = 40.0
    final, _ = evolve_linear(a_op, u0 / np.abs(u0).max(), t_span)
    # compare log-growth over the second half of the horizon
    mid, _ = evolve_linear(a_op, u0 / np.abs(u0).max(), t_span / 2.0)
    est = (np.log(np.abs(final.values).max()) - np.log(np.abs(mid.values).max())) / (
        t_span / 2.0
    )
    assert est == pytest.approx(lam, abs=1e-4)


def test_dt_stability_rejection():
    _, a_op = _sin_operator(n=32)
    bad_dt = 2.0 * stability_dt_bound(a_op)
    with pytest.raises(ValueError):
        evolve_linear(a_op, np.ones(32), 1.0, dt=bad_dt)


def test_nan_detection_aborts():
    a_op = _zero_operator(4)
    a_op.entries[0, 0] = np.nan
    with pytest.raises(NumericsError):
        evolve_linear(a_op, np.ones(4), 1.0, dt=0.1)


def test_trajectory_csv_formats(tmp_path):
    _, a_op = _sin_operator(n=8)
    _, traj = evolve_linear(a_op, np.ones(8), 0.5, capture_stride=2)
    wide = tmp_path / "wide.csv"
    long = tmp_path / "long.csv"
    traj.to_wide_csv(wide)
    traj.to_long_csv(long)
    wide_lines = wide.read_text().splitlines()
    assert wide_lines[0] == "t," + ",".join(f"v_{j}" for j in range(8))
    assert len(wide_lines) == 1 + len(traj.times)
    long_lines = long.read_text().splitlines()
    assert long_lines[0] == "t,node_index,value"
    assert len(long_lines) == 1 + 8 * len(traj.times)


# --- comparison principles --------------------------------------------------

def test_comparison_equal_data():
    _, a_op = _sin_operator(n=48)
    u0 = np.ones(48)
    verdict = check_comparison(a_op, u0, u0, t_final=1.0)
    assert verdict.passed
    assert verdict.strict_at_end is None


def test_comparison_zero_vs_bump_spreads():
    grid, a_op = _sin_operator(n=64)
    u1 = np.zeros(64)
    u2 = np.zeros(64)
    u2[30:34] = 1.0
    verdict = check_comparison(a_op, u1, u2, t_final=2.0)
    assert verdict.passed
    assert verdict.strict_at_end
    # positivity spreads everywhere under the kernel coupling
    final, _ = evolve_linear(a_op, u2, 2.0)
    assert final.values.min() > 0.0


def test_comparison_randomized_trials(rng):
    grid, a_op = _sin_operator(n=48)
    for _ in range(10):
        u1 = random_fourier_field(grid, rng, modes=3, amplitude=1.0).values
        u2 = u1 + np.abs(random_fourier_field(grid, rng, modes=2, amplitude=1.0).values)
        assert check_comparison(a_op, u1, u2, t_final=1.0).passed


def test_comparison_rejects_unordered():
    _, a_op = _sin_operator(n=32)
    u1 = np.ones(32)
    u2 = np.ones(32)
    u2[3] -= 0.5
    with pytest.raises(ValueError):
        check_comparison(a_op, u1, u2, t_final=1.0)


def test_coefficient_comparison_equal():
    grid = build_grid(UNIT, (48,), "neumann")
    a = CoefficientField.from_callable(
        grid, lambda x: 0.2 * np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    u0 = np.ones(48)
    verdict = check_coefficient_comparison(
        grid, BUMP, "neumann", 1.0, a, a, u0, t_final=1.0
    )
    assert verdict.passed


def test_coefficient_comparison_shift_is_exponential():
    grid = build_grid(UNIT, (48,), "neumann")
    a1 = CoefficientField.from_callable(
        grid, lambda x: 0.2 * np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    a2 = a1.shifted(1.0)
    u0 = 1.0 + 0.2 * np.cos(2 * np.pi * grid.nodes[:, 0])
    op1 = assemble_dispersal(grid, BUMP, "neumann", 1.0, a1)
    op2 = assemble_dispersal(grid, BUMP, "neumann", 1.0, a2)
    # the two integrations carry different truncation constants, so the
    # semigroup identity holds to integration accuracy; a fine step reaches it
    dt = min(default_dt(op1), default_dt(op2)) / 16.0
    f1, _ = evolve_linear(op1, u0, 1.0, dt=dt)
    f2, _ = evolve_linear(op2, u0, 1.0, dt=dt)
    assert np.abs(f2.values - np.e * f1.values).max() <= 1e-8


def test_coefficient_comparison_randomized(rng):
    grid = build_grid(UNIT, (48,), "neumann")
    for _ in range(10):
        a1 = random_fourier_field(grid, rng, modes=3, amplitude=0.6)
        lift = np.abs(random_fourier_field(grid, rng, modes=2, amplitude=0.5).values)
        a2 = CoefficientField.from_values(grid, a1.values + lift, "a2")
        u0 = np.abs(random_fourier_field(grid, rng, modes=2, amplitude=1.0).values)
        verdict = check_coefficient_comparison(
            grid, BUMP, "neumann", 1.0, a1, a2, u0, t_final=1.0
        )
        assert verdict.passed
