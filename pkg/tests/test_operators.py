import numpy as np
import pytest

from nldisp import (
    BoxDomain,
    CoefficientField,
    KernelSpec,
    assemble_averaged,
    assemble_dispersal,
    assemble_U,
    assemble_V,
    bar_lambda3,
    build_grid,
    eval_kernel,
    h_field,
    periodize_kernel,
    principal_point_eig,
    radius_positive,
)
from nldisp.operators import kernel_pair_matrix

UNIT = BoxDomain((0.0,), (1.0,))
BUMP = KernelSpec("bump", 0.4, 1)


def test_h_field_dirichlet_constant():
    grid = build_grid(UNIT, (32,), "dirichlet")
    a = CoefficientField.constant(grid, 5.0)
    h = h_field("dirichlet", 2.0, a, grid)
    assert np.allclose(h, 3.0, rtol=0, atol=0)


def test_h_field_neumann_interior_and_boundary():
    grid = build_grid(UNIT, (256,), "neumann")
    a = CoefficientField.constant(grid, 0.0)
    h = h_field("neumann", 1.0, a, grid, BUMP)
    # interior nodes (further than delta from the boundary) see full mass
    interior = grid.boundary_distance() > BUMP.scaled_support_radius
    assert np.abs(h[interior] + 1.0).max() <= 1e-10
    # boundary node: truncated mass, between -1 and 0; fine-quadrature oracle
    fine = build_grid(UNIT, (65536,), "neumann")
    b_oracle = fine.integrate(eval_kernel(BUMP, fine.nodes[:, 0] - grid.nodes[0, 0]))
    assert -1.0 < h[0] < 0.0
    assert h[0] == pytest.approx(-b_oracle, abs=1e-4)


def test_h_field_neumann_needs_kernel():
    grid = build_grid(UNIT, (16,), "neumann")
    a = CoefficientField.constant(grid, 0.0)
    with pytest.raises(ValueError):
        h_field("neumann", 1.0, a, grid)


def test_neumann_zero_row_sums():
    grid = build_grid(UNIT, (96,), "neumann")
    a0 = CoefficientField.constant(grid, 0.0)
    a_op = assemble_dispersal(grid, BUMP, "neumann", 1.3, a0)
    assert np.abs(a_op.row_sums()).max() <= 1e-10
    # with a general coefficient the rows sum to a exactly
    a = CoefficientField.from_callable(
        grid, lambda x: np.cos(2 * np.pi * np.asarray(x)), "cos"
    )
    a_op2 = assemble_dispersal(grid, BUMP, "neumann", 1.3, a)
    assert np.abs(a_op2.row_sums() - a.values).max() <= 1e-10


def test_dirichlet_loses_mass():
    grid = build_grid(UNIT, (96,), "dirichlet")
    a0 = CoefficientField.constant(grid, 0.0)
    a_op = assemble_dispersal(grid, BUMP, "dirichlet", 1.0, a0)
    ones = np.ones(grid.node_count)
    img = a_op.matvec(ones)
    assert img.max() <= 1e-12
    assert img[0] < -0.1 and img[-1] < -0.1


def test_symmetric_kernel_gives_symmetric_matrix():
    grid = build_grid(UNIT, (64,), "neumann")
    a = CoefficientField.from_callable(
        grid, lambda x: np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    a_op = assemble_dispersal(grid, BUMP, "neumann", 1.0, a)
    scale = np.abs(a_op.entries).max()
    assert np.abs(a_op.entries - a_op.entries.T).max() <= 1e-12 * scale


def test_off_diagonal_nonnegative_and_shifted_positive():
    grid = build_grid(UNIT, (48,), "dirichlet")
    a = CoefficientField.from_callable(
        grid, lambda x: 0.5 * np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    a_op = assemble_dispersal(grid, BUMP, "dirichlet", 1.0, a)
    off = a_op.entries.copy()
    np.fill_diagonal(off, 0.0)
    assert off.min() >= 0.0
    # shifting by c makes the matrix entrywise nonnegative; power iteration
    # then converges to a nonnegative principal vector
    kw_diag = a_op.nu * grid.cell_volume * eval_kernel(BUMP, 0.0)
    c = max(a_op.nu - a_op.h_min, 0.0) + kw_diag
    shifted = a_op.entries + c * np.eye(grid.node_count)
    assert shifted.min() >= 0.0
    u = np.ones(grid.node_count)
    for _ in range(500):
        u = shifted @ u
        u /= np.abs(u).max()
    assert u.min() >= 0.0


def test_periodic_requires_periodized_kernel():
    grid = build_grid(UNIT, (32,), "periodic")
    a0 = CoefficientField.constant(grid, 0.0)
    with pytest.raises(ValueError):
        assemble_dispersal(grid, BUMP, "periodic", 1.0, a0)
    khat = periodize_kernel(BUMP, grid.periods)
    assemble_dispersal(grid, khat, "periodic", 1.0, a0)
    # and the reverse: a periodized kernel on a bounded-domain grid
    gridn = build_grid(UNIT, (32,), "neumann")
    with pytest.raises(ValueError):
        assemble_dispersal(gridn, khat, "neumann", 1.0, a0)


def test_periodic_matrix_is_translation_invariant():
    grid = build_grid(UNIT, (64,), "periodic")
    khat = periodize_kernel(KernelSpec("bump", 1.2, 1), grid.periods)
    kv = kernel_pair_matrix(grid, khat)
    # circulant structure: every row is a cyclic shift of the first
    for j in (1, 17, 50):
        assert np.allclose(kv[j], np.roll(kv[0], j), rtol=0, atol=1e-14)


def test_U_entries_and_closed_form_radius():
    grid = build_grid(UNIT, (96,), "dirichlet")
    nu, c = 1.3, 2.0
    alpha = -nu + c + 1.7
    a = CoefficientField.constant(grid, c)
    u_op = assemble_U(grid, BUMP, "dirichlet", nu, a, alpha)
    assert u_op.entries.min() >= 0.0
    # constant coefficient: denominator is constant, closed-form radius
    kw = kernel_pair_matrix(grid, BUMP) * grid.weights[None, :]
    rho = np.abs(np.linalg.eigvals(kw)).max()
    expected = nu * rho / (alpha + nu - c)
    assert radius_positive(u_op) == pytest.approx(expected, abs=1e-10)


def test_U_entries_with_unit_denominator():
    # alpha = -nu + c + 1 makes every denominator exactly 1: U is the
    # weighted kernel matrix scaled by nu
    grid = build_grid(UNIT, (48,), "dirichlet")
    nu, c = 1.0, 0.5
    a = CoefficientField.constant(grid, c)
    u_op = assemble_U(grid, BUMP, "dirichlet", nu, a, -nu + c + 1.0)
    expected = nu * kernel_pair_matrix(grid, BUMP) * grid.weights[None, :]
    assert np.array_equal(u_op.entries, expected)


def test_U_alpha_to_infinity():
    grid = build_grid(UNIT, (64,), "neumann")
    a = CoefficientField.from_callable(
        grid, lambda x: 0.3 * np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    u_op = assemble_U(grid, BUMP, "neumann", 1.0, a, 1e6)
    assert radius_positive(u_op) < 1e-4


def test_UV_equal_radius_and_constant_coincidence(rng):
    grid = build_grid(UNIT, (80,), "neumann")
    from nldisp import random_fourier_field

    a = random_fourier_field(grid, rng, modes=3, amplitude=0.5)
    h = h_field("neumann", 1.0, a, grid, BUMP)
    alpha = float(h.max()) + 0.6
    u_op = assemble_U(grid, BUMP, "neumann", 1.0, a, alpha)
    v_op = assemble_V(grid, BUMP, "neumann", 1.0, a, alpha)
    assert radius_positive(u_op) == pytest.approx(radius_positive(v_op), abs=1e-8)

    # constant coefficient with constant h (Dirichlet): U and V coincide
    gridd = build_grid(UNIT, (80,), "dirichlet")
    a_const = CoefficientField.constant(gridd, 0.4)
    u_c = assemble_U(gridd, BUMP, "dirichlet", 1.0, a_const, 1.5)
    v_c = assemble_V(gridd, BUMP, "dirichlet", 1.0, a_const, 1.5)
    assert np.array_equal(u_c.entries, v_c.entries)


def test_UV_alpha_preconditions():
    grid = build_grid(UNIT, (32,), "dirichlet")
    a = CoefficientField.constant(grid, 1.0)
    h_max = 0.0  # -nu + a with nu = 1
    with pytest.raises(ValueError):
        assemble_U(grid, BUMP, "dirichlet", 1.0, a, h_max)
    with pytest.raises(ValueError):
        assemble_V(grid, BUMP, "dirichlet", 1.0, a, h_max - 0.5)


def test_averaged_constant_coefficient():
    grid = build_grid(UNIT, (64,), "periodic")
    a = CoefficientField.constant(grid, 0.8)
    avg = assemble_averaged(grid, 1.7, a)
    rep = principal_point_eig(avg)
    assert rep.lambda_tilde == pytest.approx(0.8, abs=1e-12)
    phi = rep.eigenfunction
    assert np.abs(phi - phi[0]).max() <= 1e-10


def test_averaged_zero_row_sums():
    grid = build_grid(UNIT, (48,), "periodic")
    a = CoefficientField.constant(grid, 0.0)
    avg = assemble_averaged(grid, 2.0, a)
    assert np.abs(avg.row_sums()).max() <= 1e-12


def test_averaged_matches_secular_root():
    grid = build_grid(UNIT, (256,), "periodic")
    a = CoefficientField.from_callable(
        grid, lambda x: np.sin(2 * np.pi * np.asarray(x)), "sin"
    )
    lam_avg = principal_point_eig(assemble_averaged(grid, 1.0, a)).lambda_tilde
    assert lam_avg == pytest.approx(bar_lambda3(1.0, a, grid), abs=1e-8)


def test_2d_assembly_structure():
    dom = BoxDomain((0.0, 0.0), (1.0, 1.0))
    kernel2 = KernelSpec("bump", 0.4, 2)
    gridn = build_grid(dom, (12, 12), "neumann")
    a0 = CoefficientField.constant(gridn, 0.0)
    a_op = assemble_dispersal(gridn, kernel2, "neumann", 1.0, a0)
    assert np.abs(a_op.row_sums()).max() <= 1e-10
    assert principal_point_eig(a_op).lambda_tilde == pytest.approx(0.0, abs=1e-10)

    gridp = build_grid(dom, (12, 12), "periodic")
    khat = periodize_kernel(kernel2, gridp.periods)
    a0p = CoefficientField.constant(gridp, 0.0)
    ap_op = assemble_dispersal(gridp, khat, "periodic", 1.0, a0p)
    # translation invariance on the periodic lattice: constant row sums
    sums = ap_op.entries.sum(axis=1)
    assert np.abs(sums - sums[0]).max() <= 1e-12


def test_matrix_dump_roundtrip(tmp_path):
    grid = build_grid(UNIT, (24,), "neumann")
    a = CoefficientField.constant(grid, 0.3)
    a_op = assemble_dispersal(grid, BUMP, "neumann", 1.0, a)
    path = tmp_path / "matrix.txt"
    a_op.dump(path)
    back = np.loadtxt(path)
    assert np.array_equal(back, a_op.entries)


def test_refinement_consistency_of_principal_point():
    # the assembled principal point converges under refinement; order logged
    tri = KernelSpec("triangle_tensor", 0.37, 1)
    lams = {}
    for n in (64, 128, 256, 1024):
        grid = build_grid(UNIT, (n,), "dirichlet")
        a = CoefficientField.from_callable(
            grid, lambda x: 0.5 * np.sin(2 * np.pi * np.asarray(x)), "sin"
        )
        lams[n] = principal_point_eig(
            assemble_dispersal(grid, tri, "dirichlet", 1.0, a)
        ).lambda_tilde
    e64 = abs(lams[64] - lams[1024])
    e128 = abs(lams[128] - lams[1024])
    e256 = abs(lams[256] - lams[1024])
    print(f"refinement errors: n=64 {e64:.3e}, n=128 {e128:.3e}, n=256 {e256:.3e}")
    assert e128 < e64 and e256 < e128
    assert np.log2(e64 / e128) >= 1.5
