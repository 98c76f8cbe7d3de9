"""Dense Nystrom discretizations of the dispersal operators and their
auxiliary positive companions.

The dispersal operator is assembled as A = nu * Kw + diag(h) where
Kw[j, l] = w_l * k(x_l - x_j) and h is the multiplication part for the
boundary condition:

* Dirichlet-type: h = -nu + a         (mass leaving D is lost),
* Neumann-type:   h = -nu * b + a     with b(x) the in-domain kernel mass,
* periodic:       h = -nu + a         with the periodized kernel in Kw.

The quadrature self-term nu * w_j * k(0) is kept on the diagonal: that is
the plain Nystrom rule, and it makes the Neumann rows sum to a_j exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union

import numpy as np

from . import _accel
from .grid import BoundaryCondition, GridDiscretization
from .kernels import CoefficientField, KernelSpec, PeriodicKernel

AnyKernel = Union[KernelSpec, PeriodicKernel]


class OperatorKind(str, Enum):
    DISPERSAL = "dispersal"
    U = "u"
    V = "v"
    AVERAGED = "averaged"


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense discrete operator with its assembly provenance."""

    entries: np.ndarray = field(repr=False)
    bc: BoundaryCondition
    nu: float
    kind: OperatorKind
    grid: GridDiscretization = field(repr=False)
    h_values: np.ndarray = field(repr=False)
    symmetric_kernel: bool
    alpha: Optional[float] = None
    kernel: Optional[AnyKernel] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return self.entries.shape[0]

    @property
    def grid_ref(self) -> str:
        g = self.grid
        return f"{g.bc.value}:{'x'.join(str(n) for n in g.nodes_per_axis)}"

    @property
    def h_max(self) -> float:
        return float(self.h_values.max())

    @property
    def h_min(self) -> float:
        return float(self.h_values.min())

    def row_sums(self) -> np.ndarray:
        return self.entries.sum(axis=1)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        return self.entries @ u

    def dump(self, path) -> None:
        """Row-major delimited text dump at full precision."""
        np.savetxt(path, self.entries, fmt="%.17e")


def kernel_pair_matrix(grid: GridDiscretization, kernel: AnyKernel) -> np.ndarray:
    """K[j, l] = k(x_l - x_j) without quadrature weights.

    Periodic grids require a periodized kernel whose periods match the grid;
    bounded-domain grids take the plain kernel.
    """
    if grid.bc is BoundaryCondition.PERIODIC:
        if not isinstance(kernel, PeriodicKernel):
            raise ValueError(
                "periodic grids need a periodized kernel (see periodize_kernel)"
            )
        if not np.allclose(kernel.periods, grid.periods, rtol=0, atol=0):
            raise ValueError("kernel periods do not match the grid periods")
        base = kernel.base
        return _accel.kmat_periodic(
            grid.nodes,
            np.asarray(kernel.periods),
            np.asarray(kernel.shifts),
            base.delta,
            base.profile_id,
            base.normalization_constant,
        )
    if isinstance(kernel, PeriodicKernel):
        raise ValueError("periodized kernels only apply to periodic grids")
    return _accel.kmat_open(
        grid.nodes, kernel.delta, kernel.profile_id, kernel.normalization_constant
    )


def kernel_mass(grid: GridDiscretization, kernel: AnyKernel) -> np.ndarray:
    """b(x_j) = quadrature of the kernel over D, per node."""
    return kernel_pair_matrix(grid, kernel) @ grid.weights


def _check_bc_compatible(grid: GridDiscretization, bc: BoundaryCondition) -> None:
    # Dirichlet- and Neumann-type operators share the same grid geometry;
    # only periodic grids differ (wraparound kernel evaluation).
    grid_periodic = grid.bc is BoundaryCondition.PERIODIC
    if grid_periodic != (bc is BoundaryCondition.PERIODIC):
        raise ValueError(
            f"grid built for bc={grid.bc.value} cannot host a {bc.value} operator"
        )


def h_field(
    bc,
    nu: float,
    a: CoefficientField,
    grid: GridDiscretization,
    kernel: Optional[AnyKernel] = None,
) -> np.ndarray:
    """Multiplication part of the operator for the given boundary condition."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.NEUMANN:
        if kernel is None:
            raise ValueError("Neumann h-field needs the kernel for its mass term")
        return -nu * kernel_mass(grid, kernel) + a.values
    return -nu + a.values


def _weighted(kvals: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return kvals * weights[None, :]


def assemble_dispersal(
    grid: GridDiscretization,
    kernel: AnyKernel,
    bc,
    nu: float,
    a: CoefficientField,
) -> OperatorMatrix:
    """A = nu * Kw + diag(h); off-diagonal entries are nonnegative."""
    bc = BoundaryCondition.parse(bc)
    _check_bc_compatible(grid, bc)
    if nu <= 0:
        raise ValueError("nu must be positive")
    kvals = kernel_pair_matrix(grid, kernel)
    if bc is BoundaryCondition.NEUMANN:
        h = -nu * (kvals @ grid.weights) + a.values
    else:
        h = -nu + a.values
    entries = nu * _weighted(kvals, grid.weights)
    entries[np.diag_indices_from(entries)] += h
    return OperatorMatrix(
        entries=entries,
        bc=bc,
        nu=nu,
        kind=OperatorKind.DISPERSAL,
        grid=grid,
        h_values=h,
        symmetric_kernel=bool(kernel.symmetric),
        kernel=kernel,
    )


def _assemble_uv(grid, kernel, bc, nu, a, alpha, kind) -> OperatorMatrix:
    bc = BoundaryCondition.parse(bc)
    _check_bc_compatible(grid, bc)
    kvals = kernel_pair_matrix(grid, kernel)
    if bc is BoundaryCondition.NEUMANN:
        h = -nu * (kvals @ grid.weights) + a.values
    else:
        h = -nu + a.values
    hmax = float(h.max())
    if not alpha > hmax:
        raise ValueError(f"alpha must exceed max(h) = {hmax:.6g}, got {alpha:.6g}")
    kw = nu * _weighted(kvals, grid.weights)
    denom = alpha - h
    if kind is OperatorKind.U:
        entries = kw / denom[None, :]
    else:
        entries = kw / denom[:, None]
    return OperatorMatrix(
        entries=entries,
        bc=bc,
        nu=nu,
        kind=kind,
        grid=grid,
        h_values=h,
        symmetric_kernel=bool(kernel.symmetric),
        alpha=float(alpha),
        kernel=kernel,
    )


def assemble_U(grid, kernel, bc, nu, a, alpha) -> OperatorMatrix:
    """U[j, l] = nu * w_l * k(x_l - x_j) / (alpha - h(x_l)); all entries >= 0."""
    return _assemble_uv(grid, kernel, bc, nu, a, alpha, OperatorKind.U)


def assemble_V(grid, kernel, bc, nu, a, alpha) -> OperatorMatrix:
    """V[j, l] = nu * w_l * k(x_l - x_j) / (alpha - h(x_j)); all entries >= 0."""
    return _assemble_uv(grid, kernel, bc, nu, a, alpha, OperatorKind.V)


def assemble_averaged(grid: GridDiscretization, nu: float, a: CoefficientField) -> OperatorMatrix:
    """Rank-one-plus-diagonal operator: nu * (spatial mean) + (-nu + a) * identity."""
    m = grid.node_count
    h = -nu + a.values
    entries = np.tile(nu * grid.weights / grid.volume, (m, 1))
    entries[np.diag_indices_from(entries)] += h
    return OperatorMatrix(
        entries=entries,
        bc=grid.bc,
        nu=nu,
        kind=OperatorKind.AVERAGED,
        grid=grid,
        h_values=h,
        symmetric_kernel=True,
        kernel=None,
    )
