"""Box domains and uniform midpoint-rule quadrature grids.

Domains are axis-aligned boxes in one or two dimensions.  Grids place nodes
at cell centers with equal weights (the cell volume), which keeps all
quadrature weights positive -- the property the positive-operator spectral
machinery relies on.  Periodic grids tile the cell without duplicating the
period endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class BoundaryCondition(str, Enum):
    DIRICHLET = "dirichlet"
    NEUMANN = "neumann"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, value) -> "BoundaryCondition":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        aliases = {
            "dirichlet": cls.DIRICHLET,
            "dirichlettype": cls.DIRICHLET,
            "dirichlet_type": cls.DIRICHLET,
            "neumann": cls.NEUMANN,
            "neumanntype": cls.NEUMANN,
            "neumann_type": cls.NEUMANN,
            "periodic": cls.PERIODIC,
        }
        if key not in aliases:
            raise ValueError(f"unknown boundary condition {value!r}")
        return aliases[key]


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned box [lower_1, upper_1] x ... x [lower_N, upper_N], N in {1, 2}."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        if len(lower) != len(upper):
            raise ValueError("lower and upper must have equal length")
        if not 1 <= len(lower) <= 2:
            raise ValueError(f"dimension must be 1 or 2, got {len(lower)}")
        for lo, hi in zip(lower, upper):
            if not hi > lo:
                raise ValueError(f"degenerate axis [{lo}, {hi}]")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def widths(self) -> np.ndarray:
        return np.asarray(self.upper) - np.asarray(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(self.widths))


@dataclass(frozen=True, eq=False)
class GridDiscretization:
    """Uniform midpoint-rule grid over a box domain.

    nodes has shape (M, N) in row-major order over the axes (first axis
    slowest); weights are all equal to cell_volume so that integrating the
    constant 1 returns |D| exactly.
    """

    domain: BoxDomain
    nodes_per_axis: tuple[int, ...]
    bc: BoundaryCondition
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    cell_volume: float
    axes: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def dimension(self) -> int:
        return self.domain.dimension

    @property
    def node_count(self) -> int:
        return self.nodes.shape[0]

    @property
    def spacings(self) -> np.ndarray:
        return self.domain.widths / np.asarray(self.nodes_per_axis)

    @property
    def periods(self) -> np.ndarray:
        if self.bc is not BoundaryCondition.PERIODIC:
            raise ValueError("periods are only defined for periodic grids")
        return self.domain.widths

    @property
    def volume(self) -> float:
        return self.domain.volume

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of node samples over D."""
        return float(self.weights @ np.asarray(values, dtype=float))

    def boundary_distance(self) -> np.ndarray:
        """Distance from each node to the domain boundary (sup over axes is not
        used; this is the minimum over axes of the distance to either face)."""
        lo = np.asarray(self.domain.lower)
        hi = np.asarray(self.domain.upper)
        d = np.minimum(self.nodes - lo, hi - self.nodes)
        return d.min(axis=1)

    def reshape(self, values: np.ndarray) -> np.ndarray:
        """View node samples as an array indexed by axis (n_1, ..., n_N)."""
        return np.asarray(values).reshape(self.nodes_per_axis)


def build_grid(domain: BoxDomain, nodes_per_axis, bc) -> GridDiscretization:
    """Midpoint-rule grid: nodes at cell centers, every weight = cell volume."""
    bc = BoundaryCondition.parse(bc)
    nper = tuple(int(n) for n in np.atleast_1d(nodes_per_axis))
    if len(nper) != domain.dimension:
        raise ValueError(
            f"nodes_per_axis has length {len(nper)}, domain dimension is {domain.dimension}"
        )
    if any(n < 2 for n in nper):
        raise ValueError("need at least 2 nodes per axis")

    widths = domain.widths
    spac = widths / np.asarray(nper)
    axes = tuple(
        domain.lower[i] + (np.arange(nper[i]) + 0.5) * spac[i]
        for i in range(domain.dimension)
    )
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.reshape(-1) for m in mesh], axis=1)
    cell_volume = float(np.prod(spac))
    weights = np.full(nodes.shape[0], cell_volume)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return GridDiscretization(
        domain=domain,
        nodes_per_axis=nper,
        bc=bc,
        nodes=nodes,
        weights=weights,
        cell_volume=cell_volume,
        axes=axes,
    )


def refine_grid(grid: GridDiscretization, factor: int = 2) -> GridDiscretization:
    return build_grid(
        grid.domain, tuple(n * factor for n in grid.nodes_per_axis), grid.bc
    )


def min_image_displacement(grid: GridDiscretization, x, y) -> np.ndarray:
    """y - x shifted by period multiples so each component lies in [-p/2, p/2)."""
    if grid.bc is not BoundaryCondition.PERIODIC:
        raise ValueError("min_image_displacement requires a periodic grid")
    p = grid.periods
    d = np.atleast_1d(np.asarray(y, dtype=float) - np.asarray(x, dtype=float))
    return np.mod(d + 0.5 * p, p) - 0.5 * p
