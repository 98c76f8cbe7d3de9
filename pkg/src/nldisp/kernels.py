"""Dispersal kernels, their periodization, and coefficient fields.

Built-in kernel profiles (all nonnegative, compactly supported, unit mass,
positive at the origin, symmetric about 0):

* ``bump``            C * exp(1/(|z|^2 - 1)) on the open unit ball,
* ``triangle_tensor`` product of 1 - |z_i| on the unit cube,
* ``cosine_tensor``   product of (1 + cos(pi z_i))/2 on the unit cube.

A kernel at dispersal distance delta evaluates as
k_delta(z) = delta^-N * k_unit(z/delta).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from . import _accel
from .grid import BoundaryCondition, GridDiscretization

_PROFILE_IDS = {
    "bump": _accel.PROFILE_BUMP,
    "triangle_tensor": _accel.PROFILE_TRIANGLE,
    "cosine_tensor": _accel.PROFILE_COSINE,
}

PROFILE_NAMES = tuple(_PROFILE_IDS)


@lru_cache(maxsize=None)
def _bump_norm_constant(dim: int) -> float:
    """Unit-mass constant for the bump profile, computed once per dimension."""
    if dim == 1:
        val, _ = quad(lambda x: np.exp(1.0 / (x * x - 1.0)), -1.0, 1.0,
                      epsabs=1e-13, epsrel=1e-13)
    elif dim == 2:
        radial, _ = quad(lambda r: r * np.exp(1.0 / (r * r - 1.0)), 0.0, 1.0,
                         epsabs=1e-13, epsrel=1e-13)
        val = 2.0 * np.pi * radial
    else:
        raise ValueError(f"unsupported dimension {dim}")
    return 1.0 / val


def _profile_norm_constant(profile: str, dim: int) -> float:
    if profile == "bump":
        return _bump_norm_constant(dim)
    # tensor profiles have unit mass per axis already
    return 1.0


def _profile_support_radius(profile: str, dim: int) -> float:
    # tensor-product supports are cubes; their circumradius is sqrt(N)
    if profile == "bump":
        return 1.0
    return float(np.sqrt(dim))


@dataclass(frozen=True)
class KernelSpec:
    """A dispersal kernel k_delta with compactly supported profile.

    support_radius is the circumradius of the unscaled support (the scaled
    support fits inside the closed ball of radius delta * support_radius).
    """

    profile: str
    delta: float
    dim: int = 1
    symmetric: bool = True
    support_radius: float = field(init=False)
    normalization_constant: float = field(init=False)

    def __post_init__(self):
        if self.profile not in _PROFILE_IDS:
            raise ValueError(
                f"unknown kernel profile {self.profile!r}; choose from {PROFILE_NAMES}"
            )
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.dim not in (1, 2):
            raise ValueError("kernel dimension must be 1 or 2")
        object.__setattr__(
            self, "support_radius", _profile_support_radius(self.profile, self.dim)
        )
        object.__setattr__(
            self,
            "normalization_constant",
            _profile_norm_constant(self.profile, self.dim),
        )

    @property
    def profile_id(self) -> int:
        return _PROFILE_IDS[self.profile]

    @property
    def scaled_support_radius(self) -> float:
        return self.delta * self.support_radius

    def with_delta(self, delta: float) -> "KernelSpec":
        return KernelSpec(self.profile, float(delta), self.dim, self.symmetric)

    def __call__(self, z) -> np.ndarray:
        return eval_kernel(self, z)


def _as_points(z, dim: int) -> tuple[np.ndarray, bool]:
    """Normalize z to shape (..., dim); returns (array, was_scalar_point)."""
    z = np.asarray(z, dtype=float)
    if dim == 1 and (z.ndim == 0 or z.shape[-1] != 1):
        z = z[..., None]
        return z, z.ndim == 1
    if z.ndim == 1 and z.shape[0] == dim:
        return z[None, :], True
    return z, False


def eval_kernel(kernel: KernelSpec, z) -> np.ndarray | float:
    """Evaluate k_delta(z) = delta^-N * profile(z/delta); 0 outside the support."""
    pts, scalar = _as_points(z, kernel.dim)
    vals = _accel.kernel_values_np(
        pts, kernel.delta, kernel.profile_id, kernel.normalization_constant
    )
    return float(vals.reshape(-1)[0]) if scalar else vals


def lattice_shifts(kernel: KernelSpec, periods) -> np.ndarray:
    """All lattice translates whose shifted support can meet a min-image cell."""
    periods = np.atleast_1d(np.asarray(periods, dtype=float))
    reach = kernel.scaled_support_radius
    ranges = []
    for p in periods:
        m = int(np.ceil(reach / p + 0.5)) + 1
        ranges.append(np.arange(-m, m + 1) * p)
    mesh = np.meshgrid(*ranges, indexing="ij")
    return np.stack([g.reshape(-1) for g in mesh], axis=1)


@dataclass(frozen=True)
class PeriodicKernel:
    """Lattice-sum periodization of a compactly supported kernel.

    Evaluates sum_j k_delta(z + j . p) over the finitely many lattice shifts
    that intersect the scaled support; inherits symmetry from the base kernel.
    """

    base: KernelSpec
    periods: tuple[float, ...]
    shifts: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def delta(self) -> float:
        return self.base.delta

    @property
    def profile(self) -> str:
        return self.base.profile

    @property
    def symmetric(self) -> bool:
        return self.base.symmetric

    def __call__(self, z) -> np.ndarray | float:
        pts, scalar = _as_points(z, self.dim)
        p = np.asarray(self.periods)
        zz = np.mod(pts + 0.5 * p, p) - 0.5 * p
        acc = np.zeros(zz.shape[:-1])
        for s in self.shifts:
            acc += _accel.kernel_values_np(
                zz + s, self.base.delta, self.base.profile_id,
                self.base.normalization_constant,
            )
        return float(acc.reshape(-1)[0]) if scalar else acc


def periodize_kernel(kernel: KernelSpec, periods) -> PeriodicKernel:
    periods = tuple(float(p) for p in np.atleast_1d(periods))
    if len(periods) != kernel.dim:
        raise ValueError("periods length must match kernel dimension")
    if any(p <= 0 for p in periods):
        raise ValueError("periods must be positive")
    shifts = lattice_shifts(kernel, periods)
    shifts.setflags(write=False)
    return PeriodicKernel(base=kernel, periods=periods, shifts=shifts)


# ---------------------------------------------------------------------------
# coefficient fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoefficientField:
    """Samples of a coefficient a(x) on a grid, with cached statistics.

    ``fn`` optionally holds the closed form so the field can be re-sampled on
    a refined grid; file-loaded fields have fn=None and cannot be refined.
    """

    values: np.ndarray = field(repr=False)
    name: Optional[str] = None
    fn: Optional[Callable] = field(default=None, repr=False)
    a_max: float = field(init=False)
    a_min: float = field(init=False)
    a_hat: float = field(init=False)

    # the grid is carried along to keep the quadrature mean well-defined
    grid: GridDiscretization = field(default=None, repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.grid is None:
            raise ValueError("CoefficientField requires its grid")
        if values.shape != (self.grid.node_count,):
            raise ValueError("values must be a flat vector over grid nodes")
        values = values.copy()
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "a_max", float(values.max()))
        object.__setattr__(self, "a_min", float(values.min()))
        object.__setattr__(
            self, "a_hat", self.grid.integrate(values) / self.grid.volume
        )

    @property
    def stats(self) -> tuple[float, float, float]:
        return (self.a_max, self.a_min, self.a_hat)

    def resample(self, grid: GridDiscretization) -> "CoefficientField":
        if self.fn is None:
            raise ValueError(
                f"coefficient {self.name!r} has no closed form; cannot re-sample"
            )
        return CoefficientField.from_callable(grid, self.fn, name=self.name)

    def shifted(self, c: float) -> "CoefficientField":
        fn = self.fn
        shifted_fn = (lambda x, _f=fn, _c=c: _f(x) + _c) if fn is not None else None
        return CoefficientField(
            values=self.values + c,
            name=f"{self.name}+{c:g}" if self.name else None,
            fn=shifted_fn,
            grid=self.grid,
        )

    @staticmethod
    def from_callable(grid: GridDiscretization, fn: Callable, name=None) -> "CoefficientField":
        pts = grid.nodes if grid.dimension > 1 else grid.nodes[:, 0]
        vals = np.asarray(fn(pts), dtype=float)
        if vals.shape == ():
            vals = np.full(grid.node_count, float(vals))
        return CoefficientField(values=vals, name=name, fn=fn, grid=grid)

    @staticmethod
    def from_values(grid: GridDiscretization, values, name=None) -> "CoefficientField":
        return CoefficientField(values=np.asarray(values, float), name=name, grid=grid)

    @staticmethod
    def constant(grid: GridDiscretization, c: float, name=None) -> "CoefficientField":
        c = float(c)
        return CoefficientField.from_callable(
            grid,
            lambda pts, _c=c: np.full(np.shape(np.atleast_1d(pts))[0], _c),
            name=name or f"const({c:g})",
        )

    @staticmethod
    def from_file(grid: GridDiscretization, path, name=None) -> "CoefficientField":
        """Load node values from a delimited text file, row-major over axes."""
        vals = np.loadtxt(path).reshape(-1)
        if vals.size != grid.node_count:
            raise ValueError(
                f"file holds {vals.size} values, grid has {grid.node_count} nodes"
            )
        return CoefficientField(values=vals, name=name or str(path), grid=grid)


def coefficient_stats(a: CoefficientField, grid: GridDiscretization):
    """(max, min, quadrature mean) recomputed from the samples."""
    vals = a.values
    return (float(vals.max()), float(vals.min()),
            grid.integrate(vals) / grid.volume)


def random_fourier_field(
    grid: GridDiscretization,
    rng: np.random.Generator,
    modes: int = 3,
    amplitude: float = 1.0,
    offset: float = 0.0,
    name: Optional[str] = None,
) -> CoefficientField:
    """Smooth random coefficient: truncated Fourier series with bounded sup-norm.

    The oscillating part is rescaled so its sup-norm over the nodes equals
    ``amplitude`` exactly (unless all coefficients vanish).
    """
    dim = grid.dimension
    widths = grid.domain.widths
    lower = np.asarray(grid.domain.lower)
    cos_c = rng.normal(size=(modes, dim)) / (1.0 + np.arange(1, modes + 1))[:, None]
    sin_c = rng.normal(size=(modes, dim)) / (1.0 + np.arange(1, modes + 1))[:, None]

    def fn(x, _cos=cos_c, _sin=sin_c):
        pts = np.atleast_1d(np.asarray(x, dtype=float))
        if dim == 1 and (pts.ndim == 1):
            pts = pts[:, None]
        s = (pts - lower) / widths
        out = np.zeros(pts.shape[0])
        for m in range(modes):
            for i in range(dim):
                ang = 2.0 * np.pi * (m + 1) * s[:, i]
                out += _cos[m, i] * np.cos(ang) + _sin[m, i] * np.sin(ang)
        return out

    raw = CoefficientField.from_callable(grid, fn, name=name or "random_fourier")
    sup = max(abs(raw.a_max), abs(raw.a_min))
    scale = amplitude / sup if sup > 0 else 0.0

    def scaled_fn(x, _fn=fn, _scale=scale, _off=offset):
        return _off + _scale * _fn(x)

    return CoefficientField.from_callable(
        grid, scaled_fn, name=name or "random_fourier"
    )


# ---------------------------------------------------------------------------
# mollified flat-maximum construction
# ---------------------------------------------------------------------------

def _h_for_bc(bc, nu, a_values, grid, kernel):
    """Multiplication part of the operator; mirrors operators.h_field but
    works on raw samples (avoids a circular import)."""
    bc = BoundaryCondition.parse(bc)
    if bc is BoundaryCondition.NEUMANN:
        if kernel is None:
            raise ValueError("Neumann h-field requires the kernel")
        from .operators import kernel_pair_matrix

        kv = kernel_pair_matrix(grid, kernel)
        b = kv @ grid.weights
        return -nu * b + a_values
    return -nu + a_values


def _interior_flat_argmax(h: np.ndarray, grid: GridDiscretization,
                          rel_tol: float = 1e-12) -> bool:
    """True when h attains its max on an interior plateau of >= 3 nodes/axis."""
    arr = grid.reshape(h)
    hmax = arr.max()
    flat = arr >= hmax - rel_tol * (1.0 + abs(hmax))
    # a 3^N block of flat nodes fully inside the index range, off the boundary
    idx = np.argwhere(flat)
    shape = np.asarray(arr.shape)
    for center in idx:
        if np.any(center < 1) or np.any(center > shape - 2):
            continue
        sl = tuple(slice(c - 1, c + 2) for c in center)
        if flat[sl].all():
            return True
    return False


def mollify_flatten(
    a: CoefficientField,
    epsilon: float,
    grid: GridDiscretization,
    bc,
    nu: float,
    kernel: Optional[KernelSpec] = None,
) -> CoefficientField:
    """Perturb a by less than epsilon so the operator's multiplication part
    attains its maximum on a flat interior plateau.

    Three stages: lift an interior near-maximum by epsilon/3 with a smooth
    bump, replace a small ball around the lifted argmax by its peak value,
    then mollify.  The plateau must cover at least 3 nodes per axis, else
    the grid cannot resolve it and a ValueError is raised.  Fields whose
    h already has a flat interior argmax are returned unchanged.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    bc = BoundaryCondition.parse(bc)
    h = _h_for_bc(bc, nu, a.values, grid, kernel)
    if _interior_flat_argmax(h, grid):
        return a

    dx = float(grid.spacings.max())
    widths = grid.domain.widths
    hmax = h.max()
    dist = grid.boundary_distance()

    # plateau geometry adapts: try a generous plateau radius first and shrink
    # to the smallest the grid can resolve (>= 1.5 cells of exactly-flat zone)
    attempt_error = "epsilon/plateau not resolvable: grid too coarse"
    h2 = moll_delta = None
    for sigma in (8.0 * dx, 6.0 * dx, 4.0 * dx, 3.0 * dx):
        moll_delta = max(dx, sigma / 4.0)
        # margin guarantees the lift's flat top covers the plateau ball and
        # plateau + mollifier window stay strictly inside D
        margin = 2.0 * sigma + 2.0 * dx
        if 2.0 * margin >= float(widths.min()):
            attempt_error = "epsilon/plateau not resolvable: grid too coarse"
            continue
        interior = dist >= margin
        if not interior.any():
            attempt_error = "epsilon/plateau not resolvable: no interior nodes"
            continue

        # stage 1: lift the best interior candidate by epsilon/3 with a
        # flat-top cutoff (identically 1 on the inner half of its support, so
        # the lift adds no variation on the plateau ball)
        cand = np.where(interior, h, -np.inf)
        j0 = int(np.argmax(cand))
        if h[j0] <= hmax - epsilon / 3.0:
            attempt_error = (
                "epsilon too small: no interior node within epsilon/3 of the maximum"
            )
            continue
        x0 = grid.nodes[j0]
        lift_radius = min(float(dist[j0]) - dx, 4.0 * sigma)
        s = np.linalg.norm(grid.nodes - x0, axis=1) / lift_radius
        xi = np.where(
            s <= 0.5, 1.0,
            np.where(s < 1.0, np.cos(np.pi * (s - 0.5)) ** 2, 0.0),
        )
        h1 = h + (epsilon / 3.0) * xi

        # stage 2: replace the ball of radius sigma around the lifted argmax
        # by its peak value; valid only if h1 varies less than epsilon/3 there
        j1 = int(np.argmax(h1))
        x1 = grid.nodes[j1]
        peak = h1[j1]
        near = np.linalg.norm(grid.nodes - x1, axis=1) <= sigma
        if peak - h1[near].min() > epsilon / 3.0:
            attempt_error = (
                "epsilon too small: plateau replacement exceeds epsilon/3"
            )
            continue
        h2 = h1.copy()
        h2[near] = peak
        break
    if h2 is None:
        raise ValueError(attempt_error)

    # stage 3: mollification by renormalized in-domain averaging (the exterior
    # carries no mass); renormalization keeps the plateau exactly flat where
    # the window fits inside it and reproduces constants exactly.  The
    # mollified h is a closed form in x (a finite sum of smooth bumps over the
    # construction grid), so the returned field can be re-sampled on refined
    # grids.
    base_nodes = grid.nodes.copy()
    base_weights = grid.weights.copy()

    def h_smooth(pts):
        z = (pts[:, None, :] - base_nodes[None, :, :]) / moll_delta
        sd = np.einsum("jli,jli->jl", z, z)
        eta = np.where(sd < 1.0, np.exp(1.0 / np.minimum(sd - 1.0, -1e-300)), 0.0)
        wsum = eta @ base_weights
        return (eta * base_weights) @ h2 / wsum

    h3 = h_smooth(grid.nodes)

    if np.max(np.abs(h3 - h)) >= epsilon:
        raise ValueError("epsilon too small for the grid to resolve the construction")
    if not _interior_flat_argmax(h3, grid):
        raise ValueError("mollified field lost its interior plateau; refine the grid")

    if bc is BoundaryCondition.NEUMANN:
        # the coefficient that reproduces the flattened h uses the kernel mass
        # of the construction grid; that mass is itself a closed form in x
        def b_mass(pts):
            disp = base_nodes[None, :, :] - pts[:, None, :]
            vals = _accel.kernel_values_np(
                disp, kernel.delta, kernel.profile_id, kernel.normalization_constant
            )
            return vals @ base_weights

        def a_fn(x, _nu=float(nu)):
            pts = np.atleast_1d(np.asarray(x, dtype=float))
            if pts.ndim == 1:
                pts = pts[:, None]
            return h_smooth(pts) + _nu * b_mass(pts)
    else:

        def a_fn(x, _nu=float(nu)):
            pts = np.atleast_1d(np.asarray(x, dtype=float))
            if pts.ndim == 1:
                pts = pts[:, None]
            return h_smooth(pts) + _nu

    return CoefficientField.from_callable(
        grid, a_fn, name=f"{a.name or 'a'}^flattened"
    )
