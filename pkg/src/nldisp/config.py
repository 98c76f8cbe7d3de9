"""Scenario configuration: a YAML file describing one experiment.

Example::

    experiment: sweep_nu
    grid: {lower: [0.0], upper: [1.0], nodes: [128], bc: neumann}
    kernel: {profile: bump, delta: 0.4}
    coefficient: {form: sin, amplitude: 0.5, frequency: 1, offset: 1.0}
    nu: [0.5, 1.0, 2.0, 4.0, 8.0]
    seed: 42
    output: {dir: out}

Field-level validation errors are collected and reported together.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import yaml

from .errors import ConfigError
from .grid import BoundaryCondition, BoxDomain, GridDiscretization, build_grid
from .kernels import (
    CoefficientField,
    KernelSpec,
    PROFILE_NAMES,
    random_fourier_field,
)

EXPERIMENT_KINDS = ("spectrum", "sweep_nu", "sweep_delta", "evolve", "compete", "verify")

COEFFICIENT_FORMS = ("constant", "sin", "cos", "random_fourier", "file")

DEFAULT_TOLERANCES = {
    "eps_gap": None,          # None -> 1e-6 * (1 + |h_max|)
    "exclusion_tol": 1e-3,
    "residual_tol": 1e-8,
    "divergence_threshold": 100.0,  # Dirichlet large-rate surrogate: lambda < -K
}


@dataclass
class ScenarioConfig:
    experiment: str
    grid_lower: tuple[float, ...]
    grid_upper: tuple[float, ...]
    grid_nodes: tuple[int, ...]
    bc: BoundaryCondition
    kernel_profile: str
    kernel_delta: float
    coefficient: dict
    nu: list[float]
    delta_list: list[float] = field(default_factory=list)
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    out_dir: str = "out"
    evolve: dict = field(default_factory=dict)
    compete: dict = field(default_factory=dict)
    verify_skip: list[str] = field(default_factory=list)
    trajectory_format: str = "wide"  # or "long"

    @property
    def dimension(self) -> int:
        return len(self.grid_lower)

    def build_domain(self) -> BoxDomain:
        return BoxDomain(self.grid_lower, self.grid_upper)

    def build_grid(self, nodes=None, bc=None) -> GridDiscretization:
        return build_grid(
            self.build_domain(), nodes or self.grid_nodes, bc or self.bc
        )

    def build_kernel(self, delta: Optional[float] = None) -> KernelSpec:
        return KernelSpec(
            self.kernel_profile, float(delta or self.kernel_delta), self.dimension
        )

    def build_coefficient(self, grid: GridDiscretization,
                          rng: Optional[np.random.Generator] = None) -> CoefficientField:
        return make_coefficient(self.coefficient, grid, rng)


def make_coefficient(spec: dict, grid: GridDiscretization,
                     rng: Optional[np.random.Generator] = None) -> CoefficientField:
    """Build a coefficient field from its config description."""
    form = spec.get("form", "constant")
    if form == "constant":
        return CoefficientField.constant(grid, float(spec.get("value", 0.0)))
    if form in ("sin", "cos"):
        amp = float(spec.get("amplitude", 1.0))
        freq = float(spec.get("frequency", 1.0))
        off = float(spec.get("offset", 0.0))
        lower = np.asarray(grid.domain.lower)
        widths = grid.domain.widths
        trig = np.sin if form == "sin" else np.cos

        def fn(x, _a=amp, _f=freq, _o=off):
            pts = np.atleast_1d(np.asarray(x, dtype=float))
            if pts.ndim == 1:
                pts = pts[:, None]
            s = (pts - lower) / widths
            out = np.full(pts.shape[0], _o)
            for i in range(pts.shape[1]):
                out = out + (_a / pts.shape[1]) * trig(2.0 * np.pi * _f * s[:, i])
            return out

        return CoefficientField.from_callable(
            grid, fn, name=f"{form}(a={amp:g} f={freq:g} o={off:g})"
        )
    if form == "random_fourier":
        if rng is None:
            rng = np.random.default_rng(int(spec.get("seed", 0)))
        return random_fourier_field(
            grid,
            rng,
            modes=int(spec.get("modes", 3)),
            amplitude=float(spec.get("amplitude", 1.0)),
            offset=float(spec.get("offset", 0.0)),
        )
    if form == "file":
        return CoefficientField.from_file(grid, spec["path"])
    raise ConfigError(f"coefficient.form: unknown form {form!r}")


def _require(mapping: dict, key: str, where: str, errs: list[str]):
    if key not in mapping:
        errs.append(f"{where}.{key}: missing required field")
        return None
    return mapping[key]


def load_config(path) -> ScenarioConfig:
    """Parse and validate a scenario file; raises ConfigError with one line
    per offending field."""
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    return validate_config(raw)


def validate_config(raw: dict) -> ScenarioConfig:
    errs: list[str] = []

    experiment = raw.get("experiment", "spectrum")
    if experiment not in EXPERIMENT_KINDS:
        errs.append(
            f"experiment: {experiment!r} is not one of {EXPERIMENT_KINDS}"
        )

    gspec = raw.get("grid", {})
    if not isinstance(gspec, dict):
        errs.append("grid: must be a mapping")
        gspec = {}
    lower = _require(gspec, "lower", "grid", errs) or [0.0]
    upper = _require(gspec, "upper", "grid", errs) or [1.0]
    nodes = _require(gspec, "nodes", "grid", errs) or [64]
    bc_raw = gspec.get("bc", "neumann")
    lower = tuple(float(v) for v in np.atleast_1d(lower))
    upper = tuple(float(v) for v in np.atleast_1d(upper))
    nodes = tuple(int(v) for v in np.atleast_1d(nodes))
    if len(lower) != len(upper) or len(lower) != len(nodes):
        errs.append("grid: lower/upper/nodes must have equal length")
    if not 1 <= len(lower) <= 2:
        errs.append(f"grid: dimension must be 1 or 2, got {len(lower)}")
    for i, (lo, hi) in enumerate(zip(lower, upper)):
        if not hi > lo:
            errs.append(f"grid.upper[{i}]: must exceed grid.lower[{i}]")
    for i, n in enumerate(nodes):
        if n < 2:
            errs.append(f"grid.nodes[{i}]: need at least 2 nodes per axis")
    try:
        bc = BoundaryCondition.parse(bc_raw)
    except ValueError as exc:
        errs.append(f"grid.bc: {exc}")
        bc = BoundaryCondition.NEUMANN

    kspec = raw.get("kernel", {})
    profile = kspec.get("profile", "bump")
    if profile not in PROFILE_NAMES:
        errs.append(f"kernel.profile: {profile!r} is not one of {PROFILE_NAMES}")
        profile = "bump"
    delta = float(kspec.get("delta", 0.5))
    if delta <= 0:
        errs.append("kernel.delta: must be positive")
        delta = 0.5

    cspec = raw.get("coefficient", {"form": "constant", "value": 0.0})
    if not isinstance(cspec, dict):
        errs.append("coefficient: must be a mapping")
        cspec = {"form": "constant", "value": 0.0}
    cform = cspec.get("form", "constant")
    if cform not in COEFFICIENT_FORMS:
        errs.append(f"coefficient.form: {cform!r} is not one of {COEFFICIENT_FORMS}")
    if cform == "file" and "path" not in cspec:
        errs.append("coefficient.path: required when form is 'file'")

    nu_raw = raw.get("nu", 1.0)
    nu_list = [float(v) for v in np.atleast_1d(nu_raw)]
    if any(v <= 0 for v in nu_list):
        errs.append("nu: entries must be positive")
    if len(nu_list) > 1 and not all(
        b > a for a, b in zip(nu_list, nu_list[1:])
    ):
        errs.append("nu: sweep lists must be strictly increasing")

    delta_list = [float(v) for v in np.atleast_1d(raw.get("delta_list", []))]
    if any(v <= 0 for v in delta_list):
        errs.append("delta_list: entries must be positive")
    if len(delta_list) > 1 and not all(
        b > a for a, b in zip(delta_list, delta_list[1:])
    ):
        errs.append("delta_list: sweep lists must be strictly increasing")
    if experiment == "sweep_delta" and not delta_list:
        errs.append("delta_list: required for sweep_delta experiments")

    tolerances = dict(DEFAULT_TOLERANCES)
    tol_raw = raw.get("tolerances", {})
    if not isinstance(tol_raw, dict):
        errs.append("tolerances: must be a mapping")
    else:
        for key, val in tol_raw.items():
            if val is not None and float(val) <= 0:
                errs.append(f"tolerances.{key}: must be positive")
            tolerances[key] = val if val is None else float(val)

    seed = int(raw.get("seed", 0))
    out_dir = str(raw.get("output", {}).get("dir", "out")) if isinstance(
        raw.get("output", {}), dict
    ) else "out"
    traj_format = str(raw.get("trajectory_format", "wide"))
    if traj_format not in ("wide", "long"):
        errs.append("trajectory_format: must be 'wide' or 'long'")

    evolve = raw.get("evolve", {}) or {}
    compete = raw.get("compete", {}) or {}
    skip = [str(s) for s in raw.get("verify_skip", []) or []]

    if errs:
        raise ConfigError("\n".join(errs))

    return ScenarioConfig(
        experiment=experiment,
        grid_lower=lower,
        grid_upper=upper,
        grid_nodes=nodes,
        bc=bc,
        kernel_profile=profile,
        kernel_delta=delta,
        coefficient=cspec,
        nu=nu_list,
        delta_list=delta_list,
        tolerances=tolerances,
        seed=seed,
        out_dir=out_dir,
        evolve=evolve,
        compete=compete,
        verify_skip=skip,
        trajectory_format=traj_format,
    )
