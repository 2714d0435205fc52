"""Run configuration: YAML schema, validation, and bundled presets.

A run config is a YAML mapping with four blocks::

    model:
      kind: lb                  # lb | lp
      xi: 0.1                   # lb takes xi, tau, gamma
      tau: -2.0
      gamma: 2.0
      # kind: lp                # lp takes c, eps, kappa, q1, q2
    lattice:
      dims: [64, 64, 64]
      basis: 0.408248290463863  # scalar -> that multiple of the identity
      # basis: [[...], ...]     # or the full n x n matrix
      # projection: [[...], ...]  # optional d x n matrix
    init:                       # exactly one of preset | modes_file | snapshot
      preset: dg                # dg | ddqc | zero
      # modes_file: seeds.txt
      # snapshot: start.pfcf
      amplitude: 0.3
    solver:
      method: adaptive_apg      # sis | apg | adaptive_apg
      # alpha: 0.2              # fixed step, required for sis and apg
      # plus any SolverConfig field (alpha_init, rho, eta, delta, n_max,
      # grad_tol, max_iter, bb_variant, alpha_min, alpha_max)
    output:
      directory: runs/dg-64
      trace: trace.csv
      snapshot: final.pfcf
      # grid: field.csv         # optional real-space export
      grid_stride: 1
      figures: true

Paths in init are resolved relative to the config file; the output
directory is resolved against the working directory unless overridden.
Preset names (dg-64, dg-128, sigma-256, ddqc-24, ddqc-38) stand in for a
config file on the command line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dataclass_field, replace
from pathlib import Path

import numpy as np
import yaml

from .models import LandauBrazovskii, LifshitzPetrich, ModelSpec
from .optim import SolverConfig
from .spectral import GridShape, LatticeSpec

__all__ = [
    "ConfigError",
    "InitSpec",
    "OutputSpec",
    "SolverSettings",
    "RunConfig",
    "PRESET_NAMES",
    "preset_config",
    "parse_run_config",
    "resolve_config",
    "with_output_dir",
    "scale_dims",
]

PRESET_NAMES = ("dg-64", "dg-128", "sigma-256", "ddqc-24", "ddqc-38")

SIGMA_LX = 27.7884
SIGMA_LZ = 14.1514


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


@dataclass(frozen=True)
class InitSpec:
    """Initial condition source; exactly one of preset/modes_file/snapshot."""

    preset: str | None = None
    modes_file: Path | None = None
    snapshot: Path | None = None
    amplitude: float = 0.3
    requires_snapshot: bool = False

    def __post_init__(self) -> None:
        chosen = [
            v for v in (self.preset, self.modes_file, self.snapshot) if v is not None
        ]
        if len(chosen) > 1:
            raise ConfigError("init must name exactly one of preset, modes_file, snapshot")
        if not chosen and not self.requires_snapshot:
            raise ConfigError("init must name one of preset, modes_file, snapshot")


@dataclass(frozen=True)
class SolverSettings:
    """Solver method plus knobs; alpha is the fixed step for sis and apg."""

    method: str = "adaptive_apg"
    alpha: float | None = None
    config: SolverConfig = dataclass_field(default_factory=SolverConfig)

    def __post_init__(self) -> None:
        if self.method not in ("sis", "apg", "adaptive_apg"):
            raise ConfigError(f"unknown solver method {self.method!r}")
        if self.method in ("sis", "apg"):
            if self.alpha is None or not self.alpha > 0:
                raise ConfigError(f"method {self.method} needs a positive fixed alpha")


@dataclass(frozen=True)
class OutputSpec:
    """Output directory and filenames for a run."""

    directory: Path = Path("pfc-out")
    trace: str = "trace.csv"
    snapshot: str = "final.pfcf"
    grid: str | None = None
    grid_stride: int = 1
    figures: bool = True

    def __post_init__(self) -> None:
        if self.grid_stride < 1:
            raise ConfigError("grid_stride must be at least 1")

    def trace_path(self) -> Path:
        return self.directory / self.trace

    def snapshot_path(self) -> Path:
        return self.directory / self.snapshot

    def grid_path(self) -> Path | None:
        return None if self.grid is None else self.directory / self.grid


@dataclass(frozen=True)
class RunConfig:
    """Everything one solver run needs: model, lattice, init, solver, output."""

    name: str
    model: ModelSpec
    lattice: LatticeSpec
    init: InitSpec
    solver: SolverSettings
    output: OutputSpec


def _require_mapping(node, what: str) -> dict:
    if not isinstance(node, dict):
        raise ConfigError(f"{what} must be a mapping, got {type(node).__name__}")
    return node


def _get_number(node: dict, key: str, what: str, default=None) -> float:
    if key not in node:
        if default is not None:
            return default
        raise ConfigError(f"{what} is missing required key {key!r}")
    value = node[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{what}.{key} must be a number, got {value!r}")
    if not math.isfinite(float(value)):
        raise ConfigError(f"{what}.{key} must be finite")
    return float(value)


def _parse_model(node) -> ModelSpec:
    node = _require_mapping(node, "model")
    kind = str(node.get("kind", "")).lower()
    try:
        if kind == "lb":
            return LandauBrazovskii(
                xi=_get_number(node, "xi", "model"),
                tau=_get_number(node, "tau", "model"),
                gamma=_get_number(node, "gamma", "model"),
            )
        if kind == "lp":
            return LifshitzPetrich(
                c=_get_number(node, "c", "model"),
                eps=_get_number(node, "eps", "model"),
                kappa=_get_number(node, "kappa", "model"),
                q1=_get_number(node, "q1", "model"),
                q2=_get_number(node, "q2", "model"),
            )
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc
    raise ConfigError(f"model.kind must be 'lb' or 'lp', got {node.get('kind')!r}")


def _parse_lattice(node) -> LatticeSpec:
    node = _require_mapping(node, "lattice")
    dims = node.get("dims")
    if not isinstance(dims, (list, tuple)) or not dims:
        raise ConfigError("lattice.dims must be a non-empty list of even integers")
    try:
        grid = GridShape(tuple(dims))
    except ValueError as exc:
        raise ConfigError(f"lattice.dims: {exc}") from exc
    basis = node.get("basis")
    if basis is None:
        raise ConfigError("lattice is missing required key 'basis'")
    if isinstance(basis, (int, float)) and not isinstance(basis, bool):
        basis_matrix = float(basis) * np.eye(grid.ndim)
    else:
        basis_matrix = np.asarray(basis, dtype=float)
    projection = node.get("projection")
    proj_matrix = None if projection is None else np.asarray(projection, dtype=float)
    try:
        return LatticeSpec(basis_matrix, grid, proj_matrix)
    except ValueError as exc:
        raise ConfigError(f"lattice: {exc}") from exc


def _parse_init(node, base_dir: Path) -> InitSpec:
    node = _require_mapping(node, "init")
    preset = node.get("preset")
    modes_file = node.get("modes_file")
    snapshot = node.get("snapshot")
    amplitude = _get_number(node, "amplitude", "init", default=0.3)
    if modes_file is not None:
        modes_file = (base_dir / str(modes_file)).resolve()
        if not modes_file.is_file():
            raise ConfigError(f"init.modes_file does not exist: {modes_file}")
    if snapshot is not None:
        snapshot = (base_dir / str(snapshot)).resolve()
        if not snapshot.is_file():
            raise ConfigError(f"init.snapshot does not exist: {snapshot}")
    if preset is not None:
        preset = str(preset)
    try:
        return InitSpec(preset, modes_file, snapshot, amplitude)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"init: {exc}") from exc


_SOLVER_KEYS = {
    "alpha_init",
    "alpha_min",
    "alpha_max",
    "rho",
    "eta",
    "delta",
    "grad_tol",
}


def _parse_solver(node) -> SolverSettings:
    node = _require_mapping(node, "solver") if node is not None else {}
    method = str(node.get("method", "adaptive_apg"))
    alpha = None
    if "alpha" in node:
        alpha = _get_number(node, "alpha", "solver")
    kwargs = {}
    for key in _SOLVER_KEYS:
        if key in node:
            kwargs[key] = _get_number(node, key, "solver")
    for key in ("n_max", "max_iter"):
        if key in node:
            value = node[key]
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"solver.{key} must be an integer")
            kwargs[key] = value
    if "bb_variant" in node:
        kwargs["bb_variant"] = str(node["bb_variant"])
    known = _SOLVER_KEYS | {"method", "alpha", "n_max", "max_iter", "bb_variant"}
    unknown = set(node) - known
    if unknown:
        raise ConfigError(f"solver has unknown keys: {sorted(unknown)}")
    try:
        cfg = SolverConfig(**kwargs)
        return SolverSettings(method, alpha, cfg)
    except ValueError as exc:
        raise ConfigError(f"solver: {exc}") from exc


def _parse_output(node, name: str) -> OutputSpec:
    if node is None:
        node = {}
    node = _require_mapping(node, "output")
    directory = Path(str(node.get("directory", f"pfc-out/{name}")))
    stride = node.get("grid_stride", 1)
    if isinstance(stride, bool) or not isinstance(stride, int):
        raise ConfigError("output.grid_stride must be an integer")
    figures = node.get("figures", True)
    if not isinstance(figures, bool):
        raise ConfigError("output.figures must be true or false")
    grid = node.get("grid")
    try:
        return OutputSpec(
            directory=directory,
            trace=str(node.get("trace", "trace.csv")),
            snapshot=str(node.get("snapshot", "final.pfcf")),
            grid=None if grid is None else str(grid),
            grid_stride=stride,
            figures=figures,
        )
    except ValueError as exc:
        raise ConfigError(f"output: {exc}") from exc


def parse_run_config(path: str | Path) -> RunConfig:
    """Load and validate a YAML run config; all errors become ConfigError."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    raw = _require_mapping(raw, "config")
    for block in ("model", "lattice", "init"):
        if block not in raw:
            raise ConfigError(f"config is missing the {block!r} block")
    name = str(raw.get("name", path.stem))
    model = _parse_model(raw["model"])
    lattice = _parse_lattice(raw["lattice"])
    init = _parse_init(raw["init"], path.parent)
    solver = _parse_solver(raw.get("solver"))
    output = _parse_output(raw.get("output"), name)
    _check_model_lattice(model, lattice)
    if init.preset is not None and init.preset not in ("dg", "ddqc", "zero"):
        raise ConfigError(f"init.preset must be dg, ddqc, or zero, got {init.preset!r}")
    return RunConfig(name, model, lattice, init, solver, output)


def _check_model_lattice(model: ModelSpec, lattice: LatticeSpec) -> None:
    if model.kind == "lp" and lattice.projection is None and lattice.n > 3:
        raise ConfigError(
            "an lp model on a 4-d lattice needs a projection to physical space"
        )


def scale_dims(base: tuple[int, ...], dof: int) -> tuple[int, ...]:
    """Rescale grid dims so the largest axis has `dof` modes, keeping ratios.

    Every axis rounds to the nearest even count, floor 4.
    """
    if dof < 4:
        raise ConfigError("dof must be at least 4")
    top = max(base)
    out = []
    for n in base:
        scaled = dof * n / top
        even = max(4, 2 * round(scaled / 2))
        out.append(int(even))
    return tuple(out)


def _dg_preset(n: int) -> RunConfig:
    name = f"dg-{n}"
    lattice = LatticeSpec(np.eye(3) / math.sqrt(6.0), GridShape((n, n, n)))
    return RunConfig(
        name=name,
        model=LandauBrazovskii(xi=0.1, tau=-2.0, gamma=2.0),
        lattice=lattice,
        init=InitSpec(preset="dg", amplitude=0.3),
        solver=SolverSettings("adaptive_apg", None, SolverConfig(max_iter=2000)),
        output=OutputSpec(directory=Path(f"pfc-out/{name}")),
    )


def _sigma_preset() -> RunConfig:
    two_pi = 2.0 * math.pi
    basis = np.diag([two_pi / SIGMA_LX, two_pi / SIGMA_LX, two_pi / SIGMA_LZ])
    lattice = LatticeSpec(basis, GridShape((256, 256, 128)))
    return RunConfig(
        name="sigma-256",
        model=LandauBrazovskii(xi=1.0, tau=0.01, gamma=2.0),
        lattice=lattice,
        init=InitSpec(requires_snapshot=True),
        solver=SolverSettings("adaptive_apg", None, SolverConfig(max_iter=5000)),
        output=OutputSpec(directory=Path("pfc-out/sigma-256")),
    )


def _ddqc_preset(n: int) -> RunConfig:
    name = f"ddqc-{n}"
    projection = np.array(
        [
            [1.0, math.cos(math.pi / 6.0), math.cos(math.pi / 3.0), 0.0],
            [0.0, math.sin(math.pi / 6.0), math.sin(math.pi / 3.0), 1.0],
        ]
    )
    lattice = LatticeSpec(np.eye(4), GridShape((n, n, n, n)), projection)
    return RunConfig(
        name=name,
        model=LifshitzPetrich(
            c=1.5, eps=-6.0, kappa=0.3, q1=1.0, q2=2.0 * math.cos(math.pi / 12.0)
        ),
        lattice=lattice,
        init=InitSpec(preset="ddqc", amplitude=0.3),
        solver=SolverSettings("adaptive_apg", None, SolverConfig(max_iter=5000)),
        output=OutputSpec(directory=Path(f"pfc-out/{name}")),
    )


def preset_config(name: str) -> RunConfig:
    """Bundled configurations addressable by name on the command line."""
    if name == "dg-64":
        return _dg_preset(64)
    if name == "dg-128":
        return _dg_preset(128)
    if name == "sigma-256":
        return _sigma_preset()
    if name == "ddqc-24":
        return _ddqc_preset(24)
    if name == "ddqc-38":
        return _ddqc_preset(38)
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def resolve_config(source: str | Path) -> RunConfig:
    """A preset name or a path to a YAML config file."""
    if isinstance(source, str) and source in PRESET_NAMES:
        return preset_config(source)
    return parse_run_config(source)


def with_output_dir(cfg: RunConfig, directory: str | Path) -> RunConfig:
    """Rebase all outputs into `directory`, keeping filenames."""
    return replace(cfg, output=replace(cfg.output, directory=Path(directory)))
