"""Command line interface.

Subcommands: run, accuracy-study, compare-schemes, export.  Configs are
preset names or YAML files (see pfc.config).  Exit codes: 0 success, 2
configuration errors, 3 solver divergence.  The PFC_THREADS environment
variable caps FFT worker threads.
"""

from __future__ import annotations

import math
import sys
from dataclasses import replace
from pathlib import Path

import click
import numpy as np

from . import figures, reports
from .config import (
    ConfigError,
    InitSpec,
    RunConfig,
    resolve_config,
    scale_dims,
    with_output_dir,
)
from .models import DiscreteEnergy
from .optim import (
    DivergenceError,
    TraceRecord,
    adaptive_apg_solve,
    apg_solve,
    sis_solve,
)
from .phases import (
    init_from_modes_file,
    init_preset,
    lattices_match,
    load_field,
    save_field,
)
from .spectral import LatticeSpec, SpectralField, to_physical, sample_window

CONFIG_EXIT = 2
DIVERGED_EXIT = 3


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _build_initial(cfg: RunConfig) -> SpectralField:
    init = cfg.init
    if init.snapshot is not None:
        field = load_field(init.snapshot)
        if not lattices_match(field.lattice, cfg.lattice):
            raise ConfigError(
                f"snapshot {init.snapshot} was saved on grid {field.lattice.dims}"
                f" and does not match the run lattice {cfg.lattice.dims}"
            )
        return SpectralField(field.coeffs, cfg.lattice)
    if init.modes_file is not None:
        return init_from_modes_file(init.modes_file, cfg.lattice)
    if init.preset is not None:
        return init_preset(init.preset, cfg.lattice, init.amplitude)
    raise ConfigError(
        f"configuration {cfg.name!r} requires an initial snapshot; pass --init-snapshot"
    )


def _solve(cfg: RunConfig, problem: DiscreteEnergy, phi0: SpectralField):
    s = cfg.solver
    if s.method == "sis":
        return sis_solve(problem, phi0, s.alpha, s.config)
    if s.method == "apg":
        return apg_solve(problem, phi0, s.alpha, s.config)
    return adaptive_apg_solve(problem, phi0, s.config)


def _trace_meta(cfg: RunConfig, label: str | None = None, alpha: float | None = None) -> dict:
    init = cfg.init
    source = (
        f"preset:{init.preset}"
        if init.preset
        else f"modes_file:{init.modes_file}"
        if init.modes_file
        else f"snapshot:{init.snapshot}"
    )
    meta = {
        "config": cfg.name,
        "run": label or cfg.solver.method,
        "grid": "x".join(str(n) for n in cfg.lattice.dims),
        "model": cfg.model.kind,
        "init": source,
        "amplitude": format(init.amplitude, ".17g"),
    }
    if alpha is not None:
        meta["alpha"] = format(alpha, ".17g")
    return meta


def _echo_run(trace: list[TraceRecord], restarts: int) -> None:
    last = trace[-1]
    click.echo(f"iterations = {last.iter}")
    click.echo(f"final_energy = {last.energy:.15g}")
    click.echo(f"grad_norm = {last.grad_norm:.3g}")
    click.echo(f"restarts = {restarts}")
    click.echo(f"wall_seconds = {last.wall_seconds:.2f}")


def _override_solver(cfg: RunConfig, max_iter: int | None) -> RunConfig:
    if max_iter is None:
        return cfg
    solver_cfg = replace(cfg.solver.config, max_iter=max_iter)
    return replace(cfg, solver=replace(cfg.solver, config=solver_cfg))


@click.group()
def main() -> None:
    """Spectral energy minimization for phase-field-crystal models."""


@main.command()
@click.argument("config")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None, help="Redirect all outputs into this directory.")
@click.option("--init-snapshot", type=click.Path(path_type=Path), default=None, help="Start from this field snapshot instead of the configured init.")
@click.option("--max-iter", type=int, default=None, help="Override the iteration budget.")
@click.option("--figures/--no-figures", "figures_flag", default=None, help="Force figure rendering on or off.")
def run(config, out_dir, init_snapshot, max_iter, figures_flag) -> None:
    """Minimize the configured energy; write trace, snapshot, and figures.

    CONFIG is a preset name (dg-64, dg-128, sigma-256, ddqc-24, ddqc-38) or
    a YAML file path.
    """
    try:
        cfg = resolve_config(config)
        if out_dir is not None:
            cfg = with_output_dir(cfg, out_dir)
        if init_snapshot is not None:
            new_init = InitSpec(
                snapshot=Path(init_snapshot), amplitude=cfg.init.amplitude
            )
            cfg = replace(cfg, init=new_init)
        cfg = _override_solver(cfg, max_iter)
        if figures_flag is not None:
            cfg = replace(cfg, output=replace(cfg.output, figures=figures_flag))
        problem = DiscreteEnergy(cfg.model, cfg.lattice)
        phi0 = _build_initial(cfg)
    except (ValueError, OSError) as exc:
        _fail(str(exc), CONFIG_EXIT)
        return
    out = cfg.output
    alpha = cfg.solver.alpha
    try:
        field, trace = _solve(cfg, problem, phi0)
    except DivergenceError as exc:
        if exc.trace:
            reports.write_trace(out.trace_path(), exc.trace, _trace_meta(cfg, alpha=alpha))
        _fail(f"solver diverged: {exc}", DIVERGED_EXIT)
        return
    reports.write_trace(out.trace_path(), trace, _trace_meta(cfg, alpha=alpha))
    save_field(field, out.snapshot_path())
    grid_path = out.grid_path()
    if grid_path is not None:
        _export_native(field, grid_path, out.grid_stride)
    if out.figures:
        figures.run_figure(trace, out.trace_path().with_suffix(".png"), title=cfg.name)
    restarts = sum(r.restarted for r in trace)
    click.echo(f"method = {cfg.solver.method}")
    _echo_run(trace, restarts)
    click.echo(f"trace = {out.trace_path()}")
    click.echo(f"snapshot = {out.snapshot_path()}")


@main.command("compare-schemes")
@click.argument("config")
@click.option("--alphas", required=True, help="Comma-separated fixed steps for the semi-implicit runs.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None)
@click.option("--max-iter", type=int, default=None)
def compare_schemes(config, alphas, out_dir, max_iter) -> None:
    """Run SIS at each fixed step plus adaptive APG from the same start.

    Writes one trace per run, a summary.csv of iterations/wall time to each
    energy-gap decade (gaps measured against each run's final best energy),
    and a convergence figure with restart marks.
    """
    try:
        cfg = resolve_config(config)
        if out_dir is not None:
            cfg = with_output_dir(cfg, out_dir)
        cfg = _override_solver(cfg, max_iter)
        alpha_list = _parse_alphas(alphas)
        problem = DiscreteEnergy(cfg.model, cfg.lattice)
        phi0 = _build_initial(cfg)
    except (ValueError, OSError) as exc:
        _fail(str(exc), CONFIG_EXIT)
        return
    runs: list[tuple[str, float | None]] = []
    if cfg.solver.method != "sis":
        runs.append(("adaptive_apg", None))
    runs.extend((f"sis_a{a:g}", a) for a in alpha_list)
    out_base = cfg.output.directory
    summary_rows: list[tuple] = []
    curves: list[tuple[str, list[TraceRecord]]] = []
    try:
        for label, alpha in runs:
            if alpha is None:
                _, trace = adaptive_apg_solve(problem, phi0, cfg.solver.config)
            else:
                _, trace = sis_solve(problem, phi0, alpha, cfg.solver.config)
            reports.write_trace(
                out_base / f"trace_{label}.csv", trace, _trace_meta(cfg, label, alpha)
            )
            summary_rows.extend(reports.decade_rows(label, alpha, trace))
            curves.append((label, trace))
            click.echo(
                f"{label}: iterations = {trace[-1].iter},"
                f" final_energy = {trace[-1].energy:.15g}"
            )
    except DivergenceError as exc:
        if exc.trace:
            reports.write_trace(
                out_base / f"trace_{label}.csv", exc.trace, _trace_meta(cfg, label, alpha)
            )
        _fail(f"solver diverged ({label}): {exc}", DIVERGED_EXIT)
        return
    reports.write_rows(out_base / "summary.csv", reports.SUMMARY_COLUMNS, summary_rows)
    if cfg.output.figures:
        figures.convergence_figure(curves, out_base / "convergence.png", title=cfg.name)
    click.echo(f"summary = {out_base / 'summary.csv'}")


@main.command("accuracy-study")
@click.argument("config")
@click.option("--dofs", required=True, help="Comma-separated per-axis mode counts, e.g. 32,64,128.")
@click.option("--reference", type=click.Path(path_type=Path), default=None, help="Reference snapshot; defaults to solving at the largest DOF.")
@click.option("--reference-dof", type=int, default=None, help="Solve the reference at this DOF instead.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None)
def accuracy_study(config, dofs, reference, reference_dof, out_dir) -> None:
    """Solve at several grid sizes and compare against a reference solution.

    Errors are the coefficient-norm difference (coarse modes embedded into
    the reference grid) and the absolute energy difference.
    """
    try:
        cfg = resolve_config(config)
        if out_dir is not None:
            cfg = with_output_dir(cfg, out_dir)
        if cfg.init.snapshot is not None or cfg.init.requires_snapshot:
            raise ConfigError(
                "accuracy-study needs a preset or modes_file init so every"
                " grid size can be seeded consistently"
            )
        dof_list = _parse_dofs(dofs)
        problem0 = DiscreteEnergy(cfg.model, cfg.lattice)  # validates model/lattice
        del problem0
    except (ValueError, OSError) as exc:
        _fail(str(exc), CONFIG_EXIT)
        return
    out_base = cfg.output.directory
    try:
        if reference is not None:
            ref_field = load_field(reference)
            if not lattices_match(
                _scaled_lattice(cfg.lattice, ref_field.lattice.dims), ref_field.lattice
            ):
                raise ConfigError(
                    "reference snapshot lattice does not match the scaled config lattice"
                )
            ref_iters = None
        else:
            ref_dof = reference_dof if reference_dof is not None else max(dof_list)
            ref_field, ref_trace = _solve_at_dof(cfg, ref_dof)
            ref_iters = ref_trace[-1].iter
            save_field(ref_field, out_base / "reference.pfcf")
        ref_problem = DiscreteEnergy(cfg.model, ref_field.lattice)
        ref_energy = ref_problem.energy(ref_field).total
        click.echo(
            f"reference: grid = {'x'.join(map(str, ref_field.lattice.dims))},"
            f" energy = {ref_energy:.15g}"
            + (f", iterations = {ref_iters}" if ref_iters is not None else "")
        )
        rows = []
        plot_dofs, plot_coeff, plot_energy = [], [], []
        from .spectral import embed_in_grid, norm as field_norm

        for dof in dof_list:
            dims = scale_dims(cfg.lattice.dims, dof)
            if dims == ref_field.lattice.dims:
                field, iters, energy = ref_field, ref_iters, ref_energy
            else:
                field, trace = _solve_at_dof(cfg, dof)
                iters = trace[-1].iter
                energy = trace[-1].energy
            embedded = embed_in_grid(field, ref_field.lattice)
            coeff_err = field_norm(
                SpectralField(ref_field.coeffs - embedded.coeffs, ref_field.lattice)
            )
            energy_err = abs(ref_energy - energy)
            rows.append(
                (
                    "x".join(map(str, dims)),
                    format(coeff_err, ".17g"),
                    format(energy_err, ".17g"),
                    format(energy, ".17g"),
                    iters if iters is not None else "",
                )
            )
            plot_dofs.append(dof)
            plot_coeff.append(coeff_err)
            plot_energy.append(energy_err)
            click.echo(
                f"dof {dof}: grid = {rows[-1][0]}, coeff_error = {coeff_err:.6g},"
                f" energy_error = {energy_err:.6g}"
            )
    except DivergenceError as exc:
        _fail(f"solver diverged: {exc}", DIVERGED_EXIT)
        return
    except (ValueError, OSError) as exc:
        _fail(str(exc), CONFIG_EXIT)
        return
    reports.write_rows(out_base / "accuracy.csv", reports.ACCURACY_COLUMNS, rows)
    if cfg.output.figures:
        figures.accuracy_figure(
            plot_dofs, plot_coeff, plot_energy, out_base / "accuracy.png", title=cfg.name
        )
    click.echo(f"table = {out_base / 'accuracy.csv'}")


@main.command()
@click.argument("snapshot", type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path), help="Output CSV path.")
@click.option("--stride", type=int, default=1, help="Subsample native grids by this factor.")
@click.option("--window", default=None, help="x0,x1,y0,y1 physical window for projected fields.")
@click.option("--res", type=int, default=256, help="Window samples per axis.")
@click.option("--threshold", type=float, default=1e-10, help="Relative coefficient cutoff for window sums.")
@click.option("--figure/--no-figure", default=True)
def export(snapshot, out, stride, window, res, threshold, figure) -> None:
    """Render a snapshot to a real-space CSV (and a heatmap figure).

    Fields without a projection are sampled on their native collocation
    grid; projected (quasiperiodic) fields are sampled on a rectangular
    window of the physical plane, default [0, 20 pi) squared.
    """
    try:
        field = load_field(snapshot)
        lattice = field.lattice
        if lattice.projection is None:
            if window is not None:
                raise ConfigError("--window only applies to projected fields")
            if lattice.n > 3:
                raise ConfigError(
                    "native export supports up to 3 axes; this snapshot needs"
                    " a projection to a physical window"
                )
            if stride < 1:
                raise ConfigError("--stride must be at least 1")
            _export_native(field, out, stride, render=figure)
        else:
            if lattice.d != 2:
                raise ConfigError("window export needs a 2-component projection")
            extent = _parse_window(window)
            if res < 2:
                raise ConfigError("--res must be at least 2")
            values = sample_window(field, extent, (res, res), threshold)
            _write_window_csv(out, extent, values)
            if figure:
                figures.field_figure(values, extent, Path(out).with_suffix(".png"))
        click.echo(f"export = {out}")
    except (ValueError, OSError) as exc:
        _fail(str(exc), CONFIG_EXIT)
        return


def _parse_alphas(text: str) -> list[float]:
    try:
        values = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--alphas: {exc}") from exc
    if not values:
        raise ConfigError("--alphas needs at least one value")
    if any(not math.isfinite(a) or a <= 0 for a in values):
        raise ConfigError("--alphas values must be positive")
    return values


def _parse_dofs(text: str) -> list[int]:
    try:
        values = [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise ConfigError(f"--dofs: {exc}") from exc
    if not values:
        raise ConfigError("--dofs needs at least one value")
    if any(v < 4 for v in values):
        raise ConfigError("--dofs values must be at least 4")
    return values


def _parse_window(text: str | None) -> tuple[float, float, float, float]:
    if text is None:
        side = 20.0 * math.pi
        return (0.0, side, 0.0, side)
    try:
        parts = [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--window: {exc}") from exc
    if len(parts) != 4:
        raise ConfigError("--window needs four numbers: x0,x1,y0,y1")
    x0, x1, y0, y1 = parts
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("--window needs x1 > x0 and y1 > y0")
    return (x0, x1, y0, y1)


def _scaled_lattice(base: LatticeSpec, dims: tuple[int, ...]) -> LatticeSpec:
    from .spectral import GridShape

    return LatticeSpec(base.basis, GridShape(dims), base.projection)


def _solve_at_dof(cfg: RunConfig, dof: int):
    dims = scale_dims(cfg.lattice.dims, dof)
    lattice = _scaled_lattice(cfg.lattice, dims)
    scaled = replace(cfg, lattice=lattice)
    problem = DiscreteEnergy(scaled.model, lattice)
    phi0 = _build_initial(scaled)
    return _solve(scaled, problem, phi0)


def _export_native(field: SpectralField, out: Path, stride: int, render: bool = False) -> None:
    """Write collocation samples with physical coordinates, optionally a figure.

    Positions are x = A f with A^T B = 2 pi I and f the fractional index,
    so single modes export as cos(k . x) at the grid points.
    """
    lattice = field.lattice
    n = lattice.n
    samples = to_physical(field)
    a_matrix = 2.0 * math.pi * np.linalg.inv(lattice.basis).T
    picks = [np.arange(0, dim, stride) for dim in lattice.dims]
    sub = samples[np.ix_(*picks)]
    fracs = [p / dim for p, dim in zip(picks, lattice.dims)]
    mesh = np.meshgrid(*fracs, indexing="ij", sparse=True)
    cols = []
    for i in range(n):
        acc = np.zeros(sub.shape)
        for j, f in enumerate(mesh):
            acc = acc + a_matrix[i, j] * f
        cols.append(acc.ravel())
    cols.append(sub.ravel())
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = ",".join(["x", "y", "z"][:n] + ["value"])
    np.savetxt(out, np.column_stack(cols), delimiter=",", header=header, comments="", fmt="%.17g")
    if render:
        if n == 2:
            figures.field_figure(
                sub, (0.0, 1.0, 0.0, 1.0), out.with_suffix(".png"), title="lattice fractions"
            )
        elif n == 3:
            mid = sub[:, :, sub.shape[2] // 2]
            figures.field_figure(
                mid, (0.0, 1.0, 0.0, 1.0), out.with_suffix(".png"), title="mid-plane slice"
            )


def _write_window_csv(out: Path, extent: tuple[float, float, float, float], values: np.ndarray) -> None:
    out = Path(out)
    out.parent.mkdir(parents=True, exist_ok=True)
    nx, ny = values.shape
    x = np.linspace(extent[0], extent[1], nx, endpoint=False)
    y = np.linspace(extent[2], extent[3], ny, endpoint=False)
    xs, ys = np.meshgrid(x, y, indexing="ij")
    data = np.column_stack([xs.ravel(), ys.ravel(), values.ravel()])
    np.savetxt(out, data, delimiter=",", header="x,y,value", comments="", fmt="%.17g")


if __name__ == "__main__":
    main()
