"""Initial field construction: sparse-mode presets, seed files, and snapshots.

Mode seeds place real amplitudes on a handful of integer modes together
with their conjugate mates, producing Hermitian (real-field) coefficients.
Snapshots store a field and its lattice in a flat little-endian binary
layout so runs can be replayed or continued bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .spectral import (
    GridShape,
    LatticeSpec,
    SpectralField,
    mode_index,
    symmetrize,
)

__all__ = [
    "ModeSeed",
    "SnapshotError",
    "double_gyroid_seeds",
    "dodecagonal_seeds",
    "init_from_modes",
    "init_from_modes_file",
    "init_preset",
    "random_field",
    "read_mode_lines",
    "save_field",
    "load_field",
    "load_initial",
    "lattices_match",
    "PRESET_INITS",
]

SNAPSHOT_MAGIC = b"PFCF"
SNAPSHOT_VERSION = 1


class SnapshotError(ValueError):
    """Malformed, truncated, or mismatched snapshot file."""


@dataclass(frozen=True)
class ModeSeed:
    """One seeded mode: integer index, sign, optional amplitude override."""

    index: tuple[int, ...]
    sign: int = 1
    amplitude: float | None = None

    def __post_init__(self) -> None:
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        object.__setattr__(self, "index", tuple(int(h) for h in self.index))


_DG_TABLE: tuple[tuple[tuple[int, int, int], int], ...] = (
    ((-2, 1, 1), 1),
    ((2, 1, 1), -1),
    ((2, 1, -1), -1),
    ((2, -1, 1), 1),
    ((1, -2, 1), 1),
    ((1, 2, -1), 1),
    ((1, 2, 1), -1),
    ((-1, 2, 1), -1),
    ((1, 1, -2), 1),
    ((1, -1, 2), -1),
    ((-1, 1, 2), 1),
    ((1, 1, 2), -1),
)

_DDQC_TABLE: tuple[tuple[int, int, int, int], ...] = (
    (0, 1, 0, -1),
    (0, -1, 0, 1),
    (1, 0, 0, 0),
    (-1, 0, 0, 0),
    (0, 1, 0, 0),
    (0, -1, 0, 0),
    (0, 0, 1, 0),
    (0, 0, -1, 0),
    (0, 0, 0, 1),
    (0, 0, 0, -1),
    (-1, 0, 1, 0),
    (1, 0, -1, 0),
    (1, 1, 0, -1),
    (-1, -1, 0, 1),
    (1, 1, 0, 0),
    (-1, -1, 0, 0),
    (0, 1, 1, 0),
    (0, -1, -1, 0),
    (0, 0, 1, 1),
    (0, 0, -1, -1),
    (-1, 0, 1, 1),
    (1, 0, -1, -1),
    (-1, -1, 1, 1),
    (1, 1, -1, -1),
)


def double_gyroid_seeds() -> list[ModeSeed]:
    """The 12 signed modes seeding the double-gyroid crystal (3-d)."""
    return [ModeSeed(h, s) for h, s in _DG_TABLE]


def dodecagonal_seeds() -> list[ModeSeed]:
    """The 24 positive modes seeding the 12-fold quasicrystal (4-d lattice)."""
    return [ModeSeed(h, 1) for h in _DDQC_TABLE]


def init_from_modes(
    seeds: list[ModeSeed],
    lattice: LatticeSpec,
    amplitude: float = 0.3,
) -> SpectralField:
    """Field with sign * amplitude on each seeded mode and its conjugate mate.

    Real amplitudes make the conjugate completion an equal value at the
    negated index; an empty seed list gives the zero field.  Out-of-range
    indices (including Nyquist) are rejected.
    """
    coeffs = np.zeros(lattice.dims, dtype=np.complex128)
    grid = lattice.grid
    for seed in seeds:
        amp = amplitude if seed.amplitude is None else seed.amplitude
        value = seed.sign * amp
        coeffs[mode_index(seed.index, grid)] = value
        coeffs[mode_index(tuple(-h for h in seed.index), grid)] = value
    return SpectralField(coeffs, lattice)


def init_preset(name: str, lattice: LatticeSpec, amplitude: float = 0.3) -> SpectralField:
    """Named initial condition: dg (3-d), ddqc (4-d lattice), or zero."""
    builder = PRESET_INITS.get(name)
    if builder is None:
        raise ValueError(
            f"unknown init preset {name!r}; choose from {sorted(PRESET_INITS)}"
        )
    return builder(lattice, amplitude)


def _init_dg(lattice: LatticeSpec, amplitude: float) -> SpectralField:
    if lattice.n != 3:
        raise ValueError("the dg preset needs a 3-d lattice")
    return init_from_modes(double_gyroid_seeds(), lattice, amplitude)


def _init_ddqc(lattice: LatticeSpec, amplitude: float) -> SpectralField:
    if lattice.n != 4:
        raise ValueError("the ddqc preset needs a 4-d lattice")
    return init_from_modes(dodecagonal_seeds(), lattice, amplitude)


def _init_zero(lattice: LatticeSpec, amplitude: float) -> SpectralField:
    return SpectralField(np.zeros(lattice.dims, dtype=np.complex128), lattice)


PRESET_INITS = {"dg": _init_dg, "ddqc": _init_ddqc, "zero": _init_zero}


def random_field(lattice: LatticeSpec, scale: float = 1.0, seed: int | None = None) -> SpectralField:
    """Hermitian Gaussian random field normalized to coefficient norm `scale`."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal(lattice.dims) + 1j * rng.standard_normal(lattice.dims)
    field = symmetrize(SpectralField(raw, lattice))
    n = float(np.linalg.norm(field.coeffs.ravel()))
    if n > 0:
        field = field * (scale / n)
    return field


def read_mode_lines(path: str | Path, n: int) -> list[tuple[tuple[int, ...], complex]]:
    """Parse a seed file: n integers plus real and imaginary parts per line.

    Blank lines and lines starting with # are skipped; malformed lines raise
    ValueError naming the line number.
    """
    out: list[tuple[tuple[int, ...], complex]] = []
    text = Path(path).read_text()
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        parts = body.replace(",", " ").split()
        if len(parts) != n + 2:
            raise ValueError(
                f"{path}:{lineno}: expected {n} indices plus re and im, got {len(parts)} fields"
            )
        try:
            idx = tuple(int(p) for p in parts[:n])
            value = complex(float(parts[n]), float(parts[n + 1]))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from exc
        out.append((idx, value))
    return out


def init_from_modes_file(path: str | Path, lattice: LatticeSpec) -> SpectralField:
    """Field from a seed file; each listed mode also sets its conjugate mate.

    A later line naming the negated index of an earlier one overwrites both
    entries (last write wins).
    """
    coeffs = np.zeros(lattice.dims, dtype=np.complex128)
    for idx, value in read_mode_lines(path, lattice.n):
        coeffs[mode_index(idx, lattice.grid)] = value
        coeffs[mode_index(tuple(-h for h in idx), lattice.grid)] = value.conjugate()
    return SpectralField(coeffs, lattice)


def _read_exact(handle, count: int, what: str) -> bytes:
    data = handle.read(count)
    if len(data) != count:
        raise SnapshotError(f"snapshot truncated while reading {what}")
    return data


def save_field(field: SpectralField, path: str | Path) -> None:
    """Write a field snapshot (lattice plus coefficients, little-endian).

    Layout: magic "PFCF", u32 version, u32 n, u32 d, n u32 dims, the n x n
    basis and d x n projection as f64 row-major (identity when the lattice
    has no projection), then the complex coefficients as f64 (re, im) pairs
    in row-major grid order.
    """
    lattice = field.lattice
    n, d = lattice.n, lattice.d
    projection = lattice.projection if lattice.projection is not None else np.eye(n)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(SNAPSHOT_MAGIC)
        f.write(np.array([SNAPSHOT_VERSION, n, d], dtype="<u4").tobytes())
        f.write(np.array(lattice.dims, dtype="<u4").tobytes())
        f.write(np.ascontiguousarray(lattice.basis, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(projection, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(field.coeffs, dtype="<c16").tobytes())


def load_field(path: str | Path) -> SpectralField:
    """Read a snapshot written by save_field; bit-exact roundtrip.

    A stored projection equal to the identity (d == n) maps back to "no
    projection" so the reconstructed lattice matches the one saved.
    """
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != SNAPSHOT_MAGIC:
            raise SnapshotError(f"{path} is not a field snapshot (bad magic)")
        version, n, d = np.frombuffer(_read_exact(f, 12, "header"), dtype="<u4")
        if version != SNAPSHOT_VERSION:
            raise SnapshotError(f"unsupported snapshot version {version}")
        if not 1 <= d <= n <= 16:
            raise SnapshotError(f"implausible snapshot dimensions n={n}, d={d}")
        dims = tuple(
            int(v) for v in np.frombuffer(_read_exact(f, 4 * n, "dims"), dtype="<u4")
        )
        basis = (
            np.frombuffer(_read_exact(f, 8 * n * n, "basis"), dtype="<f8")
            .reshape(n, n)
            .copy()
        )
        projection = (
            np.frombuffer(_read_exact(f, 8 * d * n, "projection"), dtype="<f8")
            .reshape(d, n)
            .copy()
        )
        try:
            grid = GridShape(dims)
        except ValueError as exc:
            raise SnapshotError(f"snapshot grid is invalid: {exc}") from exc
        count = grid.size
        coeffs = (
            np.frombuffer(_read_exact(f, 16 * count, "coefficients"), dtype="<c16")
            .reshape(dims)
            .astype(np.complex128)
        )
        if f.read(1):
            raise SnapshotError(f"{path} has trailing bytes after the coefficients")
    proj_arg = None if d == n and np.array_equal(projection, np.eye(n)) else projection
    try:
        lattice = LatticeSpec(basis, grid, proj_arg)
    except ValueError as exc:
        raise SnapshotError(f"snapshot lattice is invalid: {exc}") from exc
    return SpectralField(coeffs, lattice)


load_initial = load_field


def lattices_match(a: LatticeSpec, b: LatticeSpec, rtol: float = 1e-12) -> bool:
    """Same grid, basis, and projection (to relative tolerance rtol)."""
    if a.dims != b.dims:
        return False
    if not np.allclose(a.basis, b.basis, rtol=rtol, atol=0):
        return False
    if (a.projection is None) != (b.projection is None):
        return False
    if a.projection is not None and not np.allclose(
        a.projection, b.projection, rtol=rtol, atol=0
    ):
        return False
    return True
