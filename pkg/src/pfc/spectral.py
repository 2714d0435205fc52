"""Frequency-grid bookkeeping and transforms between coefficients and samples.

Fields live on an n-dimensional periodic frequency grid in standard FFT
layout, mode indices h_j in {-N_j/2, ..., N_j/2 - 1}.  The inverse
transform (coefficients to samples) is unnormalized and the forward
transform carries 1/N, so the zero-frequency coefficient equals the field
mean and mean(phi^2) equals the squared coefficient norm (Parseval).
Real fields correspond to Hermitian coefficient arrays, coeff(-h) =
conj(coeff(h)), with the unpaired Nyquist rows pinned to zero.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
import scipy.fft

__all__ = [
    "GridShape",
    "LatticeSpec",
    "WavevectorTable",
    "SpectralField",
    "LatticeError",
    "SymmetryError",
    "build_wavevectors",
    "to_physical",
    "to_spectral",
    "symmetrize",
    "hermitian_defect",
    "mode_index",
    "embed_in_grid",
    "sample_window",
    "dot",
    "norm",
    "fft_workers",
]

HERMITIAN_RTOL = 1e-12


class LatticeError(ValueError):
    """Invalid grid, basis, or projection configuration."""


class SymmetryError(ValueError):
    """Coefficients violate Hermitian symmetry beyond tolerance."""


def fft_workers() -> int:
    """Worker thread count for FFT calls; the PFC_THREADS env var caps it."""
    raw = os.environ.get("PFC_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError as exc:
            raise ValueError(f"PFC_THREADS must be an integer, got {raw!r}") from exc
    return os.cpu_count() or 1


@dataclass(frozen=True)
class GridShape:
    """Per-axis mode counts (N_1, ..., N_n); every N_j even and at least 4."""

    dims: tuple[int, ...]

    def __post_init__(self) -> None:
        try:
            dims = tuple(int(n) for n in self.dims)
        except (TypeError, ValueError) as exc:
            raise LatticeError(f"grid dims must be integers, got {self.dims!r}") from exc
        if not dims:
            raise LatticeError("grid needs at least one axis")
        for n in dims:
            if n < 4 or n % 2:
                raise LatticeError(f"grid size {n} must be even and at least 4")
        if math.prod(dims) >= 2**62:
            raise LatticeError("grid mode count overflows the addressable range")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True, eq=False)
class LatticeSpec:
    """Reciprocal basis B (n x n), the mode grid, and an optional projection P (d x n).

    A mode h maps to the physical wavevector k = P B h (k = B h without a
    projection).  B must be invertible; P has full row rank d <= n for the
    projection method used by quasiperiodic fields.
    """

    basis: np.ndarray
    grid: GridShape
    projection: np.ndarray | None = None

    def __post_init__(self) -> None:
        b = np.array(self.basis, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise LatticeError(f"basis must be square, got shape {b.shape}")
        n = b.shape[0]
        if self.grid.ndim != n:
            raise LatticeError(
                f"grid has {self.grid.ndim} axes but basis is {n} x {n}"
            )
        scale = float(np.linalg.norm(b, 2))
        if not np.isfinite(scale) or scale == 0.0:
            raise LatticeError("basis matrix has no finite scale")
        if abs(np.linalg.det(b)) <= 1e-12 * scale**n:
            raise LatticeError("basis matrix is singular")
        b.setflags(write=False)
        object.__setattr__(self, "basis", b)
        p = self.projection
        if p is not None:
            p = np.array(p, dtype=float)
            if p.ndim != 2 or p.shape[1] != n or not 1 <= p.shape[0] <= n:
                raise LatticeError(
                    f"projection must be d x {n} with 1 <= d <= {n}, got {p.shape}"
                )
            if np.linalg.matrix_rank(p) < p.shape[0]:
                raise LatticeError("projection matrix must have full row rank")
            p.setflags(write=False)
        object.__setattr__(self, "projection", p)

    @property
    def n(self) -> int:
        """Lattice dimension (number of mode indices)."""
        return self.basis.shape[0]

    @property
    def d(self) -> int:
        """Physical dimension (projection rows, or n without a projection)."""
        return self.n if self.projection is None else self.projection.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.grid.dims

    def projected_basis(self) -> np.ndarray:
        """The d x n matrix taking integer modes to physical wavevectors."""
        if self.projection is None:
            return self.basis
        return self.projection @ self.basis


@dataclass(frozen=True, eq=False)
class WavevectorTable:
    """Physical wavevectors k(h) and |k|^2 for every mode on the grid."""

    kvecs: np.ndarray  # shape (*dims, d)
    ksq: np.ndarray  # shape (*dims,)


def build_wavevectors(lattice: LatticeSpec) -> WavevectorTable:
    """Tabulate k = P B h over the full FFT-ordered grid.

    The zero-frequency entry is exactly zero, and k(-h) = -k(h) exactly for
    every non-Nyquist mode because each component is the same linear
    combination of negated integers.
    """
    dims = lattice.dims
    pb = lattice.projected_basis()
    d = pb.shape[0]
    freqs = [np.fft.fftfreq(n, 1.0 / n) for n in dims]
    axes = np.meshgrid(*freqs, indexing="ij", sparse=True)
    kvecs = np.empty((*dims, d))
    for i in range(d):
        acc = np.zeros(dims)
        for j, hj in enumerate(axes):
            acc = acc + pb[i, j] * hj
        kvecs[..., i] = acc
    ksq = np.einsum("...i,...i->...", kvecs, kvecs)
    return WavevectorTable(kvecs=kvecs, ksq=ksq)


@dataclass(eq=False)
class SpectralField:
    """Complex Fourier coefficients on a lattice grid; the optimization unknown."""

    coeffs: np.ndarray
    lattice: LatticeSpec

    def __post_init__(self) -> None:
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != self.lattice.dims:
            raise LatticeError(
                f"coefficient shape {c.shape} does not match grid {self.lattice.dims}"
            )
        self.coeffs = c

    def copy(self) -> "SpectralField":
        return SpectralField(self.coeffs.copy(), self.lattice)

    def _check_mate(self, other: "SpectralField") -> None:
        if self.lattice is not other.lattice and self.lattice.dims != other.lattice.dims:
            raise LatticeError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        self._check_mate(other)
        return SpectralField(self.coeffs + other.coeffs, self.lattice)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        if not isinstance(other, SpectralField):
            return NotImplemented
        self._check_mate(other)
        return SpectralField(self.coeffs - other.coeffs, self.lattice)

    def __mul__(self, scalar: float) -> "SpectralField":
        if not isinstance(scalar, (int, float)):
            return NotImplemented
        return SpectralField(self.coeffs * scalar, self.lattice)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs, self.lattice)


def _reflected(coeffs: np.ndarray) -> np.ndarray:
    """Array of coeff(-h): flip every axis, then roll by one to fix index 0."""
    out = np.flip(coeffs)
    nd = coeffs.ndim
    return np.roll(out, shift=(1,) * nd, axis=tuple(range(nd)))


def _symmetrized(coeffs: np.ndarray, dims: tuple[int, ...]) -> np.ndarray:
    sym = 0.5 * (coeffs + np.conj(_reflected(coeffs)))
    for axis, n in enumerate(dims):
        sel: list[slice | int] = [slice(None)] * len(dims)
        sel[axis] = n // 2
        sym[tuple(sel)] = 0.0
    return sym


def symmetrize(field: SpectralField) -> SpectralField:
    """Project onto the Hermitian subspace and pin Nyquist rows to zero.

    Averages each coefficient with the conjugate of its negated-index mate,
    so Hermitian inputs pass through bitwise unchanged and the map is
    idempotent.
    """
    return SpectralField(_symmetrized(field.coeffs, field.lattice.dims), field.lattice)


def hermitian_defect(field: SpectralField) -> float:
    """Coefficient-norm distance from the Hermitian (real-field) subspace."""
    return float(
        np.linalg.norm(
            (field.coeffs - _symmetrized(field.coeffs, field.lattice.dims)).ravel()
        )
    )


def to_physical(field: SpectralField, check: bool = True) -> np.ndarray:
    """Collocation samples of the real field (unnormalized inverse transform).

    With check=True the coefficients must be Hermitian to relative tolerance
    1e-12, else SymmetryError; the tiny imaginary FFT residue is dropped.
    """
    if check:
        scale = norm(field)
        if hermitian_defect(field) > HERMITIAN_RTOL * scale:
            raise SymmetryError(
                "coefficients are not Hermitian; field would not be real"
            )
    z = scipy.fft.ifftn(field.coeffs, norm="forward", workers=fft_workers())
    return np.ascontiguousarray(z.real)


def to_spectral(samples: np.ndarray, lattice: LatticeSpec) -> SpectralField:
    """Coefficients of a real sample array (1/N-normalized forward transform).

    The result is symmetrized, so roundtripping through to_physical
    reproduces the samples up to FFT roundoff and coeff(0) is the mean.
    """
    arr = np.asarray(samples)
    if np.iscomplexobj(arr):
        raise ValueError("samples must be real")
    arr = arr.astype(float, copy=False)
    if arr.shape != lattice.dims:
        raise ValueError(f"sample shape {arr.shape} does not match grid {lattice.dims}")
    coeffs = scipy.fft.fftn(arr, norm="forward", workers=fft_workers())
    return SpectralField(_symmetrized(coeffs, lattice.dims), lattice)


def mode_index(h: tuple[int, ...], grid: GridShape) -> tuple[int, ...]:
    """FFT array index of integer mode h; Nyquist and out-of-range h are rejected."""
    if len(h) != grid.ndim:
        raise LatticeError(f"mode {h} has {len(h)} entries for a {grid.ndim}-d grid")
    idx = []
    for hj, n in zip(h, grid.dims):
        hj = int(hj)
        if hj <= -(n // 2) or hj >= n // 2:
            raise LatticeError(
                f"mode index {h} out of range for grid {grid.dims}"
                " (Nyquist rows are pinned to zero)"
            )
        idx.append(hj % n)
    return tuple(idx)


def embed_in_grid(field: SpectralField, target: LatticeSpec) -> SpectralField:
    """Zero-pad coefficients into a finer grid over the same lattice.

    Modes keep their integer index; new high-frequency slots are zero.  The
    target must share the basis and projection and be at least as large
    along every axis.
    """
    src = field.lattice
    if src.n != target.n or not np.allclose(src.basis, target.basis, rtol=1e-12, atol=0):
        raise LatticeError("target lattice has a different basis")
    sp, tp = src.projection, target.projection
    if (sp is None) != (tp is None) or (
        sp is not None and not np.allclose(sp, tp, rtol=1e-12, atol=0)
    ):
        raise LatticeError("target lattice has a different projection")
    if any(ns > nt for ns, nt in zip(src.dims, target.dims)):
        raise LatticeError(f"cannot embed grid {src.dims} into smaller {target.dims}")
    maps = [
        np.fft.fftfreq(ns, 1.0 / ns).astype(int) % nt
        for ns, nt in zip(src.dims, target.dims)
    ]
    out = np.zeros(target.dims, dtype=np.complex128)
    out[np.ix_(*maps)] = field.coeffs
    return SpectralField(out, target)


def sample_window(
    field: SpectralField,
    extent: tuple[float, float, float, float],
    shape: tuple[int, int],
    min_coeff: float = 1e-12,
) -> np.ndarray:
    """Evaluate a d=2 (projected) field on a rectangular physical window.

    Direct mode summation Re sum_h c_h exp(i k_h . r) on a uniform grid over
    [x0, x1) x [y0, y1); modes with |c_h| below min_coeff relative to the
    largest coefficient are skipped.  Returns a (shape[0], shape[1]) array
    indexed [ix, iy].
    """
    lattice = field.lattice
    if lattice.d != 2:
        raise LatticeError("window sampling needs a 2-component physical space")
    x0, x1, y0, y1 = (float(v) for v in extent)
    nx, ny = (int(v) for v in shape)
    if nx < 1 or ny < 1:
        raise ValueError("window resolution must be positive")
    kv = build_wavevectors(lattice).kvecs.reshape(-1, 2)
    c = field.coeffs.ravel()
    mag = np.abs(c)
    top = float(mag.max()) if mag.size else 0.0
    mask = mag > (min_coeff * top)
    kv, c = kv[mask], c[mask]
    x = np.linspace(x0, x1, nx, endpoint=False)
    y = np.linspace(y0, y1, ny, endpoint=False)
    vals = np.zeros((nx, ny), dtype=np.complex128)
    chunk = 8192
    for lo in range(0, c.size, chunk):
        hi = min(lo + chunk, c.size)
        ax = np.exp(1j * np.outer(x, kv[lo:hi, 0]))
        by = np.exp(1j * np.outer(kv[lo:hi, 1], y))
        vals += (ax * c[lo:hi]) @ by
    return np.ascontiguousarray(vals.real)


def dot(a: SpectralField, b: SpectralField) -> float:
    """Real inner product Re sum conj(a_h) b_h."""
    return float(np.real(np.vdot(a.coeffs, b.coeffs)))


def norm(a: SpectralField) -> float:
    """Coefficient two-norm, sqrt(sum |a_h|^2)."""
    return float(np.linalg.norm(a.coeffs.ravel()))
