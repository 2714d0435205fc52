"""Diagonal gradient-flow steps and the generalized proximal operator.

A flow operator L is a negative semidefinite diagonal multiplier in
coefficient space: L = -I for non-conserved (Allen-Cahn type) dynamics or
L = -(|k|^2 + sigma_shift) for conserved dynamics with a positive shift.
One stabilized implicit-explicit step solves

    (I - sigma alpha L)(phi_next - phi) = alpha L (grad G(phi_next) + grad F(phi)),

which for sigma = 0 is the plain semi-implicit step and in general equals a
generalized proximal step in the metric S = -(I - sigma alpha L)^-1 L / alpha.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import GridShape, SpectralField, WavevectorTable

__all__ = [
    "FlowOperator",
    "gprox_quadratic",
    "explicit_step",
    "semi_implicit_step",
    "stabilized_step",
]


@dataclass(frozen=True, eq=False)
class FlowOperator:
    """Diagonal mobility multiplier; every entry nonpositive."""

    kind: str
    diag: np.ndarray
    sigma_shift: float = 0.0

    def __post_init__(self) -> None:
        diag = np.asarray(self.diag, dtype=float)
        if np.any(diag > 0):
            raise ValueError("flow operator entries must be nonpositive")
        object.__setattr__(self, "diag", diag)

    @classmethod
    def allen_cahn(cls, grid: GridShape) -> "FlowOperator":
        """Non-conserved flow, L = -I."""
        return cls("allen_cahn", -np.ones(grid.dims))

    @classmethod
    def shifted_laplacian(cls, waves: WavevectorTable, sigma_shift: float) -> "FlowOperator":
        """Conserved-style flow, L = -(|k|^2 + sigma_shift), sigma_shift >= 0."""
        if sigma_shift < 0:
            raise ValueError("sigma_shift must be nonnegative")
        return cls("shifted_laplacian", -(waves.ksq + sigma_shift), sigma_shift)

    @property
    def invertible(self) -> bool:
        return bool(np.all(self.diag < 0))


def gprox_quadratic(problem, s_diag, y: SpectralField) -> SpectralField:
    """Generalized proximal map of the interaction part in a diagonal metric.

    Minimizes G(x) + 0.5 <x - y, S (x - y)> for positive diagonal S, giving
    x_h = S_h y_h / (S_h + quad_coeff Lambda_h) modewise.
    """
    s = np.asarray(s_diag, dtype=float)
    if np.any(s <= 0) or not np.all(np.isfinite(s)):
        raise ValueError("metric diagonal must be positive and finite")
    coeffs = s * y.coeffs / (s + problem.interaction_diag)
    return SpectralField(coeffs, y.lattice)


def explicit_step(problem, op: FlowOperator, phi: SpectralField, alpha: float) -> SpectralField:
    """Forward Euler: phi + alpha L grad E(phi)."""
    grad = problem.grad_energy(phi)
    return SpectralField(phi.coeffs + alpha * (op.diag * grad.coeffs), phi.lattice)


def semi_implicit_step(problem, op: FlowOperator, phi: SpectralField, alpha: float) -> SpectralField:
    """Interaction part implicit, bulk part explicit; modewise diagonal solve."""
    return stabilized_step(problem, op, phi, alpha, 0.0)


def stabilized_step(
    problem,
    op: FlowOperator,
    phi: SpectralField,
    alpha: float,
    sigma: float,
) -> SpectralField:
    """Stabilized semi-implicit step; sigma = 0 recovers the plain scheme.

    Requires sigma >= 0, and for sigma > 0 a strictly negative operator so
    the induced proximal metric stays positive.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if sigma > 0 and not op.invertible:
        raise ValueError(
            "stabilized step needs a strictly negative flow operator"
            " (zero modes make the induced metric degenerate)"
        )
    grad_f = problem.grad_bulk(phi)
    a = 1.0 - sigma * alpha * op.diag
    num = a * phi.coeffs + alpha * (op.diag * grad_f.coeffs)
    den = a - alpha * (op.diag * problem.interaction_diag)
    return SpectralField(num / den, phi.lattice)
