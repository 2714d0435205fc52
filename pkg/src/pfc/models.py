"""Free-energy models and their pseudospectral discretization.

Both models split as E = G + F: a quadratic interaction part G that is
diagonal in coefficient space, G = 0.5 * quad_coeff * sum_h Lambda(|k_h|^2)
|phi_hat(h)|^2, and a bulk part F equal to the mean of a local polynomial
over collocation samples.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import ClassVar, Union

import numpy as np

from .spectral import (
    LatticeSpec,
    SpectralField,
    WavevectorTable,
    build_wavevectors,
    to_physical,
    to_spectral,
)

__all__ = [
    "LandauBrazovskii",
    "LifshitzPetrich",
    "ModelSpec",
    "EnergyBreakdown",
    "DiscreteEnergy",
    "NumericError",
    "build_lambda",
]


class NumericError(ArithmeticError):
    """A numeric evaluation produced non-finite values."""


@dataclass(frozen=True)
class LandauBrazovskii:
    """One-length-scale free energy: critical shell at |k| = 1.

    Interaction kernel Lambda = (1 - |k|^2)^2 weighted by xi^2; bulk density
    tau/2 phi^2 - gamma/6 phi^3 + phi^4/24.
    """

    xi: float
    tau: float
    gamma: float

    kind: ClassVar[str] = "lb"

    def __post_init__(self) -> None:
        if not self.xi * self.xi > 0:
            raise ValueError("xi must be nonzero")

    @property
    def quad_coeff(self) -> float:
        return self.xi * self.xi

    def lambda_of_ksq(self, ksq: np.ndarray) -> np.ndarray:
        d = 1.0 - ksq
        return d * d

    def bulk_density(self, phi: np.ndarray) -> np.ndarray:
        return phi * phi * (0.5 * self.tau + phi * (-self.gamma / 6.0 + phi / 24.0))

    def bulk_deriv(self, phi: np.ndarray) -> np.ndarray:
        return phi * (self.tau + phi * (-0.5 * self.gamma + phi / 6.0))


@dataclass(frozen=True)
class LifshitzPetrich:
    """Two-length-scale free energy: critical shells at |k| = q1 and |k| = q2.

    Interaction kernel Lambda = (q1^2 - |k|^2)^2 (q2^2 - |k|^2)^2 weighted by
    c; bulk density eps/2 phi^2 - kappa/3 phi^3 + phi^4/4.
    """

    c: float
    eps: float
    kappa: float
    q1: float
    q2: float

    kind: ClassVar[str] = "lp"

    def __post_init__(self) -> None:
        if not self.c > 0:
            raise ValueError("c must be positive")
        if not 0 < self.q1 < self.q2:
            raise ValueError("need 0 < q1 < q2")

    @property
    def quad_coeff(self) -> float:
        return self.c

    def lambda_of_ksq(self, ksq: np.ndarray) -> np.ndarray:
        d1 = self.q1 * self.q1 - ksq
        d2 = self.q2 * self.q2 - ksq
        return (d1 * d1) * (d2 * d2)

    def bulk_density(self, phi: np.ndarray) -> np.ndarray:
        return phi * phi * (0.5 * self.eps + phi * (-self.kappa / 3.0 + 0.25 * phi))

    def bulk_deriv(self, phi: np.ndarray) -> np.ndarray:
        return phi * (self.eps + phi * (phi - self.kappa))


ModelSpec = Union[LandauBrazovskii, LifshitzPetrich]


def build_lambda(model: ModelSpec, waves: WavevectorTable) -> np.ndarray:
    """Interaction kernel Lambda(|k|^2) tabulated over the grid (all entries >= 0)."""
    return model.lambda_of_ksq(waves.ksq)


@dataclass(frozen=True)
class EnergyBreakdown:
    """Energy split into interaction (G) and bulk (F) parts; total = G + F."""

    interaction: float
    bulk: float
    total: float

    @classmethod
    def from_parts(cls, interaction: float, bulk: float) -> "EnergyBreakdown":
        return cls(interaction, bulk, interaction + bulk)


class DiscreteEnergy:
    """The discretized energy of one model on one lattice grid.

    Exposes the split E = G + F, coefficient-space gradients of both parts,
    and the proximal map of G, all in the scaling where F is a mean over
    collocation samples (energy per unit volume).

    The order parameter is a density deviation, so by default minimization
    runs over mean-zero fields: gradients are restricted to the subspace
    with a zero h = 0 component, which keeps mean-zero iterates mean-zero.
    Without that restriction every bundled parameter set drains into a
    structureless uniform state.  Pass fix_mean=False for the gradient of
    the unrestricted functional.
    """

    def __init__(
        self, model: ModelSpec, lattice: LatticeSpec, fix_mean: bool = True
    ) -> None:
        self.model = model
        self.lattice = lattice
        self.fix_mean = fix_mean
        self.waves = build_wavevectors(lattice)
        self.lam = build_lambda(model, self.waves)
        self.lam.setflags(write=False)
        self.interaction_diag = model.quad_coeff * self.lam
        self.interaction_diag.setflags(write=False)
        self._zero_mode = (0,) * lattice.grid.ndim

    def samples(self, field: SpectralField) -> np.ndarray:
        """Collocation samples of the field (no symmetry re-check)."""
        return to_physical(field, check=False)

    def energy_from_samples(
        self, field: SpectralField, phi: np.ndarray
    ) -> EnergyBreakdown:
        c = field.coeffs
        absq = c.real * c.real + c.imag * c.imag
        g = 0.5 * float(np.sum(self.interaction_diag * absq))
        f = float(np.mean(self.model.bulk_density(phi)))
        total = g + f
        if not np.isfinite(total):
            raise NumericError("energy evaluated to a non-finite value")
        return EnergyBreakdown(g, f, total)

    def energy(self, field: SpectralField) -> EnergyBreakdown:
        return self.energy_from_samples(field, self.samples(field))

    def energy_with_samples(
        self, field: SpectralField
    ) -> tuple[EnergyBreakdown, np.ndarray]:
        phi = self.samples(field)
        return self.energy_from_samples(field, phi), phi

    def grad_interaction(self, field: SpectralField) -> SpectralField:
        """grad G: diagonal scaling quad_coeff * Lambda applied modewise."""
        return SpectralField(self.interaction_diag * field.coeffs, self.lattice)

    def grad_bulk_from_samples(
        self, field: SpectralField, phi: np.ndarray
    ) -> SpectralField:
        out = to_spectral(self.model.bulk_deriv(phi), self.lattice)
        if not np.all(np.isfinite(out.coeffs)):
            raise NumericError("bulk gradient evaluated to non-finite values")
        if self.fix_mean:
            out.coeffs[self._zero_mode] = 0.0
        return out

    def grad_bulk(self, field: SpectralField) -> SpectralField:
        """grad F: transform of the pointwise bulk derivative, symmetrized."""
        return self.grad_bulk_from_samples(field, self.samples(field))

    def energy_and_grad_bulk(
        self, field: SpectralField
    ) -> tuple[EnergyBreakdown, SpectralField]:
        """Energy and grad F sharing one set of collocation samples."""
        phi = self.samples(field)
        return self.energy_from_samples(field, phi), self.grad_bulk_from_samples(
            field, phi
        )

    def grad_energy(self, field: SpectralField) -> SpectralField:
        """Full gradient grad G + grad F (mean component zeroed when fix_mean)."""
        g = self.grad_bulk(field)
        out = SpectralField(
            g.coeffs + self.interaction_diag * field.coeffs, self.lattice
        )
        if self.fix_mean:
            out.coeffs[self._zero_mode] = 0.0
        return out

    def prox_interaction(self, y: SpectralField, alpha: float) -> SpectralField:
        """Proximal map of G: modewise y_h / (1 + alpha quad_coeff Lambda_h)."""
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        return SpectralField(
            y.coeffs / (1.0 + alpha * self.interaction_diag), self.lattice
        )
