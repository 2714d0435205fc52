"""Energy minimization drivers.

Three solvers share one problem interface (energy split E = G + F, bulk
gradient, diagonal interaction gradient, proximal map of G):

* sis_solve - fixed-step semi-implicit iteration, equivalent to a proximal
  gradient step phi_next = prox_G(phi - alpha grad F(phi), alpha).
* apg_solve - classical accelerated proximal gradient with a fixed step and
  the usual momentum sequence t_k, no restarts.
* adaptive_apg_solve - accelerated proximal gradient with a sufficient
  decrease test on the extrapolated step, momentum restarts, and a
  Barzilai-Borwein line search for the step size.

All solvers record a TraceRecord per outer iteration and stop when the
coefficient-space gradient norm drops to grad_tol or max_iter is reached.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .models import EnergyBreakdown
from .spectral import LatticeSpec, SpectralField, dot, norm

__all__ = [
    "SolverConfig",
    "TraceRecord",
    "OptimizerState",
    "StepResult",
    "LineSearchFailure",
    "DivergenceError",
    "DiagonalQuadratic",
    "momentum_update",
    "bb_step",
    "estimate_step",
    "sis_solve",
    "apg_solve",
    "adaptive_apg_solve",
]


class LineSearchFailure(RuntimeError):
    """Backtracking reached the smallest admissible step without the decrease."""


class DivergenceError(RuntimeError):
    """The energy became non-finite; carries the trace up to the failure."""

    def __init__(self, message: str, trace: list["TraceRecord"]):
        super().__init__(message)
        self.trace = trace


@dataclass
class SolverConfig:
    """Shared solver knobs; defaults suit the bundled presets."""

    alpha_init: float = 0.1
    alpha_min: float = 1e-8
    alpha_max: float = 1e3
    rho: float = 0.5
    eta: float = 1e-10
    delta: float = 1e-10
    n_max: int = 50
    grad_tol: float = 1e-9
    max_iter: int = 10000
    bb_variant: str = "auto"

    def __post_init__(self) -> None:
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not 0 < self.alpha_min <= self.alpha_init <= self.alpha_max:
            raise ValueError("need 0 < alpha_min <= alpha_init <= alpha_max")
        if not 0 < self.delta <= self.eta:
            raise ValueError("need 0 < delta <= eta")
        if self.n_max < 1:
            raise ValueError("n_max must be at least 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if self.grad_tol < 0:
            raise ValueError("grad_tol must be nonnegative")
        if self.bb_variant not in ("bb1", "bb2", "auto"):
            raise ValueError("bb_variant must be bb1, bb2, or auto")


@dataclass
class TraceRecord:
    """One outer iteration: timing, energy, live gap, gradient norm, step."""

    iter: int
    wall_seconds: float
    energy: float
    energy_gap: float
    grad_norm: float
    alpha: float
    restarted: bool


@dataclass
class OptimizerState:
    """Mutable adaptive-solver state (exposed for inspection and tests)."""

    phi_curr: SpectralField
    phi_prev: SpectralField
    t: float = 1.0
    alpha: float = 0.1
    k_ada: int = 0
    best_energy: float = math.inf
    iter: int = 0


@dataclass
class StepResult:
    """Outcome of one proximal-gradient step with line search."""

    alpha: float
    field: SpectralField
    energy: EnergyBreakdown
    samples: np.ndarray | None
    trials: int


def momentum_update(t_prev: float) -> tuple[float, float]:
    """Next momentum scalar t and extrapolation weight w = (t_prev - 1)/t.

    t_prev = 1 gives t = (1 + sqrt(5))/2 and w = 0, so the first accelerated
    step has no extrapolation.
    """
    if t_prev < 1:
        raise ValueError("momentum scalar must be at least 1")
    t = 0.5 * (math.sqrt(4.0 * t_prev * t_prev + 1.0) + 1.0)
    return t, (t_prev - 1.0) / t


def bb_step(s: SpectralField, g: SpectralField, variant: str = "auto") -> float | None:
    """Barzilai-Borwein step estimate from a displacement/gradient-change pair.

    bb1 = <s,s>/<s,g>, bb2 = <s,g>/<g,g>.  Returns None when <s,g> <= 0 or
    the requested quotient is not a positive finite number; "auto" tries bb1
    then bb2.
    """
    if variant not in ("bb1", "bb2", "auto"):
        raise ValueError("variant must be bb1, bb2, or auto")
    sg = dot(s, g)
    if not math.isfinite(sg) or sg <= 0.0:
        return None
    order = ("bb1", "bb2") if variant == "auto" else (variant,)
    for choice in order:
        if choice == "bb1":
            ss = dot(s, s)
            val = ss / sg
        else:
            gg = dot(g, g)
            val = sg / gg if gg > 0 else math.inf
        if math.isfinite(val) and val > 0:
            return val
    return None


def estimate_step(
    problem,
    phi: SpectralField,
    psi: SpectralField,
    cfg: SolverConfig,
    *,
    grad_psi: SpectralField | None = None,
    grad_phi: SpectralField | None = None,
    energy_psi: EnergyBreakdown | None = None,
) -> StepResult:
    """Backtracking proximal-gradient step from psi with a BB initial guess.

    The BB pair is s = psi - phi, g = grad F(psi) - grad F(phi); when it is
    unusable (including psi being phi itself) the search starts from
    alpha_init.  The trial step beta is accepted once

        E(psi) - E(prox_G(psi - beta grad F(psi), beta)) >= eta ||psi - next||^2,

    otherwise beta shrinks by rho until it falls below alpha_min, which
    raises LineSearchFailure.
    """
    if grad_psi is None or energy_psi is None:
        e_psi, g_psi = problem.energy_and_grad_bulk(psi)
        if energy_psi is None:
            energy_psi = e_psi
        if grad_psi is None:
            grad_psi = g_psi
    beta0 = None
    if psi is not phi:
        if grad_phi is None:
            grad_phi = problem.grad_bulk(phi)
        beta0 = bb_step(psi - phi, grad_psi - grad_phi, cfg.bb_variant)
    if beta0 is None:
        beta0 = cfg.alpha_init
    beta = min(max(beta0, cfg.alpha_min), cfg.alpha_max)
    beta_first = beta
    e_ref = energy_psi.total
    trials = 0
    while beta >= cfg.alpha_min:
        trials += 1
        cand = problem.prox_interaction(psi - grad_psi * beta, beta)
        try:
            energy_cand, cand_samples = problem.energy_with_samples(cand)
        except ArithmeticError:
            beta *= cfg.rho
            continue
        diff = psi - cand
        if (
            math.isfinite(energy_cand.total)
            and e_ref - energy_cand.total >= cfg.eta * dot(diff, diff)
        ):
            return StepResult(beta, cand, energy_cand, cand_samples, trials)
        beta *= cfg.rho
    raise LineSearchFailure(
        f"no step in [{cfg.alpha_min:g}, {beta_first:g}]"
        " met the sufficient decrease test"
    )


def _grad_norm(problem, phi: SpectralField, grad_bulk: SpectralField) -> float:
    return norm(problem.grad_interaction(phi) + grad_bulk)


def _check_finite(total: float, trace: list[TraceRecord]) -> None:
    if not math.isfinite(total):
        raise DivergenceError("energy became non-finite", trace)


def sis_solve(
    problem,
    phi0: SpectralField,
    alpha: float,
    cfg: SolverConfig,
) -> tuple[SpectralField, list[TraceRecord]]:
    """Fixed-step semi-implicit iteration (proximal gradient with constant alpha)."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    start = time.perf_counter()
    trace: list[TraceRecord] = []
    try:
        energy, grad_f = problem.energy_and_grad_bulk(phi0)
    except ArithmeticError as exc:
        raise DivergenceError(str(exc), trace) from exc
    best = energy.total
    phi = phi0
    gnorm = _grad_norm(problem, phi, grad_f)
    trace.append(
        TraceRecord(0, time.perf_counter() - start, energy.total, 0.0, gnorm, 0.0, False)
    )
    for k in range(1, cfg.max_iter + 1):
        if gnorm <= cfg.grad_tol:
            break
        phi_next = problem.prox_interaction(phi - grad_f * alpha, alpha)
        try:
            energy, samples = problem.energy_with_samples(phi_next)
            grad_f = problem.grad_bulk_from_samples(phi_next, samples)
        except ArithmeticError as exc:
            raise DivergenceError(str(exc), trace) from exc
        _check_finite(energy.total, trace)
        phi = phi_next
        gnorm = _grad_norm(problem, phi, grad_f)
        best = min(best, energy.total)
        trace.append(
            TraceRecord(
                k,
                time.perf_counter() - start,
                energy.total,
                energy.total - best,
                gnorm,
                alpha,
                False,
            )
        )
    return phi, trace


def apg_solve(
    problem,
    phi0: SpectralField,
    alpha: float,
    cfg: SolverConfig,
) -> tuple[SpectralField, list[TraceRecord]]:
    """Classical accelerated proximal gradient with fixed step, no restarts.

    The first iteration has zero extrapolation weight, so it matches one
    semi-implicit step exactly.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    start = time.perf_counter()
    trace: list[TraceRecord] = []
    try:
        energy, grad_f = problem.energy_and_grad_bulk(phi0)
    except ArithmeticError as exc:
        raise DivergenceError(str(exc), trace) from exc
    best = energy.total
    phi = phi_prev = phi0
    t = 1.0
    gnorm = _grad_norm(problem, phi, grad_f)
    trace.append(
        TraceRecord(0, time.perf_counter() - start, energy.total, 0.0, gnorm, 0.0, False)
    )
    for k in range(1, cfg.max_iter + 1):
        if gnorm <= cfg.grad_tol:
            break
        t, w = momentum_update(t)
        if w > 0.0:
            psi = phi + (phi - phi_prev) * w
            try:
                grad_psi = problem.grad_bulk(psi)
            except ArithmeticError as exc:
                raise DivergenceError(str(exc), trace) from exc
        else:
            psi, grad_psi = phi, grad_f
        phi_next = problem.prox_interaction(psi - grad_psi * alpha, alpha)
        try:
            energy, samples = problem.energy_with_samples(phi_next)
            grad_f = problem.grad_bulk_from_samples(phi_next, samples)
        except ArithmeticError as exc:
            raise DivergenceError(str(exc), trace) from exc
        _check_finite(energy.total, trace)
        phi_prev, phi = phi, phi_next
        gnorm = _grad_norm(problem, phi, grad_f)
        best = min(best, energy.total)
        trace.append(
            TraceRecord(
                k,
                time.perf_counter() - start,
                energy.total,
                energy.total - best,
                gnorm,
                alpha,
                False,
            )
        )
    return phi, trace


def _fallback_step(
    problem,
    phi: SpectralField,
    grad_phi: SpectralField,
    energy_phi: EnergyBreakdown,
    cfg: SolverConfig,
) -> StepResult | None:
    """Safeguard prox-gradient step at alpha_min after line-search exhaustion.

    Returns None when even this step cannot satisfy the minimal decrease
    test, which only happens at the numerical floor; the caller then stops
    rather than break monotonicity.
    """
    cand = problem.prox_interaction(phi - grad_phi * cfg.alpha_min, cfg.alpha_min)
    try:
        energy_cand, samples = problem.energy_with_samples(cand)
    except ArithmeticError:
        return None
    diff = phi - cand
    decrease = energy_phi.total - energy_cand.total
    if math.isfinite(energy_cand.total) and decrease >= min(cfg.eta, cfg.delta) * dot(
        diff, diff
    ):
        return StepResult(cfg.alpha_min, cand, energy_cand, samples, 0)
    return None


def adaptive_apg_solve(
    problem,
    phi0: SpectralField,
    cfg: SolverConfig | None = None,
) -> tuple[SpectralField, list[TraceRecord]]:
    """Accelerated proximal gradient with adaptive restarts and BB line search.

    Each iteration extrapolates psi = phi_k + w (phi_k - phi_{k-1}), line
    searches a proximal-gradient step from psi, and accepts it when the new
    point improves on phi_k by at least delta ||phi_k - next||^2 and fewer
    than n_max iterations have passed since the last restart.  Otherwise the
    momentum is reset (t back to 1) and a safeguard step is taken from phi_k
    with its own line search.  Accepted energy is monotone by construction.
    """
    if cfg is None:
        cfg = SolverConfig()
    start = time.perf_counter()
    trace: list[TraceRecord] = []
    try:
        energy, grad_f = problem.energy_and_grad_bulk(phi0)
    except ArithmeticError as exc:
        raise DivergenceError(str(exc), trace) from exc
    _check_finite(energy.total, trace)
    phi = phi_prev = phi0
    state = OptimizerState(
        phi_curr=phi,
        phi_prev=phi_prev,
        t=1.0,
        alpha=cfg.alpha_init,
        k_ada=0,
        best_energy=energy.total,
        iter=0,
    )
    gnorm = _grad_norm(problem, phi, grad_f)
    trace.append(
        TraceRecord(0, time.perf_counter() - start, energy.total, 0.0, gnorm, 0.0, False)
    )
    min_decrease = min(cfg.eta, cfg.delta)
    for k in range(1, cfg.max_iter + 1):
        if gnorm <= cfg.grad_tol:
            break
        t_next, w = momentum_update(state.t)
        restarted = False
        step: StepResult | None = None
        searched_at_phi = False
        if w > 0.0:
            psi = phi + (phi - phi_prev) * w
            try:
                cand = estimate_step(problem, phi, psi, cfg, grad_phi=grad_f)
            except LineSearchFailure:
                cand = None
            except ArithmeticError as exc:
                raise DivergenceError(str(exc), trace) from exc
            if cand is not None and k - state.k_ada <= cfg.n_max:
                diff = cand.field - phi
                if energy.total - cand.energy.total >= cfg.delta * dot(diff, diff):
                    step = cand
        else:
            # No extrapolation: the momentum step starts at phi itself, and
            # the eta decrease test implies the delta test (eta >= delta).
            searched_at_phi = True
            try:
                step = estimate_step(
                    problem, phi, phi, cfg, grad_psi=grad_f, energy_psi=energy
                )
            except LineSearchFailure:
                step = None
            except ArithmeticError as exc:
                raise DivergenceError(str(exc), trace) from exc
        if step is None:
            restarted = True
            state.k_ada = k
            state.t = 1.0
            if not searched_at_phi:
                try:
                    step = estimate_step(
                        problem, phi, phi, cfg, grad_psi=grad_f, energy_psi=energy
                    )
                except LineSearchFailure:
                    step = None
                except ArithmeticError as exc:
                    raise DivergenceError(str(exc), trace) from exc
            if step is None:
                step = _fallback_step(problem, phi, grad_f, energy, cfg)
            if step is None:
                # Even the alpha_min safeguard cannot decrease the energy:
                # the iterate sits at the numerical floor, so stop here
                # instead of accepting a non-monotone step.
                break
        else:
            state.t = t_next
        prev_total = energy.total
        phi_prev, phi = phi, step.field
        energy = step.energy
        _check_finite(energy.total, trace)
        diff = phi - phi_prev
        assert prev_total - energy.total >= min_decrease * dot(diff, diff)
        try:
            grad_f = problem.grad_bulk_from_samples(phi, step.samples)
        except ArithmeticError as exc:
            raise DivergenceError(str(exc), trace) from exc
        gnorm = _grad_norm(problem, phi, grad_f)
        state.phi_prev = phi_prev
        state.phi_curr = phi
        state.alpha = step.alpha
        state.best_energy = min(state.best_energy, energy.total)
        state.iter = k
        trace.append(
            TraceRecord(
                k,
                time.perf_counter() - start,
                energy.total,
                energy.total - state.best_energy,
                gnorm,
                step.alpha,
                restarted,
            )
        )
    return phi, trace


class DiagonalQuadratic:
    """Separable strongly convex test objective.

    F(x) = 0.5 sum_h curvature_h |x_h - target_h|^2 with G = 0, so the
    proximal map is the identity and the smooth gradient is diagonal.  Used
    to exercise the solvers against closed-form optima and the convex
    worst-case rate bound.
    """

    def __init__(self, curvature: np.ndarray, target: SpectralField) -> None:
        curvature = np.asarray(curvature, dtype=float)
        if curvature.shape != target.coeffs.shape:
            raise ValueError("curvature shape must match the target grid")
        if np.any(curvature <= 0) or not np.all(np.isfinite(curvature)):
            raise ValueError("curvature must be positive and finite")
        self.curvature = curvature
        self.target = target
        self.lattice: LatticeSpec = target.lattice
        self.interaction_diag = np.zeros(target.coeffs.shape)

    def minimum(self) -> SpectralField:
        return self.target.copy()

    def energy(self, field: SpectralField) -> EnergyBreakdown:
        dx = field.coeffs - self.target.coeffs
        f = 0.5 * float(np.sum(self.curvature * (dx.real * dx.real + dx.imag * dx.imag)))
        return EnergyBreakdown(0.0, f, f)

    def energy_with_samples(self, field: SpectralField):
        return self.energy(field), None

    def grad_bulk(self, field: SpectralField) -> SpectralField:
        return SpectralField(
            self.curvature * (field.coeffs - self.target.coeffs), self.lattice
        )

    def grad_bulk_from_samples(self, field: SpectralField, samples) -> SpectralField:
        return self.grad_bulk(field)

    def energy_and_grad_bulk(self, field: SpectralField):
        return self.energy(field), self.grad_bulk(field)

    def grad_interaction(self, field: SpectralField) -> SpectralField:
        return SpectralField(np.zeros_like(field.coeffs), self.lattice)

    def grad_energy(self, field: SpectralField) -> SpectralField:
        return self.grad_bulk(field)

    def prox_interaction(self, y: SpectralField, alpha: float) -> SpectralField:
        if alpha < 0:
            raise ValueError("alpha must be nonnegative")
        return y.copy()
