"""Momentum, BB estimates, line search, and the three solver drivers."""

import math

import numpy as np
import pytest

from pfc.optim import (
    DiagonalQuadratic,
    DivergenceError,
    LineSearchFailure,
    SolverConfig,
    adaptive_apg_solve,
    apg_solve,
    bb_step,
    estimate_step,
    momentum_update,
    sis_solve,
)
from pfc.spectral import SpectralField, norm

from conftest import hermitian_field, mean_zero


def make_toy(lattice, seed=50, curvature=None):
    target = hermitian_field(lattice, seed=seed, scale=0.5)
    if curvature is None:
        curvature = np.ones(lattice.dims)
    return DiagonalQuadratic(curvature, target)


class TestSolverConfig:
    def test_defaults_valid(self):
        cfg = SolverConfig()
        assert cfg.alpha_init == 0.1
        assert cfg.bb_variant == "auto"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"rho": 0.0},
            {"rho": 1.0},
            {"alpha_min": 0.0},
            {"alpha_min": 0.2},
            {"alpha_max": 0.05},
            {"eta": 1e-12},
            {"delta": 0.0},
            {"n_max": 0},
            {"max_iter": 0},
            {"grad_tol": -1.0},
            {"bb_variant": "bb3"},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)


class TestMomentum:
    def test_first_update(self):
        t, w = momentum_update(1.0)
        assert t == 0.5 * (math.sqrt(5.0) + 1.0)
        assert w == 0.0

    def test_second_update(self):
        t, w = momentum_update(1.618034)
        assert t == pytest.approx(2.193527, abs=1e-6)
        assert w == pytest.approx(0.281754, abs=1e-6)

    @pytest.mark.parametrize("t_prev", [1.0, 1.5, 2.0, 5.0, 10.0, 100.0, 1e6])
    def test_strictly_increasing(self, t_prev):
        t, w = momentum_update(t_prev)
        assert t > t_prev
        assert 0.0 <= w < 1.0

    def test_below_one_rejected(self):
        with pytest.raises(ValueError):
            momentum_update(0.999)


class TestBBStep:
    @pytest.mark.parametrize("variant", ["bb1", "bb2", "auto"])
    def test_doubled_gradient_gives_half(self, lb_lattice, variant):
        s = hermitian_field(lb_lattice, seed=40)
        g = s * 2.0
        assert bb_step(s, g, variant) == 0.5

    def test_zero_gradient_change(self, lb_lattice):
        s = hermitian_field(lb_lattice, seed=41)
        g = SpectralField(np.zeros(lb_lattice.dims, dtype=complex), lb_lattice)
        assert bb_step(s, g) is None

    def test_negative_curvature_pair(self, lb_lattice):
        s = hermitian_field(lb_lattice, seed=42)
        assert bb_step(s, s * -1.0) is None

    def test_unknown_variant_rejected(self, lb_lattice):
        s = hermitian_field(lb_lattice, seed=43)
        with pytest.raises(ValueError):
            bb_step(s, s, "bb3")


class TestEstimateStep:
    def test_unit_curvature_jumps_to_minimizer(self, lb_lattice):
        """BB sees unit curvature, proposes beta = 1, and one step lands on x*."""
        toy = make_toy(lb_lattice, seed=51)
        phi = hermitian_field(lb_lattice, seed=52)
        psi = hermitian_field(lb_lattice, seed=53)
        step = estimate_step(toy, phi, psi, SolverConfig())
        assert step.alpha == pytest.approx(1.0, rel=1e-12)
        assert step.trials == 1
        assert np.allclose(step.field.coeffs, toy.target.coeffs, atol=1e-14)

    def test_no_history_starts_at_alpha_init(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=54)
        phi = hermitian_field(lb_lattice, seed=55)
        step = estimate_step(toy, phi, phi, SolverConfig(alpha_init=0.25))
        assert step.alpha == 0.25
        assert step.trials == 1

    def test_bb_guess_clamped_to_alpha_max(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=56, curvature=np.full(lb_lattice.dims, 1e-5))
        phi = hermitian_field(lb_lattice, seed=57)
        psi = hermitian_field(lb_lattice, seed=58)
        cfg = SolverConfig()
        step = estimate_step(toy, phi, psi, cfg)
        assert step.alpha == cfg.alpha_max

    def test_stiff_curvature_exhausts_backtracking(self, lb_lattice):
        """When the needed step is below alpha_min the search must fail loudly."""
        toy = make_toy(lb_lattice, seed=59, curvature=np.full(lb_lattice.dims, 1e10))
        phi = hermitian_field(lb_lattice, seed=60)
        psi = hermitian_field(lb_lattice, seed=61)
        with pytest.raises(LineSearchFailure):
            estimate_step(toy, phi, psi, SolverConfig())

    def test_unsatisfiable_eta_fails(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=62)
        phi = hermitian_field(lb_lattice, seed=63)
        with pytest.raises(LineSearchFailure):
            estimate_step(toy, phi, phi, SolverConfig(eta=1e12))


class TestSisSolve:
    def test_stationary_start_terminates_immediately(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=64)
        phi0 = toy.minimum()
        field, trace = sis_solve(toy, phi0, 0.5, SolverConfig())
        assert len(trace) == 1
        assert trace[0].iter == 0
        assert np.array_equal(field.coeffs, toy.target.coeffs)

    def test_trace_head_row(self, lb_problem, lb_lattice):
        phi0 = mean_zero(hermitian_field(lb_lattice, seed=65, scale=0.3))
        _, trace = sis_solve(lb_problem, phi0, 0.1, SolverConfig(max_iter=3))
        head = trace[0]
        assert (head.iter, head.alpha, head.energy_gap, head.restarted) == (0, 0.0, 0.0, False)
        assert all(r.alpha == 0.1 for r in trace[1:])

    def test_converges_on_toy(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=66)
        phi0 = hermitian_field(lb_lattice, seed=67)
        field, trace = sis_solve(toy, phi0, 1.0, SolverConfig())
        assert trace[-1].grad_norm <= 1e-9
        assert np.allclose(field.coeffs, toy.target.coeffs, atol=1e-9)

    def test_nonpositive_alpha_rejected(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=68)
        with pytest.raises(ValueError):
            sis_solve(toy, toy.minimum(), 0.0, SolverConfig())

    def test_divergence_carries_trace(self, lb_problem, lb_lattice):
        phi0 = mean_zero(hermitian_field(lb_lattice, seed=69, scale=0.5))
        with pytest.raises(DivergenceError) as exc:
            sis_solve(lb_problem, phi0, 1e3, SolverConfig())
        assert len(exc.value.trace) >= 1
        assert all(math.isfinite(r.energy) for r in exc.value.trace)

    def test_divergent_start_gives_empty_trace(self, lb_problem, lb_lattice):
        phi0 = hermitian_field(lb_lattice, seed=70, scale=1e100)
        with pytest.raises(DivergenceError) as exc:
            sis_solve(lb_problem, phi0, 0.1, SolverConfig())
        assert exc.value.trace == []


class TestApgSolve:
    def test_first_step_equals_sis_step(self, lb_problem, lb_lattice):
        """Zero extrapolation weight at start makes iteration 1 a plain step."""
        phi0 = mean_zero(hermitian_field(lb_lattice, seed=71, scale=0.3))
        cfg = SolverConfig(max_iter=1)
        via_apg, trace_apg = apg_solve(lb_problem, phi0, 0.1, cfg)
        via_sis, trace_sis = sis_solve(lb_problem, phi0, 0.1, cfg)
        assert np.array_equal(via_apg.coeffs, via_sis.coeffs)
        assert trace_apg[1].energy == trace_sis[1].energy

    def test_stationary_start(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=72)
        field, trace = apg_solve(toy, toy.minimum(), 0.5, SolverConfig())
        assert len(trace) == 1
        assert np.array_equal(field.coeffs, toy.target.coeffs)

    def test_convex_rate_bound(self, lb_lattice):
        """Worst-case accelerated rate on a strongly convex separable objective."""
        rng = np.random.default_rng(73)
        curvature = rng.uniform(0.5, 4.0, size=lb_lattice.dims)
        toy = make_toy(lb_lattice, seed=74, curvature=curvature)
        phi0 = hermitian_field(lb_lattice, seed=75)
        alpha = 1.0 / float(curvature.max())
        cfg = SolverConfig(grad_tol=0.0, max_iter=200)
        _, trace = apg_solve(toy, phi0, alpha, cfg)
        assert len(trace) == 201
        dist0 = norm(phi0 - toy.target) ** 2
        for rec in trace:
            bound = 2.0 * dist0 / (alpha * (rec.iter + 1) ** 2)
            assert rec.energy <= bound


class TestAdaptiveSolve:
    def test_converges_to_toy_minimum(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=76)
        phi0 = hermitian_field(lb_lattice, seed=77)
        field, trace = adaptive_apg_solve(toy, phi0)
        assert trace[-1].grad_norm <= SolverConfig().grad_tol
        assert trace[-1].iter < SolverConfig().max_iter
        assert np.allclose(field.coeffs, toy.target.coeffs, atol=1e-8)

    def test_monotone_with_forced_restarts(self, lb_problem, lb_lattice):
        phi0 = mean_zero(hermitian_field(lb_lattice, seed=78, scale=0.3))
        cfg = SolverConfig(max_iter=200, n_max=2)
        _, trace = adaptive_apg_solve(lb_problem, phi0, cfg)
        energies = [r.energy for r in trace]
        assert all(b <= a for a, b in zip(energies, energies[1:]))
        assert sum(r.restarted for r in trace) >= 1

    def test_fallback_path_at_alpha_min(self, lb_lattice):
        """An unsatisfiable eta pushes every iteration through the safeguard."""
        toy = make_toy(lb_lattice, seed=79)
        phi0 = hermitian_field(lb_lattice, seed=80)
        cfg = SolverConfig(eta=1e12, delta=1e-10, max_iter=10, grad_tol=0.0)
        _, trace = adaptive_apg_solve(toy, phi0, cfg)
        assert len(trace) == 11
        for rec in trace[1:]:
            assert rec.restarted
            assert rec.alpha == cfg.alpha_min
        energies = [r.energy for r in trace]
        assert all(b < a for a, b in zip(energies, energies[1:]))

    def test_stationary_start(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=81)
        field, trace = adaptive_apg_solve(toy, toy.minimum())
        assert len(trace) == 1
        assert np.array_equal(field.coeffs, toy.target.coeffs)

    def test_deterministic_repeat(self, lb_problem, lb_lattice):
        phi0 = mean_zero(hermitian_field(lb_lattice, seed=82, scale=0.3))
        cfg = SolverConfig(max_iter=150)
        field_a, trace_a = adaptive_apg_solve(lb_problem, phi0.copy(), cfg)
        field_b, trace_b = adaptive_apg_solve(lb_problem, phi0.copy(), cfg)
        assert np.array_equal(field_a.coeffs, field_b.coeffs)
        assert len(trace_a) == len(trace_b)
        for ra, rb in zip(trace_a, trace_b):
            assert (ra.iter, ra.energy, ra.energy_gap, ra.grad_norm, ra.alpha, ra.restarted) == (
                rb.iter,
                rb.energy,
                rb.energy_gap,
                rb.grad_norm,
                rb.alpha,
                rb.restarted,
            )

    def test_divergent_start_raises(self, lb_problem, lb_lattice):
        phi0 = hermitian_field(lb_lattice, seed=83, scale=1e100)
        with pytest.raises(DivergenceError):
            adaptive_apg_solve(lb_problem, phi0)


class TestDiagonalQuadratic:
    def test_validation(self, lb_lattice):
        target = hermitian_field(lb_lattice, seed=84)
        with pytest.raises(ValueError):
            DiagonalQuadratic(np.ones((4, 4, 4)), target)
        with pytest.raises(ValueError):
            DiagonalQuadratic(np.zeros(lb_lattice.dims), target)
        bad = np.ones(lb_lattice.dims)
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            DiagonalQuadratic(bad, target)

    def test_minimum_is_copy_of_target(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=85)
        m = toy.minimum()
        assert m is not toy.target
        assert np.array_equal(m.coeffs, toy.target.coeffs)
        assert toy.energy(m).total == 0.0

    def test_prox_is_identity_copy(self, lb_lattice):
        toy = make_toy(lb_lattice, seed=86)
        y = hermitian_field(lb_lattice, seed=87)
        out = toy.prox_interaction(y, 0.7)
        assert out is not y
        assert np.array_equal(out.coeffs, y.coeffs)
        with pytest.raises(ValueError):
            toy.prox_interaction(y, -1.0)
