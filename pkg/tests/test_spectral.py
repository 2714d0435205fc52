"""Grid bookkeeping, transforms, and Hermitian symmetry handling."""

import math

import numpy as np
import pytest

from pfc.spectral import (
    GridShape,
    LatticeError,
    LatticeSpec,
    SpectralField,
    SymmetryError,
    build_wavevectors,
    dot,
    embed_in_grid,
    hermitian_defect,
    mode_index,
    norm,
    sample_window,
    symmetrize,
    to_physical,
    to_spectral,
)

from conftest import ddqc_projection, hermitian_field


class TestGridShape:
    def test_valid(self):
        g = GridShape((8, 16, 4))
        assert g.ndim == 3
        assert g.size == 8 * 16 * 4

    @pytest.mark.parametrize("dims", [(7, 8), (2, 8), (8, 0), ()])
    def test_rejects_odd_small_empty(self, dims):
        with pytest.raises(LatticeError):
            GridShape(dims)

    def test_rejects_non_integer(self):
        with pytest.raises(LatticeError):
            GridShape(("a", 8))


class TestLatticeSpec:
    def test_basic_properties(self):
        lat = LatticeSpec(2.0 * np.eye(2), GridShape((8, 8)))
        assert lat.n == 2
        assert lat.d == 2
        assert lat.dims == (8, 8)
        assert np.array_equal(lat.projected_basis(), 2.0 * np.eye(2))

    def test_rejects_singular_basis(self):
        with pytest.raises(LatticeError):
            LatticeSpec(np.zeros((2, 2)), GridShape((8, 8)))

    def test_rejects_shape_mismatch(self):
        with pytest.raises(LatticeError):
            LatticeSpec(np.eye(3), GridShape((8, 8)))

    def test_rejects_rank_deficient_projection(self):
        proj = np.array([[1.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        with pytest.raises(LatticeError):
            LatticeSpec(np.eye(3), GridShape((8, 8, 8)), proj)

    def test_projection_shape_checked(self):
        with pytest.raises(LatticeError):
            LatticeSpec(np.eye(3), GridShape((8, 8, 8)), np.eye(4))


class TestWavevectors:
    def test_zero_mode_is_zero(self):
        lat = LatticeSpec(np.eye(3) / math.sqrt(6.0), GridShape((8, 8, 8)))
        waves = build_wavevectors(lat)
        assert np.all(waves.kvecs[0, 0, 0] == 0.0)
        assert waves.ksq[0, 0, 0] == 0.0

    def test_shell_modes_land_on_unit_sphere(self):
        # |h|^2 = 6 modes under B = I/sqrt(6) give |k|^2 = 1 exactly up to float.
        lat = LatticeSpec(np.eye(3) / math.sqrt(6.0), GridShape((8, 8, 8)))
        ksq = build_wavevectors(lat).ksq
        idx = mode_index((-2, 1, 1), lat.grid)
        assert ksq[idx] == pytest.approx(1.0, abs=1e-15)

    def test_negation_symmetry(self):
        lat = LatticeSpec(np.array([[0.9, 0.1], [0.0, 1.1]]), GridShape((8, 12)))
        waves = build_wavevectors(lat)
        for h in [(1, 2), (3, -5), (-2, 4)]:
            plus = waves.kvecs[mode_index(h, lat.grid)]
            minus = waves.kvecs[mode_index((-h[0], -h[1]), lat.grid)]
            assert np.array_equal(plus, -minus)

    def test_projected_wavevector(self):
        # Mode (0,1,0,0) maps through the 12-fold projection to a unit vector
        # at 30 degrees.
        lat = LatticeSpec(np.eye(4), GridShape((8, 8, 8, 8)), ddqc_projection())
        waves = build_wavevectors(lat)
        k = waves.kvecs[mode_index((0, 1, 0, 0), lat.grid)]
        assert k == pytest.approx([math.cos(math.pi / 6), math.sin(math.pi / 6)])
        assert waves.ksq[mode_index((0, 1, 0, 0), lat.grid)] == pytest.approx(1.0)


class TestSymmetrize:
    @pytest.mark.parametrize("seed", [0, 1, 2])
    def test_idempotent_bitwise(self, lb_lattice, seed):
        rng = np.random.default_rng(seed)
        raw = SpectralField(
            rng.standard_normal(lb_lattice.dims)
            + 1j * rng.standard_normal(lb_lattice.dims),
            lb_lattice,
        )
        once = symmetrize(raw)
        twice = symmetrize(once)
        assert np.array_equal(once.coeffs, twice.coeffs)

    def test_hermitian_input_unchanged(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=3)
        assert hermitian_defect(field) == 0.0
        assert np.array_equal(symmetrize(field).coeffs, field.coeffs)

    def test_nyquist_rows_pinned(self, lb_lattice):
        coeffs = np.ones(lb_lattice.dims, dtype=complex)
        sym = symmetrize(SpectralField(coeffs, lb_lattice)).coeffs
        assert np.all(sym[4, :, :] == 0.0)
        assert np.all(sym[:, 4, :] == 0.0)
        assert np.all(sym[:, :, 4] == 0.0)

    def test_defect_measures_distance(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=4)
        field.coeffs[1, 0, 0] += 1.0  # break the pairing
        assert hermitian_defect(field) > 0.1


class TestTransforms:
    @pytest.mark.parametrize("seed", [0, 1, 2, 3])
    def test_roundtrip(self, lb_lattice, seed):
        field = hermitian_field(lb_lattice, seed=seed)
        back = to_spectral(to_physical(field), lb_lattice)
        assert np.allclose(back.coeffs, field.coeffs, rtol=0, atol=1e-14)

    def test_roundtrip_4d(self, lp_lattice):
        field = hermitian_field(lp_lattice, seed=5)
        back = to_spectral(to_physical(field), lp_lattice)
        assert np.allclose(back.coeffs, field.coeffs, rtol=0, atol=1e-14)

    def test_zero_mode_is_mean(self, lb_lattice):
        samples = to_physical(hermitian_field(lb_lattice, seed=6)) + 0.25
        field = to_spectral(samples, lb_lattice)
        assert field.coeffs[0, 0, 0] == pytest.approx(samples.mean(), abs=1e-14)

    def test_parseval(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=7, scale=0.8)
        samples = to_physical(field)
        assert np.mean(samples * samples) == pytest.approx(
            norm(field) ** 2, rel=1e-12
        )

    def test_single_mode_is_cosine(self, lb_lattice):
        coeffs = np.zeros(lb_lattice.dims, dtype=complex)
        coeffs[mode_index((1, 0, 0), lb_lattice.grid)] = 0.5
        coeffs[mode_index((-1, 0, 0), lb_lattice.grid)] = 0.5
        samples = to_physical(SpectralField(coeffs, lb_lattice))
        x = 2.0 * math.pi * np.arange(8) / 8.0
        expected = np.cos(x)[:, None, None] * np.ones((1, 8, 8))
        assert np.allclose(samples, expected, atol=1e-14)

    def test_non_hermitian_rejected(self, lb_lattice):
        coeffs = np.zeros(lb_lattice.dims, dtype=complex)
        coeffs[1, 0, 0] = 1.0  # no conjugate mate
        with pytest.raises(SymmetryError):
            to_physical(SpectralField(coeffs, lb_lattice))

    def test_check_skippable(self, lb_lattice):
        coeffs = np.zeros(lb_lattice.dims, dtype=complex)
        coeffs[1, 0, 0] = 1.0
        out = to_physical(SpectralField(coeffs, lb_lattice), check=False)
        assert out.shape == lb_lattice.dims

    def test_complex_samples_rejected(self, lb_lattice):
        with pytest.raises(ValueError):
            to_spectral(np.zeros(lb_lattice.dims, dtype=complex), lb_lattice)

    def test_to_spectral_output_symmetric(self, lb_lattice):
        rng = np.random.default_rng(8)
        field = to_spectral(rng.standard_normal(lb_lattice.dims), lb_lattice)
        assert hermitian_defect(field) == 0.0


class TestModeIndex:
    def test_wrapping(self):
        grid = GridShape((8, 8))
        assert mode_index((0, 0), grid) == (0, 0)
        assert mode_index((-1, 3), grid) == (7, 3)
        assert mode_index((-3, 2), grid) == (5, 2)

    @pytest.mark.parametrize("h", [(4, 0), (-4, 0), (0, 5), (0, -17)])
    def test_out_of_range(self, h):
        with pytest.raises(LatticeError):
            mode_index(h, GridShape((8, 8)))

    def test_dimension_mismatch(self):
        with pytest.raises(LatticeError):
            mode_index((1, 1, 1), GridShape((8, 8)))


class TestEmbed:
    def test_mode_indices_preserved(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=9)
        target = LatticeSpec(lb_lattice.basis, GridShape((16, 16, 16)))
        big = embed_in_grid(field, target)
        assert norm(big) == pytest.approx(norm(field), rel=1e-15)
        for h in [(0, 0, 0), (1, 2, -3), (-2, 0, 3)]:
            assert big.coeffs[mode_index(h, target.grid)] == field.coeffs[
                mode_index(h, lb_lattice.grid)
            ]

    def test_same_grid_identity(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=10)
        out = embed_in_grid(field, lb_lattice)
        assert np.array_equal(out.coeffs, field.coeffs)

    def test_rejects_smaller_target(self, lb_lattice):
        target = LatticeSpec(lb_lattice.basis, GridShape((4, 4, 4)))
        with pytest.raises(LatticeError):
            embed_in_grid(hermitian_field(lb_lattice, seed=11), target)

    def test_rejects_basis_change(self, lb_lattice):
        target = LatticeSpec(np.eye(3), GridShape((16, 16, 16)))
        with pytest.raises(LatticeError):
            embed_in_grid(hermitian_field(lb_lattice, seed=12), target)


class TestWindowSampling:
    def test_single_projected_mode_matches_cosine(self):
        lat = LatticeSpec(np.eye(4), GridShape((8, 8, 8, 8)), ddqc_projection())
        coeffs = np.zeros(lat.dims, dtype=complex)
        coeffs[mode_index((1, 0, 0, 0), lat.grid)] = 0.5
        coeffs[mode_index((-1, 0, 0, 0), lat.grid)] = 0.5
        field = SpectralField(coeffs, lat)
        vals = sample_window(field, (0.0, 2.0 * math.pi, -1.0, 1.0), (16, 5))
        x = np.linspace(0.0, 2.0 * math.pi, 16, endpoint=False)
        # k = P B (1,0,0,0) = (1, 0): the window sees cos(x) independent of y.
        assert np.allclose(vals, np.cos(x)[:, None] * np.ones((1, 5)), atol=1e-12)

    def test_requires_two_component_space(self, lb_lattice):
        field = hermitian_field(lb_lattice, seed=13)
        with pytest.raises(LatticeError):
            sample_window(field, (0.0, 1.0, 0.0, 1.0), (4, 4))


class TestInnerProduct:
    def test_dot_matches_parseval_pairing(self, lb_lattice):
        a = hermitian_field(lb_lattice, seed=14)
        b = hermitian_field(lb_lattice, seed=15)
        fa, fb = to_physical(a), to_physical(b)
        assert dot(a, b) == pytest.approx(np.mean(fa * fb), abs=1e-13)

    def test_norm_squared_is_self_dot(self, lb_lattice):
        a = hermitian_field(lb_lattice, seed=16)
        assert norm(a) ** 2 == pytest.approx(dot(a, a), rel=1e-14)

    def test_field_arithmetic(self, lb_lattice):
        a = hermitian_field(lb_lattice, seed=17)
        b = hermitian_field(lb_lattice, seed=18)
        s = a + b - 2.0 * a
        assert np.allclose(s.coeffs, b.coeffs - a.coeffs, atol=1e-15)
        assert np.array_equal((-a).coeffs, -a.coeffs)
