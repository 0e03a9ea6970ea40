import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special
from scipy.integrate import simpson

from delayquant import kernels as ker


class TestBessel:
    def test_zero(self):
        assert ker.bessel_i1(0.0) == 0.0
        assert ker.bessel_j1(0.0) == 0.0

    def test_reference_values(self):
        # series partial sums, cross-checked against an independent library
        assert math.isclose(ker.bessel_i1(1.0), 0.5651591, abs_tol=1e-6)
        assert math.isclose(ker.bessel_j1(1.0), 0.4400506, abs_tol=1e-6)
        assert math.isclose(ker.bessel_i1(2.8723), 3.5234, abs_tol=1e-3)
        assert math.isclose(ker.bessel_j1(2.8723), 0.3852, abs_tol=1e-3)

    @pytest.mark.parametrize("z", [0.1, 0.7, 1.3, 2.9, 3.3166, 5.0])
    def test_against_scipy(self, z):
        assert math.isclose(ker.bessel_i1(z), special.iv(1, z), rel_tol=1e-13)
        assert math.isclose(ker.bessel_j1(z), special.jv(1, z), rel_tol=1e-12, abs_tol=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ker.DomainError):
            ker.bessel_i1(-0.5)
        with pytest.raises(ker.DomainError):
            ker.bessel_j1(-1.0)

    def test_monotone_i1(self):
        zs = np.linspace(0, 4, 50)
        vals = [ker.bessel_i1(z) for z in zs]
        assert np.all(np.diff(vals) > 0)

    @given(st.floats(min_value=1e-6, max_value=0.1))
    def test_small_argument_law(self, z):
        # |f(z) - z/2| <= z^3 / 8 for both kernels' Bessel factors
        assert abs(ker.bessel_i1(z) - z / 2.0) <= z**3 / 8.0
        assert abs(ker.bessel_j1(z) - z / 2.0) <= z**3 / 8.0


class TestClosedFormKernels:
    def test_edge_and_diagonal(self):
        assert ker.kernel_k(1.0, 0.0, 11.0) == 0.0
        assert ker.kernel_l(1.0, 0.0, 11.0) == 0.0
        assert ker.kernel_k(1.0, 1.0, 11.0) == -5.5
        assert ker.kernel_l(1.0, 1.0, 11.0) == -5.5

    def test_interior_values(self):
        assert math.isclose(ker.kernel_k(1.0, 0.5, 11.0), -6.747, abs_tol=1e-2)
        assert math.isclose(ker.kernel_l(1.0, 0.5, 11.0), -0.7376, abs_tol=1e-2)

    def test_diagonal_limit_exact_on_samples(self):
        # the limit branch must return exactly -lam*x/2
        for x in np.linspace(0.0, 1.0, 100):
            assert ker.kernel_k(x, x, 11.0) == -11.0 * x / 2.0
            assert ker.kernel_l(x, x, 11.0) == -11.0 * x / 2.0

    def test_outside_triangle_rejected(self):
        with pytest.raises(ker.DomainError):
            ker.kernel_k(0.5, 0.6, 11.0)
        with pytest.raises(ker.DomainError):
            ker.kernel_l(0.2, -0.1, 11.0)

    def test_sign(self):
        xs = np.linspace(0.01, 1.0, 20)
        for x in xs:
            for y in np.linspace(0.0, x, 10):
                assert ker.kernel_k(x, y, 11.0) <= 0.0


class TestSineCoefficients:
    def test_zero_trace(self):
        c = ker.sine_coefficients(np.zeros(1201), 3)
        assert np.all(c == 0.0)

    def test_orthogonality(self):
        zeta = np.linspace(0, 1, 1201)
        c = ker.sine_coefficients(np.sin(np.pi * zeta), 2)
        assert math.isclose(c[0], 0.5, abs_tol=1e-10)
        assert abs(c[1]) < 1e-12

    def test_against_fine_quadrature(self):
        zeta = np.linspace(0, 1, 100001)
        arg = 11.0 * (1 - zeta**2)
        trace = np.where(arg >= 1e-12, -11.0 * zeta * ker._i1_over_z(arg),
                         -11.0 * zeta * 0.5)
        oracle = simpson(np.sin(np.pi * zeta) * trace, x=zeta)
        sub = np.interp(np.linspace(0, 1, 1201), zeta, trace)
        c1 = ker.sine_coefficients(sub, 1)[0]
        assert math.isclose(c1, oracle, rel_tol=1e-7)

    def test_unresolvable_modes_rejected(self):
        with pytest.raises(ker.ParameterError):
            ker.sine_coefficients(np.zeros(101), 60)


class TestSeriesKernels:
    def test_gamma_boundary_zeros(self, ref_tables):
        assert np.all(ref_tables.gamma_grid[:, 0] == 0.0)
        assert np.all(ref_tables.delta_grid[:, 0] == 0.0)
        assert np.max(np.abs(ref_tables.gamma_grid[:, -1])) < 1e-12
        assert np.max(np.abs(ref_tables.delta_grid[:, -1])) < 1e-12

    def test_single_mode_g_closed_form(self):
        # with one retained mode, g(x, y) = 2 pi c1 exp(D(lam - pi^2)(x - y))
        coeffs = np.array([0.7])
        s = np.array([0.0, 0.3, 0.9])
        got = ker.kernel_g(s, 11.0, 0.1, coeffs)
        want = 2 * np.pi * 0.7 * np.exp(0.1 * (11.0 - np.pi**2) * s)
        np.testing.assert_allclose(got, want, rtol=1e-13)

    def test_zero_coefficients(self):
        z = np.zeros(5)
        assert ker.kernel_gamma(0.3, 0.4, 11.0, 0.1, z) == 0.0
        assert ker.kernel_g(0.2, 11.0, 0.1, z) == 0.0
        assert ker.kernel_delta(0.3, 0.4, 0.1, z) == 0.0
        assert ker.kernel_p(0.2, 0.1, z) == 0.0

    def test_gamma_at_zero_reconstructs_trace(self, ref_tables):
        # sine series of k(1, .): distance decreases as N doubles
        t60 = ref_tables
        t120 = ker.build_tables(200, 11.0, 0.1, ker.SeriesTruncation(120, 2400))
        w = np.full(201, t60.h)
        w[0] = w[-1] = t60.h / 2

        def dist(t):
            d = t.gamma_grid[0, :] - t.k_grid[-1, :]
            return math.sqrt(float(np.sum(w * d * d)))

        assert dist(t120) < dist(t60)


class TestBuildTables:
    def test_resonance_rejected(self):
        with pytest.raises(ker.ParameterError, match="mode n = 1"):
            ker.build_tables(100, math.pi**2, 0.1, ker.SeriesTruncation(4, 80))

    def test_truncation_invariants(self):
        with pytest.raises(ker.ParameterError):
            ker.SeriesTruncation(0, 100)
        with pytest.raises(ker.ParameterError):
            ker.SeriesTruncation(10, 100)  # fewer than 20 points per mode

    def test_tables_match_pointwise_kernels(self, ref_tables):
        t = ref_tables
        idx = [(200, 100), (150, 75), (60, 0), (200, 200), (37, 36)]
        for i, j in idx:
            x, y = t.x[i], t.x[j]
            assert math.isclose(t.k_grid[i, j], ker.kernel_k(x, y, t.lam),
                                rel_tol=1e-13, abs_tol=1e-15)
            assert math.isclose(t.l_grid[i, j], ker.kernel_l(x, y, t.lam),
                                rel_tol=1e-13, abs_tol=1e-15)
            assert math.isclose(
                t.gamma_grid[i, j],
                float(ker.kernel_gamma(x, y, t.lam, t.delay, t.coeffs_k)),
                rel_tol=1e-12, abs_tol=1e-13)

    def test_deterministic_rebuild(self, ref_tables):
        again = ker.build_tables(200, 11.0, 0.1, ker.SeriesTruncation(60, 1200))
        assert np.array_equal(again.k_grid, ref_tables.k_grid)
        assert np.array_equal(again.gamma_grid, ref_tables.gamma_grid)
        assert np.array_equal(again.g1, ref_tables.g1)

    def test_grid_refinement_consistency(self):
        # the same kernels sampled on a finer grid agree at shared nodes
        coarse = ker.build_tables(100, 11.0, 0.1, ker.SeriesTruncation(40, 800))
        fine = ker.build_tables(200, 11.0, 0.1, ker.SeriesTruncation(40, 800))
        np.testing.assert_allclose(coarse.k_grid[::1, ::1],
                                   fine.k_grid[::2, ::2], rtol=0, atol=1e-13)
        np.testing.assert_allclose(coarse.gamma_grid,
                                   fine.gamma_grid[::2, ::2], rtol=0, atol=1e-12)
