import math

import numpy as np
import pytest
from scipy.integrate import quad

import evidencenet as en
from evidencenet.model import param_layout


def normal_cdf_by_quadrature(x):
    # independent of scipy's ndtr/ndtri pair
    pdf = lambda t: math.exp(-0.5 * t * t) / math.sqrt(2 * math.pi)
    tail, _ = quad(pdf, -12.0, x)
    return tail


class TestGaussianQuantile:
    def test_median(self):
        assert en.gaussian_quantile(0.5, 0.0, 1.0) == 0.0

    def test_one_sigma_point_vs_integration_oracle(self):
        x = en.gaussian_quantile(0.841344746, 0.0, 1.0)
        assert x == pytest.approx(1.0, abs=1e-6)
        assert normal_cdf_by_quadrature(x) == pytest.approx(0.841344746, abs=1e-10)

    def test_scale_equivariance(self):
        assert en.gaussian_quantile(0.5, 0.0, 2.5) == 0.0
        assert en.gaussian_quantile(0.841344746, 0.0, 2.5) == pytest.approx(2.5, abs=2.5e-6)

    def test_boundaries_error(self):
        for u in (0.0, 1.0):
            with pytest.raises(ValueError):
                en.gaussian_quantile(u)
        with pytest.raises(ValueError):
            en.gaussian_quantile(0.5, sd=0.0)


class TestGammaPrecisionQuantile:
    def test_exponential_median(self):
        sigma = en.gamma_precision_quantile(0.5, 1.0, 1.0)
        assert sigma == pytest.approx(math.log(2.0) ** -0.5, abs=1e-14)
        assert sigma == pytest.approx(1.20112, abs=1e-5)

    def test_unit_precision_point(self):
        u = 1.0 - math.exp(-1.0)
        assert en.gamma_precision_quantile(u, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_rate_rescales_precision(self):
        sigma = en.gamma_precision_quantile(0.5, 1.0, 0.25)
        assert sigma == pytest.approx((4.0 * math.log(2.0)) ** -0.5, abs=1e-14)
        assert sigma == pytest.approx(0.60056, abs=1e-5)

    def test_boundaries_error(self):
        for u in (0.0, 1.0):
            with pytest.raises(ValueError):
                en.gamma_precision_quantile(u)


class TestQuantileRoundTrips:
    def test_gaussian_cdf_of_quantile(self):
        from scipy.special import ndtr
        u = np.linspace(0.01, 0.99, 99)
        assert np.max(np.abs(ndtr(en.gaussian_quantile(u)) - u)) < 1e-10

    def test_gamma_cdf_of_quantile(self):
        from scipy.special import gammainc
        u = np.linspace(0.01, 0.99, 99)
        for alpha, beta in [(1.0, 1.0), (1.0, 0.25), (2.5, 0.7)]:
            sigma = en.gamma_precision_quantile(u, alpha, beta)
            assert np.max(np.abs(gammainc(alpha, beta * sigma ** -2) - u)) < 1e-10

    def test_unit_gamma_matches_exponential_quantile(self):
        u = np.linspace(0.01, 0.99, 99)
        tau = en.gamma_precision_quantile(u, 1.0, 1.0) ** -2
        assert np.max(np.abs(tau - (-np.log1p(-u)))) < 1e-12


class TestForcedIdentifiability:
    def test_single_element_unchanged(self):
        np.testing.assert_array_equal(en.forced_identifiability(np.array([0.37])), [0.37])

    def test_hand_recurrence_k2(self):
        out = en.forced_identifiability(np.array([0.25, 0.64]))
        np.testing.assert_allclose(out, [0.2, 0.8], atol=1e-15)

    def test_boundary_fixed_point(self):
        np.testing.assert_array_equal(en.forced_identifiability(np.ones(3)), np.ones(3))

    def test_output_ascending(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            out = en.forced_identifiability(rng.random(6))
            assert np.all(np.diff(out) >= 0)

    @pytest.mark.parametrize("k", [2, 3, 5])
    def test_sorted_uniform_law(self, k):
        from scipy.stats import beta, kstest
        rng = np.random.default_rng(42 + k)
        draws = np.apply_along_axis(en.forced_identifiability, 1, rng.random((100_000, k)))
        for i in range(k):
            # i-th sorted coordinate of k uniforms is Beta(i+1, k-i)
            stat = kstest(draws[:, i], beta(i + 1, k - i).cdf).statistic
            assert stat < 0.01


class TestToPhysical:
    def test_fixed_median_weights_are_zero(self):
        spec = en.parse_name("(2)")
        layout = param_layout(spec)
        theta = en.to_physical(spec, np.full(layout.total_dim, 0.5))
        net = layout.network_vector(theta)
        mask = np.ones(net.shape[0], dtype=bool)
        for start, stop in layout.ordered_spans:
            mask[start:stop] = False
        np.testing.assert_allclose(net[mask], 0.0, atol=1e-12)

    def test_br_median_is_zero_vector(self):
        spec = en.parse_name("br")
        theta = en.to_physical(spec, np.full(14, 0.5))
        np.testing.assert_allclose(theta, 0.0, atol=1e-12)

    def test_single_width_scales_every_network_parameter(self):
        spec = en.parse_name("sh sv (2)")
        layout = param_layout(spec)
        rng = np.random.default_rng(3)
        u = rng.random(layout.total_dim)
        theta_a = en.to_physical(spec, u)
        sigma_a = theta_a[0]
        # choose the hyper coordinate that doubles the global width
        u_b = u.copy()
        u_b[0] = 1.0 - math.exp(-(2.0 * sigma_a) ** -2)
        theta_b = en.to_physical(spec, u_b)
        assert theta_b[0] == pytest.approx(2.0 * sigma_a, rel=1e-12)
        np.testing.assert_allclose(layout.network_vector(theta_b),
                                   2.0 * layout.network_vector(theta_a), rtol=1e-9)

    def test_ordered_bias_blocks_ascend(self):
        spec = en.parse_name("lh sv (5, 3)")
        layout = param_layout(spec)
        rng = np.random.default_rng(7)
        for _ in range(10_000):
            theta = en.to_physical(spec, rng.random(layout.total_dim))
            net = layout.network_vector(theta)
            for start, stop in layout.ordered_spans:
                block = net[start:stop]
                assert np.all(np.diff(block) > 0)

    def test_monotone_in_primary_coordinate(self):
        spec = en.parse_name("lh sv (3)")
        layout = param_layout(spec)
        rng = np.random.default_rng(11)
        for _ in range(50):
            u = rng.random(layout.total_dim)
            i = rng.integers(layout.total_dim)
            lo, hi = u.copy(), u.copy()
            lo[i], hi[i] = 0.2, 0.8
            a = en.to_physical(spec, lo)
            b = en.to_physical(spec, hi)
            if i < layout.n_hyper or i == layout.sigma_index:
                # larger u means larger precision, hence smaller width
                assert b[i] <= a[i]
            else:
                assert b[i] >= a[i]

    def test_boundary_coordinates_stay_finite(self):
        spec = en.parse_name("sh sv (2)")
        layout = param_layout(spec)
        for value in (0.0, 1.0):
            theta = en.to_physical(spec, np.full(layout.total_dim, value))
            assert np.all(np.isfinite(theta))

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            en.to_physical(en.parse_name("br"), np.full(3, 0.5))
