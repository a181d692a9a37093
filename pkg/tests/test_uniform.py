import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from landdiv import uniform
from landdiv.compositions import appropriation, sample_uniform_simplex, shannon_index

# (digamma(N) + gamma - 1 + 1/N) / log N at 30 digits, rounded
EXPECTED_H = {2: 0.7213475204444817, 3: 0.75853268885569783, 4: 0.78145981381485518, 5: 0.79737983268483516}

# mean Shannon index along the segment {sum p = 1, w.p = a}, w = (20, 50, 80),
# integrated at 30 digits with the first part as parameter
SEGMENT_MEAN_H = {26: 0.44485554653164895, 35: 0.74971155884919793, 44: 0.83916338045988843,
                  50: 0.77058449009914742, 56: 0.83916338045988843, 65: 0.74971155884919793}

# density of w.p from the divided-difference (B-spline) formula at 40 digits
A_DENSITY = {
    (10, 30, 90): {15: 0.00625, 25: 0.01875, 35: 0.022916666666666667, 50: 0.016666666666666667, 75: 0.00625},
    (10, 20, 30, 90): {15: 0.0046875, 25: 0.031473214285714286, 35: 0.027008928571428571,
                       50: 0.014285714285714286, 75: 0.0020089285714285714},
    (20, 40, 60, 80): {25: 0.0015625, 35: 0.0140625, 50: 0.0375, 75: 0.0015625},
}

increasing_weights = st.lists(st.floats(0, 100, allow_nan=False), min_size=3, max_size=4, unique=True).map(
    sorted
).filter(lambda w: min(np.diff(w)) > 1.0)


class TestClosedForms:
    @pytest.mark.parametrize("n", sorted(EXPECTED_H))
    def test_expected_shannon(self, n):
        assert uniform.expected_shannon_uniform(n) == pytest.approx(EXPECTED_H[n], rel=1e-14)

    def test_expected_appropriation(self):
        assert uniform.expected_appropriation_uniform((51.042, 78.880, 89.993, 95.730)) == pytest.approx(78.91125)

    @pytest.mark.parametrize("n", [2, 3, 4, 6])
    def test_marginal_integrates_to_one(self, n):
        total, _ = integrate.quad(lambda p: uniform.marginal_density_uniform(p, n), 0, 1)
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_marginal_three_covers(self):
        assert uniform.marginal_density_uniform(0.25, 3) == pytest.approx(1.5)


class TestAppropriationDensity:
    @pytest.mark.parametrize("w", sorted(A_DENSITY))
    def test_matches_divided_differences(self, w):
        for a, expect in A_DENSITY[w].items():
            assert uniform.appropriation_density_uniform(a, w) == pytest.approx(expect, rel=1e-9, abs=1e-14)

    def test_zero_outside_support(self):
        assert uniform.appropriation_density_uniform(5.0, (10, 30, 90)) == 0.0
        assert uniform.appropriation_density_uniform(95.0, (10, 30, 90)) == 0.0

    def test_two_covers_is_flat(self):
        assert uniform.appropriation_density_uniform(40.0, (20, 80)) == pytest.approx(1 / 60)

    @settings(max_examples=10, deadline=None)
    @given(increasing_weights)
    def test_integrates_to_one(self, w):
        knots = list(w)
        total, _ = integrate.quad(lambda a: uniform.appropriation_density_uniform(a, w), w[0], w[-1],
                                  points=knots[1:-1], limit=200)
        assert total == pytest.approx(1.0, abs=1e-6)


class TestSlices:
    def test_bounds_contain_vertices(self):
        w = (20, 40, 60, 80)
        verts = uniform.slice_vertices(47.0, w)
        assert np.allclose(verts.sum(axis=1), 1.0)
        assert np.allclose(verts @ np.asarray(w, float), 47.0)
        b = uniform.slice_bounds(47.0, w)
        assert b.lower <= verts[:, 0].min() + 1e-12
        assert b.upper >= verts[:, 0].max() - 1e-12

    def test_samples_lie_on_slice(self):
        w = (10, 20, 30, 90)
        x = uniform.sample_uniform_slice(33.0, w, 500, seed=1)
        assert np.all(x >= 0)
        assert np.allclose(x.sum(axis=1), 1.0)
        assert np.allclose(x @ np.asarray(w, float), 33.0)

    def test_volume_relates_to_density(self):
        # f_A(a) = n! C_a / s_n with n = N - 1 and s_n = w_N - w_{N-1}
        w = (10, 20, 30, 90)
        c_a = uniform.slice_volume(41.0, w)
        assert math.factorial(3) * c_a / (90 - 30) == pytest.approx(
            uniform.appropriation_density_uniform(41.0, w), rel=1e-8)

    def test_empty_slice(self):
        with pytest.raises(uniform.EmptySliceError):
            uniform.slice_bounds(95.0, (20, 50, 80))


class TestConditionalExpectation:
    @pytest.mark.parametrize("a", sorted(SEGMENT_MEAN_H))
    def test_three_covers_against_segment_integral(self, a):
        got = uniform.conditional_expectation_uniform(a, (20, 50, 80))
        assert got == pytest.approx(SEGMENT_MEAN_H[a], abs=1e-9)

    def test_endpoints_vanish(self):
        curve = uniform.conditional_curve_uniform([20.0, 80.0], (20, 50, 80))
        assert curve.tolist() == [0.0, 0.0]

    def test_symmetric_for_equidistant_weights(self):
        w = (20, 40, 60, 80)
        left = uniform.conditional_curve_uniform([30.0, 45.0], w)
        right = uniform.conditional_curve_uniform([70.0, 55.0], w)
        assert np.allclose(left, right, atol=1e-8)

    def test_monte_carlo_route_agrees(self):
        w = (20, 50, 80)
        mc = uniform.conditional_expectation_uniform(35.0, w, method="monte_carlo", count=40_000, seed=3)
        assert mc == pytest.approx(SEGMENT_MEAN_H[35], abs=0.01)

    def test_generic_index(self):
        # a constant index must come back unchanged
        val = uniform.conditional_expectation_uniform(40.0, (10, 20, 30, 90), index=lambda p: 0.3)
        assert val == pytest.approx(0.3, abs=1e-8)

    def test_linear_index_matches_sample_mean(self):
        w = (20, 40, 60, 80)
        exact = uniform.conditional_expectation_uniform(50.0, w, index=lambda p: p[0])
        x = uniform.sample_uniform_slice(50.0, w, 40_000, seed=5)
        assert exact == pytest.approx(x[:, 0].mean(), abs=4 * x[:, 0].std() / math.sqrt(len(x)))


class TestMonteCarloMoments:
    def test_mean_shannon_three_covers(self):
        p = sample_uniform_simplex(3, 100_000, seed=2)
        h = shannon_index(p, 3)
        assert abs(h.mean() - EXPECTED_H[3]) < 4 * h.std() / math.sqrt(len(h))

    def test_samples_of_a_in_range(self):
        a = uniform.appropriation_samples_uniform((20, 50, 80), 1000, seed=0)
        assert a.min() >= 20 and a.max() <= 80
        p = sample_uniform_simplex(3, 1000, seed=0)
        assert np.allclose(a, appropriation(p, (20, 50, 80)))
