import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from landdiv import dirichlet, kde
from landdiv.compositions import sample_uniform_simplex

# log Gamma(n + 1/lam) - sum_j log Gamma(1 + z_j/lam), 40-digit arithmetic
LOG_RATIO = [
    ((0.2, 0.3, 0.5), 1e-3, 1036.4783909514938162),
    ((0.2, 0.3, 0.5), 1e-1, 12.714816103091839265),
    ((0.01, 0.09, 0.9), 1e-4, 3586.8437818925770481),
    ((0.5, 0.5), 1.0, 0.93471165583043575411),
]


@pytest.fixture(scope="module")
def model3():
    return kde.build(dirichlet.sample((2, 3, 4), 300, seed=5), 1e-3)


def mc_integral(model, path, count=200_000, seed=0):
    # uniform points on the simplex have density (n-1)! on the first n-1 coordinates
    x = sample_uniform_simplex(model.dim, count, seed)
    vals = kde.evaluate(model, x, path)
    return vals.mean() / math.factorial(model.dim - 1)


class TestBuild:
    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            kde.build(np.empty((0, 3)), 0.1)
        with pytest.raises(ValueError):
            kde.build([[0.5, 0.5]], 0.0)

    def test_json_round_trip_is_exact(self, model3):
        again = kde.KdeModel.from_json(model3.to_json())
        assert np.array_equal(again.points, model3.points)
        assert (again.lam, again.eta, again.dim) == (model3.lam, model3.eta, model3.dim)

    def test_json_version_checked(self, model3):
        doc = json.loads(model3.to_json())
        doc["version"] = 99
        with pytest.raises(ValueError):
            kde.KdeModel.from_json(json.dumps(doc))


class TestLogGammaPath:
    def test_single_point_is_beta(self):
        m = kde.build([[0.5, 0.5]], 0.1)
        assert kde.eval_loggamma(m, [0.5, 0.5]) == pytest.approx(stats.beta.pdf(0.5, 6, 6), rel=1e-12)

    @pytest.mark.parametrize("z,lam,expect", LOG_RATIO)
    def test_log_ratio(self, z, lam, expect):
        assert kde.log_ratio_loggamma(np.array([z]), lam)[0] == pytest.approx(expect, rel=1e-13)

    def test_symmetric_kernel(self):
        m = kde.build([[1 / 3, 1 / 3, 1 / 3]], 0.05)
        x = np.array([0.2, 0.3, 0.5])
        vals = [kde.eval_loggamma(m, x[list(p)]) for p in ((0, 1, 2), (2, 0, 1), (1, 2, 0), (0, 2, 1))]
        assert np.allclose(vals, vals[0], rtol=1e-12)

    def test_no_overflow_at_small_bandwidth(self):
        z = np.array([[0.3, 0.3, 0.4]])
        m = kde.build(z, 1e-3)
        val = kde.eval_loggamma(m, z[0])
        assert np.isfinite(val) and val > 0

    def test_boundary_is_zero(self):
        m = kde.build([[0.2, 0.3, 0.5]], 0.1)
        assert kde.eval_loggamma(m, [0.0, 0.5, 0.5]) == 0.0

    def test_flattens_with_bandwidth(self):
        pts = dirichlet.sample((2, 3, 4), 50, seed=1)
        probes = sample_uniform_simplex(3, 2000, seed=2)
        spread = []
        for lam in (0.01, 0.1, 1.0):
            v = kde.eval_loggamma(kde.build(pts, lam), probes)
            spread.append(v.max() / v.min())
        assert spread[0] > spread[1] > spread[2]

    def test_mode_at_sample_point(self):
        z = np.array([0.2, 0.3, 0.5])
        m = kde.build([z], 0.02)
        peak = kde.eval_loggamma(m, z)
        for d in ((0.01, -0.01, 0), (0, 0.01, -0.01), (-0.01, 0, 0.01), (0.002, 0.002, -0.004)):
            assert kde.eval_loggamma(m, z + np.array(d)) < peak

    def test_normalized(self):
        m = kde.build(dirichlet.sample((2, 3, 4), 100, seed=3), 0.01)
        assert mc_integral(m, "loggamma") == pytest.approx(1.0, abs=0.02)


class TestPlan:
    def test_epsilon(self):
        m = kde.build(dirichlet.sample((2, 3, 4), 50, seed=1), 1e-3)
        assert m.plan.epsilon == pytest.approx(math.log1p(1e-4) / 3)
        assert m.plan.epsilon == pytest.approx(3.333e-5, rel=1e-3)

    def test_bernoulli_numbers_in_plan(self, model3):
        b = model3.plan.bernoulli
        assert b[:5] == (Fraction(1), Fraction(-1, 2), Fraction(1, 6), Fraction(0), Fraction(-1, 30))
        assert len(b) >= 2 * model3.plan.s + 2

    @pytest.mark.parametrize("lam", [1e-3, 1e-2, 1e-1])
    def test_bound_recomputed(self, lam):
        pts = dirichlet.sample((2, 3, 4), 200, seed=7)
        m = kde.build(pts, lam)
        plan = m.plan
        assert 1 <= plan.m <= 100 and 1 <= plan.s <= 3
        assert plan.bound <= plan.epsilon
        assert kde.remainder_bound(plan, pts, lam, 3) <= plan.epsilon

    def test_plan_is_minimal(self, model3):
        plan = model3.plan
        if plan.m > 1:
            zs = np.unique(model3.points)
            shorter = kde.EulerMaclaurinPlan(plan.m - 1, 3, plan.bernoulli, plan.epsilon, 0.0, True)
            assert kde.remainder_bound(shorter, zs, model3.lam, model3.dim) > plan.epsilon

    def test_infeasible(self):
        m = kde.build(dirichlet.sample((2, 3, 4), 20, seed=7), 1e-3, eta=1e-15)
        with pytest.raises(kde.PlanError):
            kde.plan_euler_maclaurin(m, max_m=3, max_s=1)


class TestSeries:
    @settings(max_examples=25, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(-3, 0), st.integers(2, 5), st.integers(1, 6))
    def test_tail_integral_matches_quadrature(self, z, log_lam, n, m):
        u = 10.0 ** (-log_lam)
        closed = kde.g_integral(m, 1e6, z, u, n)
        numeric, _ = integrate.quad(lambda x: kde.g_term(x, z, u, n), m, 1e6, limit=500,
                                    points=[10.0 * m, 100.0 * m, 1e3 * m, u], epsabs=1e-12, epsrel=1e-12)
        assert closed == pytest.approx(numeric, abs=1e-8)

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.0, 1.0), st.floats(0.5, 1e4), st.integers(0, 7))
    def test_derivatives_by_finite_difference(self, z, x, r):
        u, n = 50.0, 3
        h = 1e-5 * x

        def f(v):
            return kde.g_term(v, z, u, n) if r == 0 else kde.g_derivative(r, v, z, u, n)

        fd = (f(x + h) - f(x - h)) / (2 * h)
        exact = kde.g_derivative(r + 1, x, z, u, n)
        # central-difference truncation plus cancellation in f
        err = abs(kde.g_derivative(r + 3, x, z, u, n)) * h * h + 1e-12 * abs(f(x)) / h
        assert abs(fd - exact) <= 10 * err + 1e-9 * abs(exact)

    @pytest.mark.parametrize("z,lam,expect", LOG_RATIO)
    def test_log_ratio_within_epsilon(self, z, lam, expect):
        zz = np.array([z])
        plan = kde._plan(np.unique(zz), lam, zz.shape[1], 1e-4)
        got = kde.log_ratio_euler_maclaurin(zz, lam, plan)[0]
        assert abs(got - expect) <= math.log1p(1e-4)


class TestEulerMaclaurinPath:
    def test_certified_ratio(self, model3):
        x = sample_uniform_simplex(3, 1000, seed=8)
        log_ratio = kde.eval_euler_maclaurin(model3, None, x, log=True) - kde.eval_loggamma(model3, x, log=True)
        assert np.all(np.abs(log_ratio) <= math.log1p(1e-4))

    def test_log_density_survives_underflow(self, model3):
        x = np.array([0.98, 0.01, 0.01])
        assert kde.eval_loggamma(model3, x) == 0.0
        assert np.isfinite(kde.eval_loggamma(model3, x, log=True))
        assert kde.eval_loggamma(model3, model3.points[0], log=True) == pytest.approx(
            math.log(kde.eval_loggamma(model3, model3.points[0])), rel=1e-12)

    @pytest.mark.parametrize("lam", [1e-3, 1e-2, 1e-1])
    def test_path_agreement(self, lam):
        m = kde.build(dirichlet.sample((1, 2, 2, 3), 100, seed=2), lam)
        x = sample_uniform_simplex(4, 500, seed=4)
        a, b = kde.eval_euler_maclaurin(m, None, x), kde.eval_loggamma(m, x)
        # far from every sample point both paths underflow
        live = b > 1e-290
        assert live.sum() > 100
        assert np.max(np.abs(a[live] / b[live] - 1)) <= 1e-4

    def test_large_bandwidth_tight_eta(self):
        # the guarantee scales with eta; at eta = 1e-6 the paths agree to 1e-6
        m = kde.build(dirichlet.sample((2, 3, 4), 40, seed=2), 1.0, eta=1e-6)
        x = sample_uniform_simplex(3, 200, seed=4)
        a, b = kde.eval_euler_maclaurin(m, None, x), kde.eval_loggamma(m, x)
        assert np.max(np.abs(a / b - 1)) <= 1e-6

    def test_normalized(self):
        m = kde.build(dirichlet.sample((2, 3, 4), 100, seed=3), 0.01)
        assert mc_integral(m, "euler_maclaurin") == pytest.approx(1.0, abs=0.02)

    def test_unknown_path(self, model3):
        with pytest.raises(ValueError):
            kde.evaluate(model3, [0.2, 0.3, 0.5], "exact")

    def test_invalid_point(self, model3):
        with pytest.raises(ValueError):
            kde.eval_euler_maclaurin(model3, None, [0.5, 0.6, 0.2])


class TestPseudoLikelihood:
    def test_finite_and_peaks_inside(self):
        pts = dirichlet.sample((2, 3, 4), 200, seed=1)
        vals = [kde.pseudo_log_likelihood(pts, lam) for lam in (1e-4, 1e-2, 10.0)]
        assert all(np.isfinite(vals))
        assert vals[1] > vals[0] and vals[1] > vals[2]
