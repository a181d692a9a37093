import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from landdiv import dirichlet


class TestDensity:
    def test_flat_law(self):
        # Dirichlet(1,1,1) is uniform with density 2 on the first two coordinates
        assert dirichlet.log_density((1, 1, 1), (0.2, 0.3, 0.5)) == pytest.approx(math.log(2))

    def test_known_value(self):
        assert dirichlet.log_density((2, 1, 1), (0.5, 0.25, 0.25)) == pytest.approx(math.log(3))

    @settings(max_examples=25)
    @given(st.lists(st.floats(0.3, 8), min_size=2, max_size=5), st.integers(0, 1000))
    def test_matches_reference(self, alpha, seed):
        x = dirichlet.sample(alpha, 1, seed)[0]
        x = np.maximum(x, 1e-12)
        x /= x.sum()
        ref = stats.dirichlet.logpdf(x, alpha)
        assert dirichlet.log_density(alpha, x) == pytest.approx(ref, rel=1e-9, abs=1e-9)

    def test_boundary(self):
        assert dirichlet.log_density((2, 2), (0.0, 1.0)) == -math.inf
        with pytest.raises(ValueError):
            dirichlet.log_density((0.5, 2), (0.0, 1.0))

    def test_bad_parameters(self):
        with pytest.raises(ValueError):
            dirichlet.DirichletParams((1.0, 0.0))


class TestSampling:
    def test_mean(self):
        x = dirichlet.sample((2, 3, 5), 100_000, seed=4)
        assert np.allclose(x.mean(axis=0), (0.2, 0.3, 0.5), atol=0.005)

    def test_deterministic(self):
        assert np.array_equal(dirichlet.sample((1, 2), 10, 3), dirichlet.sample((1, 2), 10, 3))


class TestFit:
    @pytest.mark.parametrize("alpha", [(1, 1, 1), (3, 1, 0.5), (2, 3, 4)])
    def test_recovers_parameters(self, alpha):
        x = dirichlet.sample(alpha, 20_000, seed=9)
        fit = dirichlet.mle_fit(x)
        assert np.allclose(fit.alpha, alpha, rtol=0.08)

    def test_first_order_conditions(self):
        from landdiv.specfun import digamma

        x = dirichlet.sample((2, 3, 4), 2_000, seed=1)
        a = np.asarray(dirichlet.mle_fit(x).alpha)
        assert np.allclose(digamma(a) - digamma(a.sum()), np.log(x).mean(axis=0), atol=1e-9)

    def test_fit_is_likelihood_maximum(self):
        x = dirichlet.sample((2, 3, 4), 2_000, seed=2)
        fit = dirichlet.mle_fit(x)
        best = dirichlet.log_likelihood(fit, x)
        for bump in (0.98, 1.02):
            assert dirichlet.log_likelihood(np.asarray(fit.alpha) * bump, x) < best

    def test_too_few_points(self):
        with pytest.raises(dirichlet.DirichletFitError):
            dirichlet.mle_fit([[0.5, 0.5], [0.4, 0.6]])

    def test_coincident_points(self):
        with pytest.raises(dirichlet.DirichletFitError):
            dirichlet.mle_fit([[0.5, 0.5]] * 5)

    def test_empty_coordinate(self):
        with pytest.raises(dirichlet.DirichletFitError):
            dirichlet.mle_fit([[0.5, 0.5, 0.0], [0.4, 0.6, 0.0], [0.3, 0.7, 0.0]])
