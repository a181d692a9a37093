from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import special

from landdiv.specfun import EULER_GAMMA, bernoulli_numbers, digamma, inverse_digamma, trigamma


class TestPolygamma:
    def test_digamma_one(self):
        assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-13)

    @given(st.floats(1e-3, 1e4))
    def test_digamma_matches_reference(self, x):
        assert digamma(x) == pytest.approx(special.digamma(x), rel=1e-12, abs=1e-12)

    @given(st.floats(1e-3, 1e4))
    def test_trigamma_matches_reference(self, x):
        assert trigamma(x) == pytest.approx(special.polygamma(1, x), rel=1e-11)

    @given(st.floats(-20, 20))
    def test_inverse(self, y):
        assert digamma(inverse_digamma(y)) == pytest.approx(y, abs=1e-10)

    def test_vectorized(self):
        x = np.array([0.5, 1.0, 10.0])
        assert np.allclose(digamma(x), special.digamma(x), rtol=1e-13)


class TestBernoulli:
    def test_first_values(self):
        b = bernoulli_numbers(9)
        assert b[:9] == (
            Fraction(1), Fraction(-1, 2), Fraction(1, 6), Fraction(0), Fraction(-1, 30),
            Fraction(0), Fraction(1, 42), Fraction(0), Fraction(-1, 30),
        )

    def test_b12(self):
        assert bernoulli_numbers(13)[12] == Fraction(-691, 2730)
