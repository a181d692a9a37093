import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from landdiv import uniform
from landdiv.compositions import appropriation, sample_uniform_simplex, shannon_index
from landdiv.curves import CurveEstimate, bin_edges, coarsen, estimate_curve, ise, skipped_width

W = (20.0, 50.0, 80.0)

pairs = st.lists(st.tuples(st.floats(20, 80), st.floats(0, 1)), min_size=1, max_size=200)


def curve_with(means, counts=None, w=(0.0, 10.0)):
    bins = len(means)
    counts = np.ones(bins, dtype=np.int64) if counts is None else np.asarray(counts)
    return CurveEstimate(bin_edges(w, bins), np.asarray(means, float), counts)


class TestEstimate:
    def test_edges_exact(self):
        e = bin_edges(W, 200)
        assert e[0] == 20.0 and e[-1] == 80.0
        assert np.all(np.diff(e) > 0)

    def test_constant_index(self):
        a = np.linspace(20, 80, 1000)
        c = estimate_curve(a, np.full_like(a, 0.42), W, bins=10)
        assert np.all(c.bin_means[c.nonempty] == pytest.approx(0.42))

    def test_single_pair(self):
        c = estimate_curve([[33.0, 0.7]], w=W, bins=20)
        assert c.bin_counts.sum() == 1
        assert np.nanmax(c.bin_means) == 0.7
        assert np.isnan(c.bin_means).sum() == 19

    def test_right_edge_inclusive(self):
        c = estimate_curve([80.0, 20.0], [1.0, 0.0], W, bins=4)
        assert c.bin_counts.tolist() == [1, 0, 0, 1]

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            estimate_curve([81.0], [0.5], W)
        with pytest.raises(ValueError):
            estimate_curve([30.0], [0.5], W, bins=1)

    @settings(max_examples=30)
    @given(pairs, st.randoms(use_true_random=False))
    def test_permutation_invariant(self, data, rnd):
        shuffled = list(data)
        rnd.shuffle(shuffled)
        c1 = estimate_curve(np.array(data), w=W, bins=12)
        c2 = estimate_curve(np.array(shuffled), w=W, bins=12)
        assert np.array_equal(c1.bin_counts, c2.bin_counts)
        assert np.allclose(c1.bin_means, c2.bin_means, equal_nan=True, rtol=1e-12, atol=1e-15)

    @settings(max_examples=30)
    @given(pairs)
    def test_refinement_consistency(self, data):
        arr = np.array(data)
        coarse = estimate_curve(arr, w=W, bins=10)
        fine = coarsen(estimate_curve(arr, w=W, bins=20), 2)
        assert np.array_equal(coarse.bin_edges, fine.bin_edges)
        assert np.array_equal(coarse.bin_counts, fine.bin_counts)
        assert np.allclose(coarse.bin_means, fine.bin_means, equal_nan=True, rtol=1e-12, atol=1e-15)

    def test_csv_round_trip(self):
        c = estimate_curve([[33.0, 0.7], [70.0, 0.25]], w=W, bins=5)
        text = c.to_csv()
        assert text.splitlines()[0] == "bin_left,bin_right,count,mean"
        assert text.splitlines()[1].endswith(",0,")
        back = CurveEstimate.from_csv(text)
        assert np.array_equal(back.bin_edges, c.bin_edges)
        assert np.allclose(back.bin_means, c.bin_means, equal_nan=True, rtol=0)

    def test_uniform_simulation_matches_quadrature(self):
        p = sample_uniform_simplex(3, 1_000_000, seed=12)
        c = estimate_curve(appropriation(p, W), shannon_index(p, 3), W, bins=200)
        full = c.bin_counts >= 1000
        centers = c.centers[full]
        pick = centers[:: max(1, len(centers) // 12)]
        expect = uniform.conditional_curve_uniform(pick, W)
        got = c.bin_means[full][:: max(1, len(centers) // 12)]
        assert np.max(np.abs(got - expect)) < 0.01


class TestIse:
    def test_identical(self):
        c = curve_with([0.1, 0.2, 0.3])
        assert ise(c, c) == 0.0

    def test_zero_versus_one(self):
        assert ise(curve_with(np.zeros(8)), curve_with(np.ones(8))) == pytest.approx(10.0)

    def test_half_bins_differ(self):
        d = 0.3
        c2 = curve_with([0, d, 0, d, 0, d])
        assert ise(curve_with(np.zeros(6)), c2) == pytest.approx(d * d * 10.0 / 2)

    def test_skips_empty_bins(self):
        c1 = curve_with([0.0, np.nan, 0.0, 0.0], [1, 0, 1, 1])
        c2 = curve_with([1.0, 1.0, 1.0, np.nan], [1, 1, 1, 0])
        assert ise(c1, c2) == pytest.approx(2 * 2.5)
        assert skipped_width(c1, c2) == pytest.approx(5.0)

    def test_mismatched_edges(self):
        with pytest.raises(ValueError):
            ise(curve_with([0, 0]), curve_with([0, 0, 0]))

    @given(st.lists(st.floats(0, 1), min_size=4, max_size=4), st.lists(st.floats(0, 1), min_size=4, max_size=4))
    def test_symmetric_nonnegative(self, m1, m2):
        c1, c2 = curve_with(m1), curve_with(m2)
        assert ise(c1, c2) == ise(c2, c1) >= 0
        # squares of tiny differences may underflow, which is still agreement to the sum
        assert (ise(c1, c2) == 0) == bool(np.all((np.subtract(m1, m2)) ** 2 == 0))
