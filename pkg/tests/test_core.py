import numpy as np
import pytest

from wrsmc.core import (
    DegenerateWeightsError,
    Ensemble,
    ensemble_distinct_fraction,
    ensemble_marginal_mean,
    normalize_log_weights,
    summarize_ensemble,
    weighted_mean_and_se,
)
from wrsmc.rng import RngStream, SingleStream


def make_ensemble(columns, log_weights=None, kind="weighted"):
    t = np.asarray(columns, dtype=np.float64)
    if log_weights is None:
        log_weights = np.zeros(t.shape[0])
        kind = "iid"
    return Ensemble(t, np.asarray(log_weights, dtype=np.float64), kind)


class TestNormalizeLogWeights:
    def test_equal_weights(self):
        assert np.allclose(normalize_log_weights([0.0, 0.0, 0.0, 0.0]), 0.25, atol=1e-15)

    def test_two_to_one(self):
        w = normalize_log_weights([np.log(2.0), 0.0])
        assert np.allclose(w, [2 / 3, 1 / 3], atol=1e-15)

    def test_shift_far_below_underflow(self):
        w = normalize_log_weights([-1000.0, -1000.0])
        assert np.allclose(w, [0.5, 0.5], atol=1e-15)

    def test_all_zero_weights_error(self):
        with pytest.raises(DegenerateWeightsError, match="all weights zero"):
            normalize_log_weights([-np.inf, -np.inf, -np.inf])

    def test_single_minus_inf_entry_ok(self):
        w = normalize_log_weights([0.0, -np.inf])
        assert np.allclose(w, [1.0, 0.0])

    def test_sums_to_one_and_shift_invariant(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            lw = rng.normal(size=rng.integers(1, 40)) * 10
            shift = rng.normal() * 500
            w = normalize_log_weights(lw)
            ws = normalize_log_weights(lw + shift)
            assert abs(w.sum() - 1.0) < 1e-12
            assert np.allclose(w, ws, atol=1e-12)


class TestMarginalMean:
    def test_uniform_mean(self):
        e = make_ensemble([[0, 0, 1], [0, 0, 2], [0, 0, 3]])
        assert ensemble_marginal_mean(e, 2) == pytest.approx(2.0, abs=1e-14)

    def test_single_trajectory(self):
        e = make_ensemble([[4.5, -1.25]])
        assert ensemble_marginal_mean(e, 0) == 4.5
        assert ensemble_marginal_mean(e, 1) == -1.25

    def test_weighted_mean_by_hand(self):
        # weights (0.75, 0.25) on x_0 values (0, 4) -> 1.0
        e = make_ensemble([[0.0], [4.0]], np.log([0.75, 0.25]))
        assert ensemble_marginal_mean(e, 0) == pytest.approx(1.0, abs=1e-14)

    def test_uniform_equals_plain_mean(self):
        rng = np.random.default_rng(5)
        t = rng.normal(size=(37, 4))
        e = make_ensemble(t)
        for i in range(4):
            assert ensemble_marginal_mean(e, i) == pytest.approx(t[:, i].mean(), abs=1e-12)

    def test_index_out_of_range(self):
        e = make_ensemble([[1.0, 2.0]])
        with pytest.raises(IndexError):
            ensemble_marginal_mean(e, 2)
        with pytest.raises(IndexError):
            ensemble_marginal_mean(e, -1)


class TestDistinctFraction:
    def test_count_by_hand(self):
        e = make_ensemble(np.array([[1.0], [1.0], [2.0], [3.0]]))
        assert ensemble_distinct_fraction(e, 0) == 0.75

    def test_continuous_draws_all_distinct(self):
        z = SingleStream(RngStream(3, 0)).standard_normal(10_000)
        e = make_ensemble(z[:, None])
        assert ensemble_distinct_fraction(e, 0) == 1.0
        assert ensemble_distinct_fraction(e) == 1.0

    def test_all_equal(self):
        e = make_ensemble(np.zeros((8, 3)))
        assert ensemble_distinct_fraction(e, 1) == 1 / 8
        assert ensemble_distinct_fraction(e) == 1 / 8

    def test_whole_trajectory_mode_sees_prefix_duplicates(self):
        t = np.array([[1.0, 5.0], [1.0, 6.0], [1.0, 5.0]])
        e = make_ensemble(t)
        assert ensemble_distinct_fraction(e, 0) == pytest.approx(1 / 3)
        assert ensemble_distinct_fraction(e) == pytest.approx(2 / 3)

    def test_bitwise_distinctness_separates_signed_zero(self):
        e = make_ensemble(np.array([[0.0], [-0.0]]))
        assert ensemble_distinct_fraction(e, 0) == 1.0


class TestEnsembleValidation:
    def test_weight_length_mismatch(self):
        with pytest.raises(ValueError):
            Ensemble(np.zeros((3, 2)), np.zeros(2), "iid")

    def test_empty(self):
        with pytest.raises(ValueError):
            Ensemble(np.zeros((0, 2)), np.zeros(0), "iid")

    def test_nonfinite_trajectory(self):
        t = np.zeros((2, 2))
        t[1, 1] = np.inf
        with pytest.raises(ValueError):
            Ensemble(t, np.zeros(2), "iid")

    def test_bad_kind(self):
        with pytest.raises(ValueError):
            Ensemble(np.zeros((2, 2)), np.zeros(2), "bogus")


def test_weighted_mean_and_se_uniform_matches_classic():
    rng = np.random.default_rng(9)
    x = rng.normal(size=(500, 1))
    e = make_ensemble(x)
    mean, sd, se = weighted_mean_and_se(e, 0)
    assert mean == pytest.approx(x.mean(), abs=1e-12)
    assert sd == pytest.approx(x.std(), abs=1e-12)
    assert se == pytest.approx(x.std() / np.sqrt(500), abs=1e-12)


def test_summarize_ensemble_shapes():
    rng = np.random.default_rng(2)
    e = make_ensemble(rng.normal(size=(50, 6)))
    rep = summarize_ensemble(e)
    assert rep.means.shape == (6,)
    assert rep.variances.shape == (6,)
    assert np.all(rep.distinct_fractions == 1.0)
    assert np.allclose(rep.means, e.trajectories.mean(axis=0), atol=1e-12)
