import numpy as np
import pytest

from wrsmc.core import (
    AcceptanceTooRareError,
    Ensemble,
    ModelSpec,
    ensemble_distinct_fraction,
)
from wrsmc.models import LinearGaussianParams, lg_build, simulate
from wrsmc.oracle import kalman_smoother, ks_critical_value, ks_statistic, mean_z_scores
from wrsmc.rejection import full_trajectory_rejection
from wrsmc.rng import RngStream
from wrsmc.wrs import CalibrationError, WindowPlan, calibrate_window, wrs_block_step, wrs_run


def flat_likelihood_model():
    """Gaussian chain whose observations carry no information; the bound is
    attained by every draw, so windows accept on the first attempt."""
    base = lg_build(LinearGaussianParams())
    return ModelSpec(base.initial_sampler, base.transition_sampler,
                     lambda i, y, x: np.zeros_like(np.asarray(x, dtype=np.float64)),
                     lambda i, y: 0.0)


class TestWrsRun:
    def test_maximal_window_delegates_to_full_rejection(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 4, RngStream(50))
        full, _ = full_trajectory_rejection(lg_build(p), y, 300, RngStream(51))
        for w in (5, 6, 9):
            e, rep = wrs_run(lg_build(p), y, w, 300, RngStream(51))
            assert np.array_equal(e.trajectories, full.trajectories)
            assert rep.window_mean_attempts.shape == (1,)

    def test_maximal_window_distribution_matches_full_rejection(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 4, RngStream(52))
        full, _ = full_trajectory_rejection(lg_build(p), y, 10_000, RngStream(53))
        e, _ = wrs_run(lg_build(p), y, 5, 10_000, RngStream(54))
        crit = ks_critical_value(10_000, 10_000, alpha=0.01)
        for i in range(5):
            assert ks_statistic(e.trajectories[:, i], full.trajectories[:, i]) < crit

    def test_window_one_leaves_x0_unconditioned(self):
        # the first window of length 1 covers no observation at all
        p = LinearGaussianParams()
        m = lg_build(p)
        e, _ = wrs_run(m, np.array([40.0]), 1, 20_000, RngStream(55))
        x0 = e.trajectories[:, 0]
        assert abs(x0.mean() - p.mu0) < 3 * p.sigma0 / np.sqrt(x0.size)
        # while x_1 does see its observation and is pulled far from the prior
        assert e.trajectories[:, 1].mean() > 10.0

    def test_short_window_matches_kalman_on_lg(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 10, RngStream(56))
        e, _ = wrs_run(lg_build(p), y, 3, 20_000, RngStream(57))
        z = mean_z_scores(e, kalman_smoother(p, y))
        assert np.max(np.abs(z)) < 3.5

    def test_output_is_iid_uniform_and_distinct(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 6, RngStream(58))
        e, rep = wrs_run(lg_build(p), y, 2, 2000, RngStream(59))
        assert e.kind == "iid"
        assert np.all(e.log_weights == 0.0)
        assert ensemble_distinct_fraction(e) == 1.0
        assert np.all(rep.distinct_fractions == 1.0)

    def test_flat_likelihood_accepts_first_attempt(self):
        m = flat_likelihood_model()
        y = np.zeros(8)
        e, rep = wrs_run(m, y, 3, 500, RngStream(60))
        assert np.all(rep.window_mean_attempts == 1.0)
        assert rep.window_starts.tolist() == list(range(0, 7))
        assert e.trajectories.shape == (500, 9)

    def test_final_window_kept_whole(self):
        # n=3, w=2: windows start at 0,1,2; the last keeps x_2 and x_3
        m = flat_likelihood_model()
        e, rep = wrs_run(m, np.zeros(3), 2, 50, RngStream(61))
        assert rep.window_starts.tolist() == [0, 1, 2]
        assert e.trajectories.shape == (50, 4)

    def test_attempts_stable_along_a_long_run(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 100, RngStream(62))
        _, rep = wrs_run(lg_build(p), y, 3, 1000, RngStream(63))
        att = rep.window_mean_attempts
        assert att.max() / att.min() <= 10.0

    def test_deterministic_replay(self):
        p = LinearGaussianParams()
        _, y = simulate(lg_build(p), 6, RngStream(64))
        e1, _ = wrs_run(lg_build(p), y, 3, 400, RngStream(65))
        e2, _ = wrs_run(lg_build(p), y, 3, 400, RngStream(65))
        assert np.array_equal(e1.trajectories, e2.trajectories)

    def test_error_annotated_with_window(self):
        p = LinearGaussianParams()
        y = np.array([0.0, 0.0, 200.0, 0.0])  # window covering y_3 cannot accept
        with pytest.raises(AcceptanceTooRareError) as err:
            wrs_run(lg_build(p), y, 2, 50, RngStream(66), max_attempts=10)
        assert err.value.window is not None

    def test_rejects_empty_observations(self):
        with pytest.raises(ValueError):
            wrs_run(lg_build(LinearGaussianParams()), [], 2, 10, RngStream(0))
        with pytest.raises(ValueError):
            wrs_run(lg_build(LinearGaussianParams()), [1.0], 0, 10, RngStream(0))


class TestBlockStep:
    def test_flat_likelihood_accepts_immediately(self):
        m = flat_likelihood_model()
        block, attempts = wrs_block_step(m, 2, 0.5, np.zeros(3), RngStream(70))
        assert block.shape == (3,)
        assert attempts == 1

    def test_retained_state_matches_windowed_kalman(self):
        # condition the window chain on x_{m-1} via a near-delta initial law
        p = LinearGaussianParams()
        v, m, w = 1.7, 4, 3
        _, y = simulate(lg_build(p), m + w, RngStream(71))
        y_slice = y[m - 1:m - 1 + w]
        cond = LinearGaussianParams(mu0=v, sigma0=1e-9, a=p.a, b=p.b,
                                    sigma_x=p.sigma_x, sigma_y=p.sigma_y)
        truth = kalman_smoother(cond, y_slice).means[1]
        blocks, _ = wrs_block_step(lg_build(p), m, np.full(100_000, v), y_slice,
                                   RngStream(72))
        retained = blocks[:, 0]
        assert abs(retained.mean() - truth) < 3 * retained.std() / np.sqrt(retained.size)

    def test_deterministic_replay(self):
        p = LinearGaussianParams()
        b1, a1 = wrs_block_step(lg_build(p), 1, 0.0, [1.0, 2.0], RngStream(73))
        b2, a2 = wrs_block_step(lg_build(p), 1, 0.0, [1.0, 2.0], RngStream(73))
        assert np.array_equal(b1, b2) and a1 == a2

    def test_window_index_validates(self):
        with pytest.raises(ValueError):
            wrs_block_step(lg_build(LinearGaussianParams()), 0, 0.0, [1.0], RngStream(0))


class TestCalibrateWindow:
    def test_sharp_data_calibrates_to_maximal_window(self):
        # strongly informative observations force the full window
        p = LinearGaussianParams(sigma_y=1.0)
        m = lg_build(p)
        y = np.array([5.0, -5.0])
        ref, _ = full_trajectory_rejection(m, y, 20_000, RngStream(80))
        plan = calibrate_window(m, y, 5000, ref, w_max=3, rng=RngStream(81))
        assert plan.w == 3
        assert plan.calibration.max_abs_z <= 2.0
        assert [rec.w for rec in plan.history] == [1, 2, 3]
        assert plan.history[0].max_abs_z > 2.0

    def test_gentle_lg_data_calibrates_small(self):
        p = LinearGaussianParams()
        m = lg_build(p)
        for seed in (312, 347, 317):
            _, y = simulate(m, 6, RngStream(seed))
            ref, _ = full_trajectory_rejection(m, y, 20_000, RngStream(10 * seed))
            plan = calibrate_window(m, y, 5000, ref, w_max=8, rng=RngStream(100 * seed))
            assert plan.w <= 5

    def test_exhaustion_reports_worst_index(self):
        p = LinearGaussianParams(sigma_y=1.0)
        m = lg_build(p)
        y = np.array([5.0, -5.0])
        ref, _ = full_trajectory_rejection(m, y, 20_000, RngStream(82))
        with pytest.raises(CalibrationError) as err:
            calibrate_window(m, y, 5000, ref, w_max=1, rng=RngStream(83))
        assert err.value.failing_index in (0, 1, 2)
        assert abs(err.value.z_score) > 2.0
        assert len(err.value.history) == 1

    def test_reference_length_checked(self):
        p = LinearGaussianParams()
        ref = Ensemble(np.zeros((10, 3)), np.zeros(10), "iid")
        with pytest.raises(ValueError):
            calibrate_window(lg_build(p), np.ones(5), 100, ref, rng=RngStream(0))

    def test_window_plan_validates(self):
        with pytest.raises(ValueError):
            WindowPlan(w=0)
