"""Windowed rejection sampling from the joint smoothing posterior.

Exact rejection sampling of a whole trajectory is impractical beyond short
series because the acceptance probability is a product over all observations.
The windowed sampler instead rejection-samples blocks of ``w`` consecutive
states, slides the window forward one index at a time keeping the leading
coordinate, and keeps the entire final block.  Observations more than ``w-1``
steps ahead of a coordinate are ignored for that coordinate, which is the
approximation; the output is otherwise an iid sample.

Window length is a tuning parameter.  :func:`calibrate_window` reproduces the
usual tuning procedure: starting from ``w=1``, grow the window until every
marginal mean agrees with an exact reference sample to within two standard
errors.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import Ensemble, ModelSpec, RunReport, SamplerError, summarize_ensemble
from .rejection import DEFAULT_MAX_ATTEMPTS, _window_rejection, full_trajectory_rejection
from .rng import ParticleStreams, RngStream

__all__ = [
    "WindowPlan",
    "CalibrationRecord",
    "CalibrationError",
    "wrs_run",
    "wrs_block_step",
    "calibrate_window",
]


class CalibrationError(SamplerError):
    """No window length up to ``w_max`` matched the reference sample."""

    def __init__(self, message, failing_index, z_score, history):
        super().__init__(message)
        self.failing_index = failing_index
        self.z_score = z_score
        self.history = history


@dataclass(frozen=True)
class CalibrationRecord:
    """Marginal-mean comparison of one window length against the reference."""

    w: int
    reference_means: np.ndarray
    sample_means: np.ndarray
    sample_sds: np.ndarray
    z_scores: np.ndarray
    mean_attempts: float

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.z_scores)))


@dataclass(frozen=True)
class WindowPlan:
    """Chosen window length plus the calibration evidence behind it."""

    w: int
    calibration: Optional[CalibrationRecord] = None
    history: tuple = ()

    def __post_init__(self):
        if self.w < 1:
            raise ValueError("window length must be at least 1")


def wrs_run(model: ModelSpec, y, w: int, N: int, rng: RngStream,
            max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """N iid draws from the windowed-rejection approximation to the
    posterior of ``x_{0:n}`` given ``y_{1:n}``.

    The first window samples ``x_{0:w-1}`` given ``y_{1:w-1}`` and keeps
    ``x_0``; window ``m`` samples ``x_{m:m+w-1}`` given the kept ``x_{m-1}``
    and ``y_{m:m+w-1}`` and keeps ``x_m``; the final window is kept whole.
    With ``w >= n+1`` the run reduces to one exact full-trajectory pass.

    Returns ``(ensemble, report)``; the report carries per-window mean
    attempt counts under ``window_starts``/``window_mean_attempts``.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    if n < 1:
        raise ValueError("need at least one observation")
    if w < 1:
        raise ValueError("window length must be at least 1")
    t0 = time.perf_counter()
    if w >= n + 1:
        ensemble, attempts = full_trajectory_rejection(model, y, N, rng, max_attempts)
        report = summarize_ensemble(ensemble)
        report.window_starts = np.array([0])
        report.window_mean_attempts = np.array([attempts.mean()])
        report.wall_seconds = time.perf_counter() - t0
        report.seed = rng.seed
        return ensemble, report

    streams = ParticleStreams(rng, N)
    traj = np.empty((N, n + 1))
    starts = np.arange(0, n - w + 2)
    mean_attempts = np.empty(starts.size)

    blocks, attempts = _window_rejection(
        model, streams, None, 0, w, range(1, w), y, max_attempts, window=0)
    traj[:, 0] = blocks[:, 0]
    mean_attempts[0] = attempts.mean()

    prev = blocks[:, 0]
    last = n - w + 1
    for m in range(1, last + 1):
        blocks, attempts = _window_rejection(
            model, streams, prev, m, w, range(m, m + w), y, max_attempts, window=m)
        mean_attempts[m] = attempts.mean()
        if m < last:
            traj[:, m] = blocks[:, 0]
            prev = blocks[:, 0]
        else:
            traj[:, m:] = blocks

    ensemble = Ensemble(traj, np.zeros(N), "iid")
    report = summarize_ensemble(ensemble)
    report.window_starts = starts
    report.window_mean_attempts = mean_attempts
    report.wall_seconds = time.perf_counter() - t0
    report.seed = rng.seed
    return ensemble, report


def wrs_block_step(model: ModelSpec, m: int, x_prev, y_slice, rng: RngStream,
                   max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """One accepted window block ``x_{m:m+w-1}`` given ``x_{m-1}``.

    ``y_slice`` holds the observations at indices ``m .. m+w-1``.  ``x_prev``
    may be a scalar (one block) or an array (one block per entry, each on its
    own stream).  Returns ``(block, attempts)``.
    """
    if m < 1:
        raise ValueError("block steps start at window index 1")
    y_slice = np.asarray(y_slice, dtype=np.float64)
    w = y_slice.size
    if w < 1:
        raise ValueError("empty window")
    scalar = np.ndim(x_prev) == 0
    prev = np.atleast_1d(np.asarray(x_prev, dtype=np.float64))
    # embed the slice where the window engine expects observation i at y[i-1]
    y_global = np.empty(m - 1 + w)
    y_global[m - 1:] = y_slice
    streams = ParticleStreams(rng, prev.size)
    blocks, attempts = _window_rejection(
        model, streams, prev, m, w, range(m, m + w), y_global, max_attempts, window=m)
    if scalar:
        return blocks[0], int(attempts[0])
    return blocks, attempts


def calibrate_window(model: ModelSpec, y, N: int, reference: Ensemble,
                     w_max: int = 25, rng: RngStream = RngStream(0),
                     max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> WindowPlan:
    """Smallest window length whose marginal means match an exact reference.

    For each candidate ``w`` starting at 1, draws a windowed sample of size
    ``N`` and accepts ``w`` when every reference mean lies inside the
    two-standard-error band of the corresponding sample mean.  ``reference``
    must be an exact (full-trajectory rejection) sample on the same data.

    Raises :class:`CalibrationError` with the worst index and z-score when
    ``w_max`` is exhausted.
    """
    y = np.asarray(y, dtype=np.float64)
    ref_w = reference.normalized_weights()
    ref_means = ref_w @ reference.trajectories
    if reference.length != y.size:
        raise ValueError("reference ensemble does not match the observations")
    history = []
    for w in range(1, w_max + 1):
        ensemble, report = wrs_run(model, y, w, N, rng.substream(w), max_attempts)
        t = ensemble.trajectories
        means = t.mean(axis=0)
        sds = t.std(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            z = (means - ref_means) / (sds / np.sqrt(N))
        z = np.where(means == ref_means, 0.0, z)
        record = CalibrationRecord(
            w=w, reference_means=ref_means, sample_means=means, sample_sds=sds,
            z_scores=z, mean_attempts=float(report.window_mean_attempts.mean()))
        history.append(record)
        if record.max_abs_z <= 2.0:
            return WindowPlan(w=w, calibration=record, history=tuple(history))
    worst = int(np.argmax(np.abs(history[-1].z_scores)))
    raise CalibrationError(
        f"no window length up to {w_max} matched the reference "
        f"(worst index {worst}, z={history[-1].z_scores[worst]:.2f})",
        failing_index=worst, z_score=float(history[-1].z_scores[worst]),
        history=tuple(history))
