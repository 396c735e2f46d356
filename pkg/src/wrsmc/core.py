"""Hidden Markov model abstraction, weighted ensembles, and shared statistics.

A model is a bundle of vectorized densities and samplers (:class:`ModelSpec`);
a trajectory is a 1-d float array ``x[0..n]``; an ensemble holds ``N``
trajectories with log weights.  Everything downstream (rejection samplers,
particle filters, diagnostics) works through these types.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = [
    "ModelSpec",
    "Ensemble",
    "RunReport",
    "SamplerError",
    "BoundViolationError",
    "AcceptanceTooRareError",
    "DegenerateWeightsError",
    "normalize_log_weights",
    "ensemble_marginal_mean",
    "ensemble_distinct_fraction",
    "weighted_mean_and_se",
    "summarize_ensemble",
]


class SamplerError(Exception):
    """Base class for sampling failures."""


class BoundViolationError(SamplerError):
    """The claimed envelope was not an upper bound on the target."""


class AcceptanceTooRareError(SamplerError):
    """Rejection sampling exceeded the attempt budget."""

    def __init__(self, message, attempts, window=None):
        super().__init__(message)
        self.attempts = attempts
        self.window = window


class DegenerateWeightsError(SamplerError):
    """All importance weights are zero."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


@dataclass(frozen=True)
class ModelSpec:
    """A hidden Markov model as densities, samplers, and likelihood bounds.

    The samplers draw from the initial law ``pi(x_0)`` and the transition law
    ``pi(x_i | x_{i-1})``; ``measurement_loglik`` evaluates
    ``log pi(y_i | x_i)`` and ``measurement_logbound`` an upper bound on its
    supremum over ``x_i``.  All state functions are vectorized: ``x`` values
    are 1-d arrays over particles, and samplers receive a draw context with
    ``.size``, ``.standard_normal()`` and ``.random()`` producing one variate
    per particle per call.  Samplers must be pure functions of their draw
    context so evaluation can be batched or run concurrently.

    Attributes
    ----------
    initial_sampler : callable(ctx) -> array
    transition_sampler : callable(i, x_prev, ctx) -> array
        Draws ``x_i`` given ``x_{i-1}``; ``i >= 1`` is the time index.
    measurement_loglik : callable(i, y_i, x) -> array
    measurement_logbound : callable(i, y_i) -> float
        Must satisfy ``measurement_loglik(i, y, x) <= measurement_logbound(i, y)``
        for every ``x``.
    measurement_sampler : callable(i, x, ctx) -> array, optional
        Emits observations; required only for simulating data.
    state_dim : int
        Dimension of one state (1 for every shipped model).
    """

    initial_sampler: Callable
    transition_sampler: Callable
    measurement_loglik: Callable
    measurement_logbound: Callable
    measurement_sampler: Optional[Callable] = None
    state_dim: int = 1


@dataclass(frozen=True)
class Ensemble:
    """N trajectories with log weights.

    ``trajectories`` has shape ``(N, n+1)``, row ``j`` holding ``x_{0:n}`` of
    particle ``j``.  ``log_weights`` are unnormalized; all zeros means a
    uniform (iid) ensemble.  ``kind`` tags how the ensemble was produced:
    ``"iid"`` for exact samplers, ``"weighted"`` for importance-weighted
    output, ``"resampled"`` after a resampling pass.
    """

    trajectories: np.ndarray
    log_weights: np.ndarray
    kind: str = "weighted"

    def __post_init__(self):
        t = np.asarray(self.trajectories, dtype=np.float64)
        lw = np.asarray(self.log_weights, dtype=np.float64)
        if t.ndim != 2 or t.shape[0] < 1:
            raise ValueError("trajectories must be a (N, n+1) array with N >= 1")
        if lw.shape != (t.shape[0],):
            raise ValueError("log_weights must have one entry per trajectory")
        if not np.all(np.isfinite(t)):
            raise ValueError("trajectories must be finite")
        if self.kind not in ("iid", "weighted", "resampled"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        object.__setattr__(self, "trajectories", t)
        object.__setattr__(self, "log_weights", lw)

    @property
    def size(self) -> int:
        return self.trajectories.shape[0]

    @property
    def length(self) -> int:
        """Index of the last state, i.e. n."""
        return self.trajectories.shape[1] - 1

    def normalized_weights(self) -> np.ndarray:
        return normalize_log_weights(self.log_weights)


@dataclass
class RunReport:
    """Per-run diagnostics shared by all samplers.

    ``means``/``variances``/``distinct_fractions`` are indexed 0..n.  The
    ESS trace and resample indices are filled by the particle filters, the
    attempt counts by the rejection samplers.
    """

    means: np.ndarray
    variances: np.ndarray
    distinct_fractions: np.ndarray
    ess_trace: Optional[np.ndarray] = None
    resample_indices: list = field(default_factory=list)
    window_starts: Optional[np.ndarray] = None
    window_mean_attempts: Optional[np.ndarray] = None
    wall_seconds: float = 0.0
    seed: Optional[int] = None


def normalize_log_weights(log_weights) -> np.ndarray:
    """Probabilities proportional to ``exp(log_weights)``.

    Uses max subtraction so the largest weight neither under- nor overflows;
    the result sums to one to within 1e-12.  Raises
    :class:`DegenerateWeightsError` when every weight is zero.
    """
    lw = np.asarray(log_weights, dtype=np.float64)
    if lw.size == 0:
        raise ValueError("empty weight vector")
    m = np.max(lw)
    if not np.isfinite(m):
        raise DegenerateWeightsError("all weights zero")
    w = np.exp(lw - m)
    return w / w.sum()


def ensemble_marginal_mean(e: Ensemble, i: int) -> float:
    """Weighted mean of coordinate ``i`` across the ensemble."""
    if not 0 <= i <= e.length:
        raise IndexError(f"index {i} outside 0..{e.length}")
    return float(e.normalized_weights() @ e.trajectories[:, i])


def ensemble_distinct_fraction(e: Ensemble, i: Optional[int] = None) -> float:
    """Fraction of distinct values at index ``i``, or of distinct whole
    trajectories when ``i`` is None.

    Distinctness is exact bitwise equality of the float64 representation.
    """
    if i is None:
        rows = np.ascontiguousarray(e.trajectories).view(np.uint64)
        distinct = np.unique(rows, axis=0).shape[0]
    else:
        if not 0 <= i <= e.length:
            raise IndexError(f"index {i} outside 0..{e.length}")
        col = np.ascontiguousarray(e.trajectories[:, i]).view(np.uint64)
        distinct = np.unique(col).size
    return distinct / e.size


def weighted_mean_and_se(e: Ensemble, i: int):
    """Weighted mean, weighted SD, and standard error at index ``i``.

    The standard error divides by the effective sample size implied by the
    weights (equal to N for uniform weights), so it is usable for both iid
    and importance-weighted ensembles.
    """
    w = e.normalized_weights()
    x = e.trajectories[:, i]
    mean = float(w @ x)
    var = float(w @ (x - mean) ** 2)
    n_eff = 1.0 / float(w @ w)
    return mean, np.sqrt(var), np.sqrt(var / n_eff)


def summarize_ensemble(e: Ensemble) -> RunReport:
    """Per-index means, variances, and distinct fractions."""
    w = e.normalized_weights()
    t = e.trajectories
    means = w @ t
    variances = w @ (t - means) ** 2
    distinct = np.array([ensemble_distinct_fraction(e, i) for i in range(e.length + 1)])
    return RunReport(means=means, variances=variances, distinct_fractions=distinct)
