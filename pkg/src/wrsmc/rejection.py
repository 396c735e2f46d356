"""Rejection sampling: a generic accept/reject loop and exact draws from
the joint smoothing posterior of a hidden Markov model.

The exact sampler proposes whole trajectories from the prior chain and
accepts with log-probability ``sum_i [loglik(i, y_i, x_i) - logbound(i, y_i)]``,
which is nonpositive by the bound contract of :class:`~wrsmc.core.ModelSpec`.
Acceptance is exact but its probability decays geometrically with the number
of observations, so this is only practical for short windows; the windowed
sampler in :mod:`wrsmc.wrs` slides such windows along the trajectory.

All samplers draw each particle from its own counter-based stream, so results
do not depend on how the accept/reject rounds are batched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    AcceptanceTooRareError,
    BoundViolationError,
    Ensemble,
    ModelSpec,
)
from .rng import LiveDraws, ParticleStreams, PrefetchedDraws, RngStream

__all__ = [
    "RejectionOutcome",
    "DEFAULT_MAX_ATTEMPTS",
    "BOUND_TOLERANCE",
    "rejection_sample",
    "rejection_sample_batch",
    "full_trajectory_rejection",
]

DEFAULT_MAX_ATTEMPTS = 10**8

# Log-space slack absorbing floating-point noise in supremum computations.
BOUND_TOLERANCE = 1e-9


@dataclass(frozen=True)
class RejectionOutcome:
    """An accepted draw and the number of proposals it took."""

    draw: object
    attempts: int


def rejection_sample_batch(log_ratio, proposal, rng: RngStream, size: int,
                           max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """``size`` independent accepted draws from ``pi propto h``.

    ``proposal(ctx)`` must return one proposed state per lane of the draw
    context; ``log_ratio(x)`` evaluates ``log h(x) - log M - log q(x)``
    elementwise and must be <= 0 wherever ``q`` proposes.

    Returns ``(draws, attempts)`` arrays of length ``size``.
    """
    streams = ParticleStreams(rng, size)
    draws = np.empty(size)
    attempts = np.zeros(size, dtype=np.int64)
    active = np.arange(size)
    n_rounds = 0
    while active.size:
        n_rounds += 1
        attempts[active] += 1
        x = np.asarray(proposal(LiveDraws(streams, active)), dtype=np.float64)
        ratio = np.asarray(log_ratio(x), dtype=np.float64)
        worst = float(np.max(ratio))
        if worst > BOUND_TOLERANCE:
            raise BoundViolationError(
                f"bound violated: log acceptance ratio {worst:.3e} > 0")
        with np.errstate(divide="ignore"):
            accept = np.log(streams.random(active)) <= ratio
        draws[active[accept]] = x[accept]
        active = active[~accept]
        if active.size and n_rounds >= max_attempts:
            raise AcceptanceTooRareError(
                f"acceptance too rare: {active.size} of {size} draws still "
                f"pending after {n_rounds} attempts", attempts=n_rounds)
    return draws, attempts


def rejection_sample(log_ratio, proposal, rng: RngStream,
                     max_attempts: int = DEFAULT_MAX_ATTEMPTS) -> RejectionOutcome:
    """One exact draw from ``pi propto h`` by accept/reject."""
    draws, attempts = rejection_sample_batch(log_ratio, proposal, rng, 1, max_attempts)
    return RejectionOutcome(draw=float(draws[0]), attempts=int(attempts[0]))


def window_log_bound(model: ModelSpec, y, lik_indices) -> float:
    """Sum of per-observation log bounds over the given time indices."""
    return float(sum(model.measurement_logbound(i, y[i - 1]) for i in lik_indices))


# Attempts per lane per round follow a fixed doubling schedule up to this
# cap.  The schedule must not depend on the active set, so that the words a
# lane consumes are a function of its own acceptance history alone.
_MAX_ATTEMPT_BATCH = 64


def _window_rejection(model: ModelSpec, streams: ParticleStreams, x_prev,
                      first_index: int, n_states: int, lik_indices, y,
                      max_attempts: int, window=None):
    """Vectorized rejection sampling of one state block per particle.

    Proposes the block ``x_{first_index : first_index+n_states-1}`` from the
    prior chain (from ``x_prev`` per lane, or from the initial law when
    ``x_prev`` is None) and accepts against the product of measurement
    likelihood bounds at ``lik_indices``.  Every attempt consumes a fixed
    budget of ``n_states + 1`` stream words per lane (one per state plus the
    acceptance uniform); attempts are evaluated in batches, and a lane keeps
    its first accepted attempt, which is the same draw a one-attempt-at-a-time
    loop would return.

    Returns ``(blocks, attempts)`` with shapes ``(N, n_states)`` and ``(N,)``.
    """
    n_lanes = streams.n
    log_bound = window_log_bound(model, y, lik_indices)
    if not np.isfinite(log_bound):
        raise BoundViolationError("measurement bound is not finite over the window")
    budget = n_states + 1
    blocks = np.empty((n_lanes, n_states))
    attempts = np.zeros(n_lanes, dtype=np.int64)
    active = np.arange(n_lanes)
    prev = None if x_prev is None else np.asarray(x_prev, dtype=np.float64)
    batch = 1
    spent = 0  # attempts consumed so far by every still-active lane
    while active.size:
        k = min(batch, max_attempts - spent)
        if k == 0:
            raise AcceptanceTooRareError(
                f"acceptance too rare: {active.size} of {n_lanes} particles "
                f"still pending after {spent} attempts"
                + (f" in window {window}" if window is not None else ""),
                attempts=spent, window=window)
        n_act = active.size
        words = streams.draw_words(active, k * budget).reshape(n_act * k, budget)
        ctx = PrefetchedDraws(words)
        states = np.empty((n_act * k, n_states))
        if prev is None:
            states[:, 0] = model.initial_sampler(ctx)
        else:
            states[:, 0] = model.transition_sampler(first_index, np.repeat(prev, k), ctx)
        for j in range(1, n_states):
            states[:, j] = model.transition_sampler(first_index + j, states[:, j - 1], ctx)
        ratio = np.zeros(n_act * k)
        for i in lik_indices:
            ratio = ratio + model.measurement_loglik(i, y[i - 1], states[:, i - first_index])
        ratio -= log_bound
        worst = float(np.max(ratio))
        if worst > BOUND_TOLERANCE:
            raise BoundViolationError(
                f"bound violated: log acceptance ratio {worst:.3e} > 0"
                + (f" in window {window}" if window is not None else ""))
        with np.errstate(divide="ignore"):
            accept = (np.log(ctx.random()) <= ratio).reshape(n_act, k)
        hit = accept.any(axis=1)
        slot = accept.argmax(axis=1)
        done = active[hit]
        attempts[done] = spent + slot[hit] + 1
        blocks[done] = states.reshape(n_act, k, n_states)[hit, slot[hit]]
        active = active[~hit]
        if prev is not None:
            prev = prev[~hit]
        spent += k
        attempts[active] = spent
        batch = min(2 * batch, _MAX_ATTEMPT_BATCH)
    return blocks, attempts


def full_trajectory_rejection(model: ModelSpec, y, N: int, rng: RngStream,
                              max_attempts: int = DEFAULT_MAX_ATTEMPTS):
    """N iid exact draws from the posterior of ``x_{0:n}`` given ``y_{1:n}``.

    The proposal is the prior chain and the envelope constant is the product
    of the per-observation likelihood bounds.  ``y`` may be empty, in which
    case the draws come from the prior itself.

    Returns ``(ensemble, attempts)``; the ensemble is tagged ``iid`` and the
    per-particle attempt counts measure the acceptance probability.
    """
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    streams = ParticleStreams(rng, N)
    blocks, attempts = _window_rejection(
        model, streams, None, 0, n + 1, range(1, n + 1), y, max_attempts, window="full")
    return Ensemble(blocks, np.zeros(N), "iid"), attempts
