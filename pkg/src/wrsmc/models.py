"""Benchmark state space models and a data simulator.

Four classic one-dimensional models, each packaged as a :class:`ModelSpec`
with its measurement-likelihood supremum so it can be used with the
rejection-based samplers as well as with the particle filters:

* linear-Gaussian AR(1) with linear-Gaussian observations,
* stochastic volatility (log-variance AR(1), scale-mixture observations),
* a heavily nonlinear benchmark with quadratic observations,
* a dynamic tobit model whose observations are censored at zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .core import ModelSpec
from .rng import LiveDraws, ParticleStreams, RngStream

__all__ = [
    "LinearGaussianParams",
    "StochVolParams",
    "NonlinearParams",
    "TobitParams",
    "lg_build",
    "sv_build",
    "nl_build",
    "tobit_build",
    "simulate",
    "simulate_batch",
    "MODEL_BUILDERS",
]

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


@dataclass(frozen=True)
class LinearGaussianParams:
    """x_0 ~ N(mu0, sigma0^2), x_i = a x_{i-1} + sigma_x eps_i,
    y_i = b x_i + sigma_y nu_i."""

    mu0: float = 3.0
    sigma0: float = 2.0
    a: float = 0.9
    b: float = 1.2
    sigma_x: float = 3.0
    sigma_y: float = 2.3

    def __post_init__(self):
        if min(self.sigma0, self.sigma_x, self.sigma_y) <= 0:
            raise ValueError("scale parameters must be strictly positive")


@dataclass(frozen=True)
class StochVolParams:
    """x_0 ~ N(0, sigma^2/(1-alpha^2)), x_i = alpha x_{i-1} + sigma eps_i,
    y_i = beta exp(x_i/2) nu_i."""

    alpha: float = 0.91
    sigma: float = 1.0
    beta: float = 0.5

    def __post_init__(self):
        if abs(self.alpha) >= 1:
            raise ValueError("|alpha| < 1 required for a stationary initial law")
        if self.sigma <= 0 or self.beta <= 0:
            raise ValueError("sigma and beta must be strictly positive")


@dataclass(frozen=True)
class NonlinearParams:
    """x_0 ~ N(mu, sigma2); the transition mean is
    0.5 x + 25 x/(1+x^2) + 8 cos(1.2 t); y_i = 0.05 x_i^2 + nu_i."""

    mu: float = 0.0
    sigma2: float = 5.0
    sigma_x2: float = 10.0
    sigma_y2: float = 10.0

    def __post_init__(self):
        if min(self.sigma2, self.sigma_x2, self.sigma_y2) <= 0:
            raise ValueError("variances must be strictly positive")


@dataclass(frozen=True)
class TobitParams:
    """AR(1) latent chain observed through y_i = x_i + sigma_y nu_i,
    reported as z_i = max(0, y_i)."""

    phi: float = 0.99
    sigma_x2: float = 0.05
    sigma_y2: float = 0.30

    def __post_init__(self):
        if abs(self.phi) >= 1:
            raise ValueError("|phi| < 1 required for a stationary initial law")
        if self.sigma_x2 <= 0 or self.sigma_y2 <= 0:
            raise ValueError("variances must be strictly positive")


def _gauss_loglik(resid, sigma):
    return -0.5 * (resid / sigma) ** 2 - math.log(sigma) - _LOG_SQRT_2PI


def lg_build(p: LinearGaussianParams) -> ModelSpec:
    """Linear-Gaussian model.  The measurement likelihood peaks at
    ``x = y/b``, where the density equals ``1/(sigma_y sqrt(2 pi))``."""
    if p.b == 0:
        raise ValueError("b must be nonzero: the measurement bound is undefined at b=0")
    bound = -math.log(p.sigma_y) - _LOG_SQRT_2PI

    def initial(ctx):
        return p.mu0 + p.sigma0 * ctx.standard_normal()

    def transition(i, x_prev, ctx):
        return p.a * x_prev + p.sigma_x * ctx.standard_normal()

    def loglik(i, y, x):
        return _gauss_loglik(y - p.b * np.asarray(x), p.sigma_y)

    def emit(i, x, ctx):
        return p.b * x + p.sigma_y * ctx.standard_normal()

    return ModelSpec(initial, transition, loglik, lambda i, y: bound, emit)


def sv_build(p: StochVolParams) -> ModelSpec:
    """Stochastic volatility model.  The likelihood of ``y`` as a function
    of the log-variance state peaks at ``x = log(y^2/beta^2)``; it is
    unbounded when ``y`` is exactly zero."""
    sd0 = p.sigma / math.sqrt(1.0 - p.alpha**2)
    log_beta = math.log(p.beta)

    def initial(ctx):
        return sd0 * ctx.standard_normal()

    def transition(i, x_prev, ctx):
        return p.alpha * x_prev + p.sigma * ctx.standard_normal()

    def loglik(i, y, x):
        x = np.asarray(x)
        return -0.5 * x - log_beta - _LOG_SQRT_2PI - y * y * np.exp(-x) / (2.0 * p.beta**2)

    def logbound(i, y):
        if y == 0:
            raise ValueError("measurement bound infinite at y=0")
        return -math.log(abs(y)) - _LOG_SQRT_2PI - 0.5

    def emit(i, x, ctx):
        return p.beta * np.exp(x / 2.0) * ctx.standard_normal()

    return ModelSpec(initial, transition, loglik, logbound, emit)


def nl_build(p: NonlinearParams) -> ModelSpec:
    """Nonlinear benchmark.  For ``y < 0`` the likelihood peaks at ``x = 0``,
    otherwise at ``x = +-sqrt(y/0.05)`` where the quadratic mean hits ``y``."""
    sigma_y = math.sqrt(p.sigma_y2)
    sigma_x = math.sqrt(p.sigma_x2)
    peak = -math.log(sigma_y) - _LOG_SQRT_2PI

    def drift(x, t):
        x = np.asarray(x)
        return 0.5 * x + 25.0 * x / (1.0 + x * x) + 8.0 * math.cos(1.2 * t)

    def initial(ctx):
        return p.mu + math.sqrt(p.sigma2) * ctx.standard_normal()

    def transition(i, x_prev, ctx):
        # drawing x_i from x_{i-1} uses time argument i-1
        return drift(x_prev, i - 1) + sigma_x * ctx.standard_normal()

    def loglik(i, y, x):
        x = np.asarray(x)
        return _gauss_loglik(y - 0.05 * x * x, sigma_y)

    def logbound(i, y):
        if y < 0:
            return float(_gauss_loglik(y, sigma_y))
        return peak

    def emit(i, x, ctx):
        return 0.05 * x * x + sigma_y * ctx.standard_normal()

    return ModelSpec(initial, transition, loglik, logbound, emit)


def tobit_build(p: TobitParams) -> ModelSpec:
    """Dynamic tobit model.  Positive observations carry the usual Gaussian
    density; a censored observation ``z = 0`` contributes the probability
    ``Phi(-x/sigma_y)`` that the latent measurement fell below zero, which is
    bounded by one."""
    sigma_x = math.sqrt(p.sigma_x2)
    sigma_y = math.sqrt(p.sigma_y2)
    sd0 = sigma_x / math.sqrt(1.0 - p.phi**2)
    peak = -math.log(sigma_y) - _LOG_SQRT_2PI

    def initial(ctx):
        return sd0 * ctx.standard_normal()

    def transition(i, x_prev, ctx):
        return p.phi * x_prev + sigma_x * ctx.standard_normal()

    def loglik(i, z, x):
        if z < 0:
            raise ValueError("tobit observation negative")
        x = np.asarray(x)
        if z == 0:
            return norm.logcdf(-x / sigma_y)
        return _gauss_loglik(z - x, sigma_y)

    def logbound(i, z):
        if z < 0:
            raise ValueError("tobit observation negative")
        return 0.0 if z == 0 else peak

    def emit(i, x, ctx):
        return np.maximum(0.0, x + sigma_y * ctx.standard_normal())

    return ModelSpec(initial, transition, loglik, logbound, emit)


MODEL_BUILDERS = {
    "lg": (LinearGaussianParams, lg_build),
    "sv": (StochVolParams, sv_build),
    "nl": (NonlinearParams, nl_build),
    "tobit": (TobitParams, tobit_build),
}


def simulate_batch(model: ModelSpec, n: int, rng: RngStream, replicates: int):
    """Draw ``replicates`` independent paths of length ``n`` with their
    observations.  Returns ``(x, y)`` with shapes ``(k, n+1)`` and ``(k, n)``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    if model.measurement_sampler is None:
        raise ValueError("model has no measurement sampler; cannot simulate data")
    streams = ParticleStreams(rng, replicates)
    ctx = LiveDraws(streams, np.arange(replicates))
    x = np.empty((replicates, n + 1))
    y = np.empty((replicates, n))
    x[:, 0] = model.initial_sampler(ctx)
    for i in range(1, n + 1):
        x[:, i] = model.transition_sampler(i, x[:, i - 1], ctx)
        y[:, i - 1] = model.measurement_sampler(i, x[:, i], ctx)
    return x, y


def simulate(model: ModelSpec, n: int, rng: RngStream):
    """One latent trajectory ``x_{0:n}`` and observations ``y_{1:n}``."""
    x, y = simulate_batch(model, n, rng, 1)
    return x[0], y[0]
