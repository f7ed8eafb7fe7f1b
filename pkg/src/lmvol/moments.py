"""Second moment of the volatility: Volterra solver, resolvent, limits.

The mean of V is exactly sigma and is never computed here.  The second
moment obeys ``f(t) = sigma^2 + beta^2 int_0^t K^2(t-s) f(s) ds``, solved by
forward substitution of the trapezoid rule on a uniform grid.  The lag-0 value
of the convolution weight is ``K^2(h/2)`` since K has no value at 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    KERNEL_NOT_L2,
    MARGIN_AT_LEAST_ONE,
    UNDETERMINED,
    ConfigError,
    Divergent,
    Finite,
    GridError,
    NonStationary,
    Stationary,
    StationarityError,
)
from .kernel import DEFAULT_STEP, Kernel, l2_norm_sq
from .measures import PowerLaw, SignedMeasure

DEFAULT_EPS = 1e-9
NEAR_CRITICAL = 1e-6


class NearCriticalWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ModelConfig:
    """Model parameters plus the numerical defaults for kernel integrals.

    ``beta = 0`` is accepted as a degenerate mode (no feedback).
    """

    sigma: float
    beta: float
    lam: SignedMeasure
    kappa: SignedMeasure
    mu: float = 0.0
    horizon: float | None = None
    step: float = DEFAULT_STEP
    balance_tol: float | None = None
    eps: float = DEFAULT_EPS

    def __post_init__(self):
        if self.sigma == 0:
            raise ConfigError("sigma must be nonzero", "moments.ModelConfig")
        if not math.isfinite(self.beta):
            raise ConfigError("beta must be finite", "moments.ModelConfig")
        # builds and balance-checks the kernel eagerly
        self.kernel

    @property
    def tau(self) -> float:
        return self.lam.tau

    @cached_property
    def kernel(self) -> Kernel:
        return Kernel(self.lam, self.kappa, self.balance_tol)

    @cached_property
    def l2(self):
        return l2_norm_sq(self.kernel, self.horizon, self.step)

    @cached_property
    def verdict(self):
        return stationarity_margin(self)

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "beta": self.beta,
            "mu": self.mu,
            "tau": self.tau,
            "lambda": self.lam.to_dict(),
            "kappa": self.kappa.to_dict(),
            "horizon": self.horizon,
            "step": self.step,
        }


def power_law_model(alpha: float, sigma: float = 1.0, beta: float = 0.3, c: float = 1.0, mu: float = 0.0, **kw) -> ModelConfig:
    """kappa(ds) = c (1+s)^(-1-alpha) ds balanced by one atom at 0."""
    dens = PowerLaw(c, alpha)
    kappa = SignedMeasure.half_line(density=dens)
    lam = SignedMeasure.delay(0.0, [(0.0, dens.mass())])
    return ModelConfig(sigma, beta, lam, kappa, mu=mu, **kw)


def stationarity_margin(cfg: ModelConfig, eps: float | None = None):
    """m = beta^2 int K^2; Stationary iff K is in L2 and m < 1 - eps."""
    eps = cfg.eps if eps is None else eps
    if cfg.beta == 0:
        return Stationary(0.0)
    norm = cfg.l2
    if isinstance(norm, Divergent):
        return NonStationary(KERNEL_NOT_L2)
    if not isinstance(norm, Finite):
        return NonStationary(UNDETERMINED)
    m = cfg.beta**2 * norm.value
    near = abs(m - 1.0) <= NEAR_CRITICAL
    if near:
        warnings.warn(f"stationarity margin {m:.9f} is within {NEAR_CRITICAL} of 1", NearCriticalWarning, stacklevel=2)
    if m < 1.0 - eps:
        return Stationary(m, near)
    return NonStationary(MARGIN_AT_LEAST_ONE, m)


def limit_second_moment(cfg: ModelConfig) -> float:
    verdict = cfg.verdict
    if not isinstance(verdict, Stationary):
        raise StationarityError(verdict, "moments.limit_second_moment")
    return cfg.sigma**2 / (1.0 - verdict.margin)


@dataclass(frozen=True)
class MomentSolution:
    grid: np.ndarray
    values: np.ndarray
    verdict: object
    limit: float | None = None
    resolvent: np.ndarray | None = field(default=None, repr=False)

    @property
    def h(self) -> float:
        return float(self.grid[1] - self.grid[0])

    @property
    def T(self) -> float:
        return float(self.grid[-1])


def _grid_size(T: float, h: float) -> int:
    if not (T > 0 and h > 0):
        raise GridError("T and h must be positive", "moments")
    n = int(round(T / h))
    if n < 1 or abs(n * h - T) > 1e-9 * max(T, 1.0):
        raise GridError(f"step {h} does not divide horizon {T}", "moments")
    return n


def _squared_lags(cfg: ModelConfig, n: int, h: float):
    k = cfg.kernel
    lags = np.arange(1, n + 1) * h
    return k.eval(lags) ** 2, float(k.eval(0.5 * h)) ** 2


def solve_second_moment(cfg: ModelConfig, T: float, h: float) -> MomentSolution:
    """E[V^2] on the grid 0, h, ..., T."""
    n = _grid_size(T, h)
    s2 = cfg.sigma**2
    b2 = cfg.beta**2
    f = np.full(n + 1, s2)
    if b2 != 0:
        k2, k0 = _squared_lags(cfg, n, h)
        rev = k2[::-1]
        diag = 1.0 - 0.5 * b2 * h * k0
        for i in range(1, n + 1):
            acc = 0.5 * k2[i - 1] * f[0] + np.dot(rev[n - i + 1 : n], f[1:i])
            f[i] = (s2 + b2 * h * acc) / diag
    verdict = cfg.verdict
    limit = s2 / (1.0 - verdict.margin) if isinstance(verdict, Stationary) else None
    return MomentSolution(np.arange(n + 1) * h, f, verdict, limit)


def resolvent(cfg: ModelConfig, T: float, h: float) -> np.ndarray:
    """Grid values of r = beta^2 K^2 + beta^2 K^2 * r on 0, h, ..., T."""
    n = _grid_size(T, h)
    b2 = cfg.beta**2
    r = np.zeros(n + 1)
    if b2 == 0:
        return r
    k2, k0 = _squared_lags(cfg, n, h)
    rev = k2[::-1]
    diag = 1.0 - 0.5 * b2 * h * k0
    r[0] = b2 * k0
    for i in range(1, n + 1):
        acc = 0.5 * k2[i - 1] * r[0] + np.dot(rev[n - i + 1 : n], r[1:i])
        r[i] = (b2 * k2[i - 1] + b2 * h * acc) / diag
    return r


def cumulative_trapezoid(values: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros_like(values)
    out[1:] = np.cumsum(0.5 * h * (values[1:] + values[:-1]))
    return out


def covariance_surface(cfg: ModelConfig, t: float, delta: float, h: float, solution: MomentSolution | None = None) -> float:
    """Cov(V(t), V(t+delta)) = beta^2 int_0^t K(t-s) K(t-s+delta) E[V^2(s)] ds."""
    if delta < 0:
        raise GridError("delta must be >= 0", "moments.covariance_surface")
    if t == 0 or cfg.beta == 0:
        return 0.0
    n = _grid_size(t, h)
    if solution is None:
        solution = solve_second_moment(cfg, t, h)
    elif abs(solution.h - h) > 1e-12 or solution.T + 1e-9 < t:
        raise GridError("solution grid does not cover [0, t] at step h", "moments.covariance_surface")
    f = solution.values[: n + 1]
    k = cfg.kernel
    lags = np.arange(n, 0, -1) * h  # lag t - s_j for j = 0..n-1
    w = k.eval(lags) * k.eval(lags + delta)
    w0 = float(k.eval(0.5 * h) * k.eval(0.5 * h + delta))
    acc = 0.5 * w[0] * f[0] + np.dot(w[1:], f[1:n]) + 0.5 * w0 * f[n]
    return float(cfg.beta**2 * h * acc)
