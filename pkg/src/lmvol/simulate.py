"""Monte Carlo paths of (B, V, X, S) and cross-path estimators.

Euler scheme on the uniform grid ``t_i = i h`` with ``dB_i = sqrt(h) z_i``::

    V_i     = sigma + beta * sum_{j<i} K((i-j) h) V_j dB_j
    X_{i+1} = X_i + V_i dB_i
    S_{i+1} = S_i exp((mu - V_i^2 / 2) h + V_i dB_i)

The convolution is evaluated as ``sum (K((i-j)h) sqrt(h)) * (V_j z_j)`` by the
compiled core in :mod:`lmvol._recursion`.  Path ``p`` draws its normals from
the counter-based stream ``(seed, p)``, so results do not depend on how paths
are split into chunks or across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from ._recursion import volterra_paths
from .errors import ConfigError, GridError
from .moments import ModelConfig, _grid_size

CHUNK = 128


@dataclass(frozen=True)
class SimConfig:
    model: ModelConfig
    T: float
    h: float
    paths: int
    seed: int = 0
    s0: float = 1.0
    stride: int = 1

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError("paths must be >= 1", "simulate.SimConfig")
        if not self.s0 > 0:
            raise ConfigError("s0 must be positive", "simulate.SimConfig")
        if self.stride < 1:
            raise ConfigError("stride must be >= 1", "simulate.SimConfig")
        n = _grid_size(self.T, self.h)
        if n % self.stride:
            raise ConfigError("stride must divide the number of steps", "simulate.SimConfig")

    @property
    def steps(self) -> int:
        return _grid_size(self.T, self.h)


@dataclass(frozen=True)
class PathEnsemble:
    """Recorded paths; arrays have shape (times, paths).

    Times are ``0, stride*h, 2*stride*h, ..., T``.  Brownian increments are
    not stored; :meth:`brownian_increments` regenerates them from the seed.
    """

    grid: np.ndarray
    V: np.ndarray
    X: np.ndarray
    S: np.ndarray
    h: float
    stride: int
    seed: int
    mu: float
    sigma: float

    @property
    def paths(self) -> int:
        return self.V.shape[1]

    def index(self, t: float) -> int:
        dt = self.h * self.stride
        i = int(round(t / dt))
        if i < 0 or i >= len(self.grid) or abs(self.grid[i] - t) > 1e-9 * max(1.0, abs(t)):
            raise GridError(f"time {t} is not on the recorded grid (spacing {dt})", "simulate")
        return i

    def brownian_increments(self, path: int) -> np.ndarray:
        n = (len(self.grid) - 1) * self.stride
        return math.sqrt(self.h) * rng.standard_normals(self.seed, path, n)

    @property
    def R(self) -> np.ndarray:
        """Cumulative return X + mu t."""
        return self.X + self.mu * self.grid[:, None]


def kernel_weights(model: ModelConfig, n: int, h: float) -> np.ndarray:
    """K(m h) sqrt(h) for m = 1..n."""
    lags = np.arange(1, n + 1) * h
    return model.kernel.eval(lags) * math.sqrt(h)


def _run_chunk(sim: SimConfig, w: np.ndarray, first: int, count: int):
    n = sim.steps
    m = sim.model
    z = rng.block(sim.seed, first, count, n)
    V = volterra_paths(float(m.sigma), float(m.beta), w, z, n + 1)
    dB = math.sqrt(sim.h) * z
    VdB = V[:-1] * dB
    X = np.zeros((n + 1, count))
    np.cumsum(VdB, axis=0, out=X[1:])
    logS = np.empty((n + 1, count))
    logS[0] = math.log(sim.s0)
    incr = (m.mu - 0.5 * V[:-1] ** 2) * sim.h + VdB
    np.cumsum(incr, axis=0, out=logS[1:])
    logS[1:] += math.log(sim.s0)
    k = sim.stride
    return V[::k], X[::k], np.exp(logS[::k])


def simulate(sim: SimConfig, threads: int = 1) -> PathEnsemble:
    """Generate the ensemble.  ``threads`` changes speed only, never values."""
    n = sim.steps
    w = kernel_weights(sim.model, n, sim.h) if sim.model.beta != 0 else np.zeros(n)
    rec = n // sim.stride + 1
    V = np.empty((rec, sim.paths))
    X = np.empty_like(V)
    S = np.empty_like(V)
    starts = list(range(0, sim.paths, CHUNK))

    def work(first):
        count = min(CHUNK, sim.paths - first)
        v, x, s = _run_chunk(sim, w, first, count)
        V[:, first : first + count] = v
        X[:, first : first + count] = x
        S[:, first : first + count] = s

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for first in starts:
            work(first)
    grid = np.arange(rec) * sim.h * sim.stride
    m = sim.model
    return PathEnsemble(grid, V, X, S, sim.h, sim.stride, sim.seed, m.mu, m.sigma)


def scheme_second_moment(model: ModelConfig, n: int, h: float) -> np.ndarray:
    """Exact E[V_i^2], i = 0..n, of the Euler recursion itself.

    The innovations are independent of the past, so
    ``E[V_i^2] = sigma^2 + beta^2 sum_{j<i} w_{i-1-j}^2 E[V_j^2]``.
    """
    s2 = model.sigma**2
    f = np.full(n + 1, s2)
    if model.beta == 0 or n == 0:
        return f
    w2 = kernel_weights(model, n, h) ** 2
    rev = w2[::-1]
    b2 = model.beta**2
    for i in range(1, n + 1):
        f[i] = s2 + b2 * np.dot(rev[n - i :], f[:i])
    return f


def scheme_cov(model: ModelConfig, i: int, k: int, h: float, f: np.ndarray) -> float:
    """Exact Cov(V_i, V_{i+k}) of the Euler recursion, given E[V_j^2] in ``f``."""
    if model.beta == 0 or i == 0:
        return 0.0
    w = kernel_weights(model, i + k, h)
    j = np.arange(i)
    return float(model.beta**2 * np.sum(w[i - 1 - j] * w[i + k - 1 - j] * f[:i]))


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    var: float
    se_mean: float
    se_var: float
    n: int
    degenerate: bool = False


@dataclass(frozen=True)
class CovEstimate:
    cov: float
    se: float
    n: int


@dataclass(frozen=True)
class CorrEstimate:
    corr: float
    se: float
    n: int
    degenerate: bool = False


def sample_moments(x: np.ndarray) -> MomentEstimate:
    n = len(x)
    mean = float(np.mean(x))
    if n < 2:
        return MomentEstimate(mean, 0.0, math.nan, math.nan, n, degenerate=True)
    d = x - mean
    m2 = float(np.mean(d**2))
    m4 = float(np.mean(d**4))
    var = m2 * n / (n - 1)
    se_mean = math.sqrt(var / n)
    se_var = math.sqrt(max(m4 - m2**2, 0.0) / n)
    return MomentEstimate(mean, var, se_mean, se_var, n)


def sample_cov(x: np.ndarray, y: np.ndarray) -> CovEstimate:
    n = len(x)
    if n < 2:
        return CovEstimate(0.0, math.nan, n)
    u = (x - x.mean()) * (y - y.mean())
    return CovEstimate(float(u.sum() / (n - 1)), float(u.std(ddof=1) / math.sqrt(n)), n)


def empirical_moments(e: PathEnsemble, t: float) -> MomentEstimate:
    return sample_moments(e.V[e.index(t)])


def empirical_autocov(e: PathEnsemble, t: float, delta: float) -> CovEstimate:
    return sample_cov(e.V[e.index(t)], e.V[e.index(t + delta)])


def returns_efficiency(e: PathEnsemble, delta: float, Delta: float, t: float) -> CorrEstimate:
    """Correlation of R(t+delta)-R(t) with R(t+delta+Delta)-R(t+Delta)."""
    if not (Delta > delta >= 0):
        raise GridError("return windows overlap: need Delta > delta >= 0", "simulate.returns_efficiency")
    R = e.R
    r1 = R[e.index(t + delta)] - R[e.index(t)]
    r2 = R[e.index(t + delta + Delta)] - R[e.index(t + Delta)]
    n = len(r1)
    s1, s2 = r1.std(), r2.std()
    if delta == 0 or s1 == 0 or s2 == 0 or n < 4:
        return CorrEstimate(math.nan, math.nan, n, degenerate=True)
    rho = float(np.corrcoef(r1, r2)[0, 1])
    return CorrEstimate(rho, (1.0 - rho**2) / math.sqrt(n - 3), n)
