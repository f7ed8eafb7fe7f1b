"""Discrete-time analogue of the volatility equation.

With weights ``a_n >= 0`` and tail sums ``K_n = sum_{j>n} a_j``::

    V_1     = sigma
    V_{n+1} = sigma + beta * sum_{j=1}^{n} K_{n-j} V_j xi_j
    U_n     = V_n xi_n,   X_n = U_1 + ... + U_n,   X_0 = 0

``FromKernel(model, h)`` samples a continuous kernel, ``K_n = K((n+1) h)``,
and scales the innovations by ``sqrt(h)``; with the same seed it reproduces
the continuous Euler paths bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from ._recursion import volterra_paths
from .errors import (
    KERNEL_NOT_L2,
    MARGIN_AT_LEAST_ONE,
    UNDETERMINED,
    ConfigError,
    MemoryClass,
    NonStationary,
    Stationary,
)
from .moments import ModelConfig
from .simulate import CHUNK, kernel_weights

# Euler-Maclaurin tails are closed at this many explicit terms past the start.
EM_TERMS = 2000
SQUARE_SUM_TERMS = 1_000_000


def _zeta_tail(s: float, m: int) -> tuple[float, float]:
    """sum_{i>=m} i^-s by Euler-Maclaurin; returns (value, error bound)."""
    x = float(m)
    val = x ** (1 - s) / (s - 1) + 0.5 * x**-s + s * x ** (-s - 1) / 12.0 - s * (s + 1) * (s + 2) * x ** (-s - 3) / 720.0
    bound = s * (s + 1) * (s + 2) * (s + 3) * (s + 4) * x ** (-s - 5) / 30240.0
    return val, bound


@dataclass(frozen=True)
class PowerLawSeq:
    """a_n = c (n+1)^(-1-alpha)."""

    c: float
    alpha: float

    def __post_init__(self):
        if not (self.c > 0 and self.alpha > 0):
            raise ConfigError("power-law sequence needs c > 0 and alpha > 0", "discrete")

    def a(self, n):
        return self.c * (np.asarray(n, dtype=float) + 1.0) ** (-1.0 - self.alpha)

    def k_table(self, n_max: int) -> tuple[np.ndarray, int]:
        """K_0..K_{n_max} and the index where the explicit sum stops."""
        s = 1.0 + self.alpha
        cut = n_max + 2 + EM_TERMS  # K_n = c * sum_{i >= n+2} i^-s
        tail, _ = _zeta_tail(s, cut)
        i = np.arange(2, cut, dtype=float)
        terms = i**-s
        # suffix[n] = sum_{i >= n+2} i^-s
        suffix = np.cumsum(terms[::-1])[::-1] + tail
        return self.c * suffix[: n_max + 1], cut

    def tail_square_sum(self, m: int) -> float:
        """sum_{j>m} K_j^2 using K_j ~ (c/alpha)(j+1.5)^-alpha."""
        A = self.c / self.alpha
        e = 2 * self.alpha
        x = m + 1 + 1.5
        f = A**2 * x**-e
        df = -e * A**2 * x ** (-e - 1)
        return A**2 * x ** (1 - e) / (e - 1) + 0.5 * f - df / 12.0

    def to_dict(self):
        return {"family": "power_law_seq", "c": self.c, "alpha": self.alpha}


@dataclass(frozen=True)
class FiniteSeq:
    values: tuple

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        if not v or any(x < 0 for x in v):
            raise ConfigError("finite sequence needs nonnegative entries", "discrete")
        object.__setattr__(self, "values", v)

    def a(self, n):
        n = np.asarray(n)
        v = np.asarray(self.values)
        return np.where(n < len(v), v[np.minimum(n, len(v) - 1)], 0.0)

    def k_table(self, n_max: int) -> tuple[np.ndarray, int]:
        v = np.asarray(self.values)
        suf = np.concatenate([np.cumsum(v[::-1])[::-1], [0.0]])  # suf[i] = sum_{j>=i}
        idx = np.minimum(np.arange(1, n_max + 2), len(v))
        return suf[idx], len(v)

    def to_dict(self):
        return {"family": "finite_seq", "values": list(self.values)}


@dataclass(frozen=True)
class FromKernel:
    model: ModelConfig
    h: float

    def __post_init__(self):
        if not self.h > 0:
            raise ConfigError("h must be positive", "discrete")

    @property
    def scale(self) -> float:
        return math.sqrt(self.h)

    def k_table(self, n_max: int) -> tuple[np.ndarray, int]:
        lags = np.arange(1, n_max + 2) * self.h
        return self.model.kernel.eval(lags), n_max

    def a(self, n):
        n = np.asarray(n)
        k = self.model.kernel
        lo = np.where(n == 0, k.eval(np.full(n.shape, 0.0), side="right"), 0.0)
        pos = n > 0
        lo = np.where(pos, k.eval(np.where(pos, n, 1) * self.h), lo)
        return lo - k.eval((n + 1) * self.h)

    def to_dict(self):
        return {"family": "from_kernel", "h": self.h}


@dataclass(frozen=True)
class DiscreteModel:
    sigma: float
    beta: float
    seq: object
    noise: str = "normal"

    def __post_init__(self):
        if self.noise not in ("normal", "rademacher"):
            raise ConfigError("noise must be 'normal' or 'rademacher'", "discrete")

    @property
    def scale(self) -> float:
        return getattr(self.seq, "scale", 1.0)

    def weights(self, n: int) -> np.ndarray:
        """Recursion weights K_m * scale for m = 0..n-1."""
        if n == 0:
            return np.zeros(0)
        if isinstance(self.seq, FromKernel):
            return kernel_weights(self.seq.model, n, self.seq.h)
        return self.seq.k_table(n - 1)[0]


def k_seq(m: DiscreteModel, n: int) -> float:
    return float(m.seq.k_table(n)[0][n])


@dataclass(frozen=True)
class DiscreteEnsemble:
    """V and U indexed n = 1..steps (row n-1); X indexed n = 0..steps."""

    V: np.ndarray
    U: np.ndarray
    X: np.ndarray
    seed: int


def simulate_discrete(m: DiscreteModel, steps: int, paths: int, seed: int, threads: int = 1) -> DiscreteEnsemble:
    if steps < 1 or paths < 1:
        raise ConfigError("steps and paths must be >= 1", "discrete.simulate_discrete")
    w = m.weights(steps - 1)
    if len(w) == 0:
        w = np.zeros(1)
    V = np.empty((steps, paths))
    U = np.empty_like(V)

    def work(first):
        count = min(CHUNK, paths - first)
        xi = rng.block(seed, first, count, steps, m.noise)
        v = volterra_paths(float(m.sigma), float(m.beta), w, xi, steps)
        V[:, first : first + count] = v
        U[:, first : first + count] = v * xi

    starts = range(0, paths, CHUNK)
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            list(pool.map(work, starts))
    else:
        for s in starts:
            work(s)
    X = np.zeros((steps + 1, paths))
    np.cumsum(U, axis=0, out=X[1:])
    return DiscreteEnsemble(V, U, X, seed)


def square_sum(m: DiscreteModel):
    """sum_{j>=0} K_j^2 (times scale^2); None when the tail is undetermined."""
    seq = m.seq
    if isinstance(seq, FiniteSeq):
        k, _ = seq.k_table(len(seq.values))
        return float(np.sum(k**2)), len(seq.values)
    if isinstance(seq, PowerLawSeq):
        if seq.alpha <= 0.5:
            return math.inf, 0
        M = SQUARE_SUM_TERMS
        k, _ = seq.k_table(M)
        return float(np.sum(k**2) + seq.tail_square_sum(M)), M
    tail = seq.model.kernel.tail
    finite = tail.l2_finite()
    if finite is None:
        return None, 0
    if not finite:
        return math.inf, 0
    M = SQUARE_SUM_TERMS
    k, _ = seq.k_table(M)
    x0 = (M + 1.5) * seq.h
    rem = tail.remainder(x0, 2) / seq.h if tail.kind == "power" else 0.0
    return float(seq.h * (np.sum(k**2) + rem)), M


def discrete_stationarity(m: DiscreteModel, eps: float = 1e-9):
    if m.beta == 0:
        return Stationary(0.0)
    total, _ = square_sum(m)
    if total is None:
        return NonStationary(UNDETERMINED)
    if math.isinf(total):
        return NonStationary(KERNEL_NOT_L2)
    margin = m.beta**2 * total
    if margin < 1.0 - eps:
        return Stationary(margin)
    return NonStationary(MARGIN_AT_LEAST_ONE, margin)


def discrete_memory(m: DiscreteModel) -> MemoryClass:
    """Long iff sum j a_j diverges."""
    seq = m.seq
    if isinstance(seq, FiniteSeq):
        return MemoryClass.SHORT
    if isinstance(seq, PowerLawSeq):
        return MemoryClass.LONG if seq.alpha <= 1.0 else MemoryClass.SHORT
    # sum_j j a_j = sum_n K_n: finite iff K is integrable
    finite = seq.model.kernel.tail.l1_finite()
    if finite is None:
        return MemoryClass.UNDETERMINED
    return MemoryClass.SHORT if finite else MemoryClass.LONG
