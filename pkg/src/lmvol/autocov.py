"""Limiting autocovariance of V, memory classification and decay rates."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    Finite,
    Infinite,
    MemoryClass,
    Stationary,
    StationarityError,
    UnsupportedRegimeError,
)
from .kernel import l1_norm, overlap
from .measures import PowerLogLaw, first_moment_class, is_nonnegative, is_nonpositive
from .moments import ModelConfig

LONG = "long_memory"
SHORT = "short_memory"
CRITICAL = "critical"


def c_factor(cfg: ModelConfig) -> float:
    """beta^2 sigma^2 / (1 - beta^2 int K^2)."""
    verdict = cfg.verdict
    if not isinstance(verdict, Stationary):
        raise StationarityError(verdict, "autocov")
    return cfg.beta**2 * cfg.sigma**2 / (1.0 - verdict.margin)


def gamma(cfg: ModelConfig, delta: float) -> float:
    cf = c_factor(cfg)
    if cf == 0:
        return 0.0
    return cf * overlap(cfg.kernel, delta, cfg.horizon, cfg.step)


@dataclass(frozen=True)
class AutocovCurve:
    deltas: np.ndarray
    values: np.ndarray
    c_factor: float
    memory_class: MemoryClass


def gamma_curve(cfg: ModelConfig, deltas) -> AutocovCurve:
    deltas = np.asarray(deltas, dtype=float)
    cf = c_factor(cfg)
    if cf == 0:
        values = np.zeros_like(deltas)
    else:
        values = np.array([cf * overlap(cfg.kernel, d, cfg.horizon, cfg.step) for d in deltas])
    return AutocovCurve(deltas, values, cf, classify_memory(cfg))


def classify_memory(cfg: ModelConfig) -> MemoryClass:
    """Short iff kappa has a finite first moment; Long iff it is infinite and
    kappa is sign-definite; otherwise Undetermined."""
    verdict = cfg.verdict
    if not isinstance(verdict, Stationary):
        raise StationarityError(verdict, "autocov.classify_memory")
    fm = first_moment_class(cfg.kappa)
    if isinstance(fm, Finite):
        return MemoryClass.SHORT
    if isinstance(fm, Infinite) and (is_nonnegative(cfg.kappa) or is_nonpositive(cfg.kappa)):
        return MemoryClass.LONG
    return MemoryClass.UNDETERMINED


def long_memory_constant(alpha: float) -> float:
    """Gamma(2a-1) Gamma(1-a) / (Gamma(a+1) a)."""
    return special.gamma(2 * alpha - 1) * special.gamma(1 - alpha) / (special.gamma(alpha + 1) * alpha)


@dataclass(frozen=True)
class Asymptote:
    value: float
    regime: str


def _log_sv_integral(d: PowerLogLaw, delta: float) -> float:
    """int_delta^inf L(s)^2 / s ds with L(s) = c log(e+s)^-p, in u = log s."""

    def integrand(u):
        lg = u + math.log1p(math.exp(1.0 - u))
        return d.c**2 * lg ** (-2.0 * d.p)

    val, _ = integrate.quad(integrand, math.log(delta), np.inf, limit=400)
    return val


def _regime(cfg: ModelConfig) -> str:
    d = cfg.kappa.density
    alpha = d.tail_index
    if d.tail_kind != "power" or alpha is None:
        raise UnsupportedRegimeError("kappa density carries no regular-variation metadata", "autocov.asymptotic_gamma")
    if alpha == 1.0:
        raise UnsupportedRegimeError("tail index 1 is not covered by a rate result", "autocov.asymptotic_gamma")
    if alpha > 1.0:
        return SHORT
    if alpha > 0.5:
        return LONG
    if alpha == 0.5 and cfg.kernel.tail.l2_finite():
        return CRITICAL
    raise UnsupportedRegimeError(f"tail index {alpha}: K is not square integrable", "autocov.asymptotic_gamma")


def asymptotic_gamma(cfg: ModelConfig, delta: float) -> Asymptote:
    """Leading-order asymptote of gamma(delta) for regularly varying kappa."""
    regime = _regime(cfg)
    if cfg.beta == 0:
        return Asymptote(0.0, regime)
    cf = c_factor(cfg)
    d = cfg.kappa.density
    alpha = d.tail_index
    L = float(d.slowly_varying(delta))
    if regime == LONG:
        value = cf * long_memory_constant(alpha) * delta ** (1 - 2 * alpha) * L**2
    elif regime == SHORT:
        norm = l1_norm(cfg.kernel, cfg.horizon, cfg.step)
        value = cf * norm.value / alpha * L * delta ** (-alpha)
    else:
        value = cf * 4.0 * _log_sv_integral(d, delta)
    return Asymptote(float(value), regime)


@dataclass(frozen=True)
class RateReport:
    rows: list  # (delta, gamma, asymptote, ratio)
    regime: str
    converging: bool
    exact: bool = False

    def to_rows(self):
        return [dict(zip(("delta", "gamma", "asymptote", "ratio"), r)) for r in self.rows]


def verify_rate(cfg: ModelConfig, deltas) -> RateReport:
    """Tabulate gamma against its asymptote; flag a monotone approach to 1."""
    deltas = sorted(float(d) for d in deltas)
    rows = []
    regime = _regime(cfg)
    if cfg.beta == 0:
        rows = [(d, 0.0, 0.0, 1.0) for d in deltas]
        return RateReport(rows, regime, True, exact=True)
    for d in deltas:
        g = gamma(cfg, d)
        a = asymptotic_gamma(cfg, d).value
        rows.append((d, g, a, g / a))
    gaps = [abs(r[3] - 1.0) for r in rows[-3:]]
    converging = all(b <= a for a, b in zip(gaps, gaps[1:]))
    return RateReport(rows, regime, converging)
