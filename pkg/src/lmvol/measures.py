"""Memory measures on the half line and on the delay interval.

A measure is a finite list of atoms plus one density from a small closed set
of families.  The same representation serves both the long-run weight
(support ``[0, inf)``) and the short-run weight (support ``[-tau, 0]``); for
the latter an atom at location ``u`` carries mass at ``-u`` and the density is
read in the reflected coordinate ``u in [0, tau]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate

from .errors import (
    ConfigError,
    Finite,
    Infinite,
    TailUndeterminedError,
    Undetermined,
)

HALF_LINE = "halfline"
DELAY = "delay"

DEFAULT_BALANCE_TOL = 1e-9
DEFAULT_BALANCE_TOL_TABULATED = 1e-6

# Gauss-Legendre nodes for panel integrals of smooth densities.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(12)
_MAX_PANEL_U = 0.5


@dataclass(frozen=True)
class Atom:
    location: float
    weight: float


# ---------------------------------------------------------------------------
# density families
# ---------------------------------------------------------------------------


class Density:
    """Base class for density families.

    Subclasses implement ``pdf`` and ``upper`` (the integral from ``x`` to
    infinity).  Tail metadata describes ``upper(x) ~ A x**-alpha log(x)**-p``.
    """

    name = "density"
    tail_kind = "compact"  # one of power | exponential | compact | unknown
    tail_index: float | None = None
    log_power: float = 0.0

    def pdf(self, t):
        raise NotImplementedError

    def upper(self, x):
        raise NotImplementedError

    def integral(self, a, b):
        if math.isinf(b):
            return float(self.upper(a))
        return float(self.upper(a) - self.upper(b))

    def mass(self) -> float:
        return float(self.upper(0.0))

    def abs_mass(self) -> float:
        return self.mass()

    @property
    def tail_amplitude(self) -> float:
        return 0.0

    def slowly_varying(self, t):
        """L(t) such that pdf(t) ~ L(t) t**(-1-alpha); only for power tails."""
        raise ConfigError(f"{self.name} density has no regular-variation metadata", "measures")

    @property
    def nonnegative(self) -> bool:
        return True

    @property
    def nonpositive(self) -> bool:
        return False

    def first_moment(self):
        raise NotImplementedError

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"family": self.name, **self.params()}


@dataclass(frozen=True)
class Zero(Density):
    name = "zero"

    def pdf(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def upper(self, x):
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def nonpositive(self) -> bool:
        return True

    def first_moment(self):
        return Finite(0.0)


@dataclass(frozen=True)
class PowerLaw(Density):
    """k(t) = c (1+t)^(-1-alpha)."""

    c: float
    alpha: float
    name = "power_law"
    tail_kind = "power"

    def __post_init__(self):
        if not (self.c > 0 and self.alpha > 0):
            raise ConfigError("power_law needs c > 0 and alpha > 0", "measures")

    @property
    def tail_index(self):
        return self.alpha

    def pdf(self, t):
        return self.c * (1.0 + np.asarray(t, dtype=float)) ** (-1.0 - self.alpha)

    def upper(self, x):
        return self.c / self.alpha * (1.0 + np.asarray(x, dtype=float)) ** (-self.alpha)

    @property
    def tail_amplitude(self):
        return self.c / self.alpha

    def slowly_varying(self, t):
        return self.c * np.ones_like(np.asarray(t, dtype=float))

    def first_moment(self):
        if self.alpha <= 1.0:
            return Infinite(f"tail index {self.alpha} <= 1")
        return Finite(self.c / (self.alpha * (self.alpha - 1.0)))

    def params(self):
        return {"c": self.c, "alpha": self.alpha}


def _log_e_plus(t):
    """log(e + t), stable for large t."""
    t = np.asarray(t, dtype=float)
    return np.log(math.e + t)


@dataclass(frozen=True)
class PowerLogLaw(Density):
    """k(t) = c (1+t)^(-1-alpha) log(e+t)^(-p)."""

    c: float
    alpha: float
    p: float
    name = "power_log_law"
    tail_kind = "power"

    def __post_init__(self):
        if not (self.c > 0 and self.alpha > 0):
            raise ConfigError("power_log_law needs c > 0 and alpha > 0", "measures")

    @property
    def tail_index(self):
        return self.alpha

    @property
    def log_power(self):
        return self.p

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        return self.c * (1.0 + t) ** (-1.0 - self.alpha) * _log_e_plus(t) ** (-self.p)

    def _g(self, u):
        # integrand after t = e^u - 1; log(e - 1 + e^u) written to avoid overflow
        u = np.asarray(u, dtype=float)
        lg = u + np.log1p((math.e - 1.0) * np.exp(-u))
        return self.c * np.exp(-self.alpha * u) * lg ** (-self.p)

    def _upper_from_u(self, u0: float) -> float:
        val, _ = integrate.quad(lambda u: float(self._g(u)), u0, np.inf, limit=400, epsabs=0.0, epsrel=1e-13)
        return val

    def upper(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        u = np.log1p(np.atleast_1d(x))
        order = np.argsort(u)
        us = u[order]
        knots = [us[0]]
        for a, b in zip(us[:-1], us[1:]):
            if b - a > _MAX_PANEL_U:
                n = int(math.ceil((b - a) / _MAX_PANEL_U))
                knots.extend(np.linspace(a, b, n + 1)[1:-1])
            knots.append(b)
        knots = np.asarray(knots)
        left, right = knots[:-1], knots[1:]
        half = 0.5 * (right - left)
        mid = 0.5 * (right + left)
        nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
        panel = half * (self._g(nodes) @ _GL_W)
        tail = self._upper_from_u(float(knots[-1]))
        cum = np.concatenate([np.cumsum(panel[::-1])[::-1], [0.0]]) + tail
        idx = np.searchsorted(knots, us)
        vals_sorted = cum[np.minimum(idx, len(cum) - 1)]
        out = np.empty_like(u)
        out[order] = vals_sorted
        return float(out[0]) if scalar else out

    @property
    def tail_amplitude(self):
        return self.c / self.alpha

    def slowly_varying(self, t):
        return self.c * _log_e_plus(t) ** (-self.p)

    def first_moment(self):
        if self.alpha < 1.0 or (self.alpha == 1.0 and self.p <= 1.0):
            return Infinite(f"tail index {self.alpha}, log power {self.p}")

        def h(u):
            lg = u + math.log1p((math.e - 1.0) * math.exp(-u))
            return self.c * (-math.expm1(-u)) * math.exp((1.0 - self.alpha) * u) * lg ** (-self.p)

        if self.alpha > 1.0:
            val, _ = integrate.quad(h, 0.0, np.inf, limit=400)
            return Finite(val)
        # alpha == 1, p > 1: integrand ~ c u^-p; close with the analytic tail
        cut = 200.0
        val, _ = integrate.quad(h, 0.0, cut, limit=800)
        return Finite(val + self.c * cut ** (1.0 - self.p) / (self.p - 1.0))

    def params(self):
        return {"c": self.c, "alpha": self.alpha, "p": self.p}


@dataclass(frozen=True)
class Exponential(Density):
    """k(t) = c exp(-rate t)."""

    c: float
    rate: float
    name = "exponential"
    tail_kind = "exponential"

    def __post_init__(self):
        if not (self.c > 0 and self.rate > 0):
            raise ConfigError("exponential needs c > 0 and rate > 0", "measures")

    def pdf(self, t):
        return self.c * np.exp(-self.rate * np.asarray(t, dtype=float))

    def upper(self, x):
        return self.c / self.rate * np.exp(-self.rate * np.asarray(x, dtype=float))

    def first_moment(self):
        return Finite(self.c / self.rate**2)

    def params(self):
        return {"c": self.c, "rate": self.rate}


@dataclass(frozen=True)
class Tabulated(Density):
    """Piecewise-linear density through ``(t, k)`` samples.

    Beyond the last sample the density continues as
    ``k_last (t / t_last)^(-1-alpha)`` when ``tail_index`` is declared.  With no
    declared tail the table must end at a negligible value; otherwise integrals
    reaching past the table raise :class:`TailUndeterminedError`.
    """

    t: tuple
    k: tuple
    declared_tail: float | None = None
    name = "tabulated"

    def __post_init__(self):
        t = np.asarray(self.t, dtype=float)
        k = np.asarray(self.k, dtype=float)
        if t.ndim != 1 or t.shape != k.shape or len(t) < 2:
            raise ConfigError("tabulated density needs matching t and k arrays of length >= 2", "measures")
        if np.any(np.diff(t) <= 0) or t[0] < 0:
            raise ConfigError("tabulated grid must be nonnegative and strictly increasing", "measures")
        if self.declared_tail is not None and not self.declared_tail > 0:
            raise ConfigError("declared tail index must be positive", "measures")
        if self.declared_tail is not None and t[-1] <= 0:
            raise ConfigError("declared tail needs a positive last grid point", "measures")
        object.__setattr__(self, "t", tuple(t.tolist()))
        object.__setattr__(self, "k", tuple(k.tolist()))

    @property
    def _t(self):
        return np.asarray(self.t)

    @property
    def _k(self):
        return np.asarray(self.k)

    @property
    def negligible_end(self) -> bool:
        k = self._k
        scale = np.max(np.abs(k))
        return scale == 0 or abs(k[-1]) <= 1e-12 * scale

    @property
    def tail_kind(self):
        if self.declared_tail is not None:
            return "power"
        return "compact" if self.negligible_end else "unknown"

    @property
    def tail_index(self):
        return self.declared_tail

    def pdf(self, t):
        t = np.asarray(t, dtype=float)
        tt, kk = self._t, self._k
        out = np.interp(t, tt, kk, left=0.0, right=0.0)
        beyond = t > tt[-1]
        if np.any(beyond):
            if self.declared_tail is not None:
                out = np.where(beyond, kk[-1] * (np.maximum(t, tt[-1]) / tt[-1]) ** (-1.0 - self.declared_tail), out)
            elif not self.negligible_end:
                out = np.where(beyond, np.nan, out)
        return out

    def _cum(self):
        tt, kk = self._t, self._k
        seg = 0.5 * (kk[1:] + kk[:-1]) * np.diff(tt)
        return np.concatenate([[0.0], np.cumsum(seg)])

    def _beyond_last(self) -> float:
        tt, kk = self._t, self._k
        if self.declared_tail is not None:
            return kk[-1] * tt[-1] / self.declared_tail
        if self.negligible_end:
            return 0.0
        raise TailUndeterminedError(
            "tabulated density has no declared tail and a non-negligible last sample", "measures"
        )

    def _within(self, x):
        """Integral of the interpolant from max(x, t0) to t_last, for x <= t_last."""
        tt, kk = self._t, self._k
        cum = self._cum()
        x = np.clip(x, tt[0], tt[-1])
        i = np.clip(np.searchsorted(tt, x, side="right") - 1, 0, len(tt) - 2)
        kx = np.interp(x, tt, kk)
        partial = 0.5 * (kx + kk[i + 1]) * (tt[i + 1] - x)
        return partial + (cum[-1] - cum[i + 1])

    def upper(self, x):
        x = np.asarray(x, dtype=float)
        tt, kk = self._t, self._k
        inside = self._within(x)
        tail = self._beyond_last()
        if self.declared_tail is not None:
            far = kk[-1] * tt[-1] ** (1.0 + self.declared_tail) * np.maximum(x, tt[-1]) ** (-self.declared_tail) / self.declared_tail
        else:
            far = np.zeros_like(x)
        return np.where(x >= tt[-1], far, inside + tail)

    def integral(self, a, b):
        tt = self._t
        if not math.isinf(b) and b <= tt[-1]:
            return float(self._within(a) - self._within(b))
        return super().integral(a, b)

    def abs_mass(self) -> float:
        tt, kk = self._t, self._k
        y0, y1, dx = kk[:-1], kk[1:], np.diff(tt)
        same = y0 * y1 >= 0
        denom = np.where(same, 1.0, np.abs(y0) + np.abs(y1))
        seg = np.where(same, 0.5 * np.abs(y0 + y1) * dx, 0.5 * (y0**2 + y1**2) / denom * dx)
        return float(np.sum(seg) + abs(self._beyond_last()))

    @property
    def tail_amplitude(self):
        if self.declared_tail is None:
            return 0.0
        tt, kk = self._t, self._k
        return kk[-1] * tt[-1] ** (1.0 + self.declared_tail) / self.declared_tail

    def slowly_varying(self, t):
        if self.declared_tail is None:
            return super().slowly_varying(t)
        tt, kk = self._t, self._k
        return kk[-1] * tt[-1] ** (1.0 + self.declared_tail) * np.ones_like(np.asarray(t, dtype=float))

    @property
    def nonnegative(self):
        return bool(np.all(self._k >= 0))

    @property
    def nonpositive(self):
        return bool(np.all(self._k <= 0))

    def first_moment(self):
        tt, kk = self._t, self._k
        sk = np.abs(tt * kk)
        body = float(np.sum(0.5 * (sk[1:] + sk[:-1]) * np.diff(tt)))
        if self.declared_tail is None:
            if self.negligible_end:
                return Finite(body)
            return Undetermined("tabulated density without declared tail")
        a = self.declared_tail
        if a <= 1.0:
            return Infinite(f"declared tail index {a} <= 1")
        return Finite(body + abs(kk[-1]) * tt[-1] ** 2 / (a - 1.0))

    def params(self):
        return {"t": list(self.t), "k": list(self.k), "tail_index": self.declared_tail}


FAMILIES = {
    "zero": Zero,
    "power_law": PowerLaw,
    "power_log_law": PowerLogLaw,
    "exponential": Exponential,
    "tabulated": Tabulated,
}


def density_from_dict(spec: dict) -> Density:
    spec = dict(spec)
    family = spec.pop("family", "zero")
    if family not in FAMILIES:
        raise ConfigError(f"unknown density family {family!r}", "measures")
    try:
        if family == "tabulated":
            return Tabulated(tuple(spec["t"]), tuple(spec["k"]), spec.get("tail_index"))
        return FAMILIES[family](**{k: float(v) for k, v in spec.items()})
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {family}: {exc}", "measures") from None


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignedMeasure:
    """Atoms plus a density on the half line or on the delay interval."""

    support: str = HALF_LINE
    atoms: tuple = ()
    density: Density = field(default_factory=Zero)
    tau: float = 0.0

    def __post_init__(self):
        atoms = tuple(a if isinstance(a, Atom) else Atom(float(a[0]), float(a[1])) for a in self.atoms)
        object.__setattr__(self, "atoms", atoms)
        if self.support not in (HALF_LINE, DELAY):
            raise ConfigError(f"unknown support {self.support!r}", "measures")
        locs = [a.location for a in atoms]
        if any(l < 0 for l in locs):
            raise ConfigError("atom locations must be nonnegative", "measures")
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise ConfigError("atom locations must be strictly increasing", "measures")
        if self.support == DELAY:
            if self.tau < 0:
                raise ConfigError("delay horizon tau must be >= 0", "measures")
            if any(l > self.tau for l in locs):
                raise ConfigError("delay atoms must lie in [0, tau]", "measures")
            if self.tau == 0 and not isinstance(self.density, Zero):
                raise ConfigError("a density on the delay interval needs tau > 0", "measures")

    @classmethod
    def half_line(cls, atoms: Sequence = (), density: Density | None = None):
        return cls(HALF_LINE, tuple(atoms), density or Zero())

    @classmethod
    def delay(cls, tau: float, atoms: Sequence = (), density: Density | None = None):
        return cls(DELAY, tuple(atoms), density or Zero(), float(tau))

    @property
    def locations(self):
        return np.array([a.location for a in self.atoms])

    @property
    def weights(self):
        return np.array([a.weight for a in self.atoms])

    def density_integral(self, a: float, b: float) -> float:
        """Density mass over [a, b] intersected with the support."""
        if self.support == DELAY:
            b = min(b, self.tau)
        if b <= a:
            return 0.0
        return self.density.integral(a, b)

    def to_dict(self) -> dict:
        d = {
            "support": self.support,
            "atoms": [[a.location, a.weight] for a in self.atoms],
            "density": self.density.to_dict(),
        }
        if self.support == DELAY:
            d["tau"] = self.tau
        return d


def total_mass(m: SignedMeasure) -> float:
    """Sum of atom weights plus the density's mass over the support."""
    dens = m.density_integral(0.0, math.inf)
    return float(sum(a.weight for a in m.atoms) + dens)


def total_variation(m: SignedMeasure) -> float:
    if m.support == DELAY and not isinstance(m.density, Zero):
        d = m.density
        if d.nonnegative or d.nonpositive:
            dens = abs(m.density_integral(0.0, m.tau))
        else:
            grid = np.linspace(0.0, m.tau, 20001)
            dens = float(integrate.trapezoid(np.abs(d.pdf(grid)), grid))
    else:
        dens = m.density.abs_mass()
    return float(sum(abs(a.weight) for a in m.atoms) + dens)


@dataclass(frozen=True)
class Balanced:
    discrepancy: float


@dataclass(frozen=True)
class Unbalanced:
    discrepancy: float


def _has_table(*ms) -> bool:
    return any(isinstance(m.density, Tabulated) for m in ms)


def validate_balance(lam: SignedMeasure, kappa: SignedMeasure, tol: float | None = None):
    """Compare the short-run and long-run weights.

    Returns :class:`Balanced` or :class:`Unbalanced`; the discrepancy is
    ``mass(lambda) - mass(kappa)``.
    """
    if lam.support != DELAY or kappa.support != HALF_LINE:
        raise ConfigError("lambda must live on the delay interval and kappa on the half line", "measures.validate_balance")
    if tol is None:
        tol = DEFAULT_BALANCE_TOL_TABULATED if _has_table(lam, kappa) else DEFAULT_BALANCE_TOL
    diff = total_mass(lam) - total_mass(kappa)
    return Balanced(diff) if abs(diff) <= tol else Unbalanced(diff)


def first_moment_class(kappa: SignedMeasure):
    """Finite/Infinite/Undetermined verdict on the integral of s |kappa|(ds)."""
    atoms = float(sum(a.location * abs(a.weight) for a in kappa.atoms))
    dens = kappa.density.first_moment()
    if isinstance(dens, Finite):
        return Finite(atoms + abs(dens.value))
    return dens


def is_nonnegative(m: SignedMeasure) -> bool:
    return all(a.weight >= 0 for a in m.atoms) and m.density.nonnegative


def is_nonpositive(m: SignedMeasure) -> bool:
    return all(a.weight <= 0 for a in m.atoms) and (isinstance(m.density, Zero) or m.density.nonpositive)


def measure_from_dict(spec: dict, support: str, tau: float = 0.0) -> SignedMeasure:
    atoms = [Atom(float(l), float(w)) for l, w in spec.get("atoms", [])]
    density = density_from_dict(spec.get("density", {"family": "zero"}))
    return SignedMeasure(support, tuple(atoms), density, float(tau) if support == DELAY else 0.0)
