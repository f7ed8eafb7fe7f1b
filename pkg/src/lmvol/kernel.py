"""The memory kernel K built from the short-run and long-run weights.

``K(x) = -lambda([-tau, -(x ^ tau)]) + kappa([x, inf))`` for ``x > 0``.  The
kernel is never evaluated at ``x = 0`` in computations; ``eval(0, side="right")``
gives the right limit for display only.

Integrals over ``(0, inf)`` are split in three pieces:

* ``(0, horizon]``: composite trapezoid on panels aligned with every jump of
  the integrand, Richardson-extrapolated from steps ``step`` and ``step/2``;
* ``(horizon, far]``: the same rule in ``y = log s`` on a geometric grid;
* ``(far, inf)``: the leading term of the power-law tail (optional).

Divergence verdicts come only from tail metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DomainError,
    Divergent,
    Finite,
    StationarityError,
    UnbalancedError,
    Undetermined,
)
from .measures import (
    DELAY,
    HALF_LINE,
    PowerLaw,
    SignedMeasure,
    Unbalanced,
    Zero,
    validate_balance,
)

DEFAULT_STEP = 0.01
FAR = 1e200
LOG_POINTS_PER_UNIT = 32


@dataclass(frozen=True)
class PowerLawClosedForm:
    """K(x) = c / (alpha (1+x)^alpha)."""

    c: float
    alpha: float

    def __call__(self, x):
        return self.c / (self.alpha * (1.0 + np.asarray(x, dtype=float)) ** self.alpha)


@dataclass(frozen=True)
class TailModel:
    """K(x) ~ amplitude * x**-alpha * log(x)**-log_power for x >= start."""

    kind: str  # power | exponential | compact | unknown
    start: float
    amplitude: float = 0.0
    alpha: float | None = None
    log_power: float = 0.0

    def l2_finite(self) -> bool | None:
        if self.kind in ("compact", "exponential"):
            return True
        if self.kind == "unknown":
            return None
        if self.alpha > 0.5:
            return True
        return self.alpha == 0.5 and self.log_power > 0.5

    def l1_finite(self) -> bool | None:
        if self.kind in ("compact", "exponential"):
            return True
        if self.kind == "unknown":
            return None
        if self.alpha > 1.0:
            return True
        return self.alpha == 1.0 and self.log_power > 1.0

    def remainder(self, far: float, power: int) -> float:
        """Leading term of the integral of |K|**power over (far, inf)."""
        if self.kind != "power":
            return 0.0
        e = power * self.alpha
        r = power * self.log_power
        amp = abs(self.amplitude) ** power
        lf = math.log(far)
        if e > 1.0:
            return amp * far ** (1.0 - e) * lf ** (-r) / (e - 1.0)
        if e == 1.0 and r > 1.0:
            return amp * lf ** (1.0 - r) / (r - 1.0)
        return math.inf


class Kernel:
    """Evaluable kernel with jump locations and tail metadata.

    Parameters
    ----------
    lam : SignedMeasure
        Short-run weight on the delay interval ``[-tau, 0]``.
    kappa : SignedMeasure
        Long-run weight on ``[0, inf)``.
    tol : float, optional
        Balance tolerance; the default depends on whether tables are involved.
    """

    def __init__(self, lam: SignedMeasure, kappa: SignedMeasure, tol: float | None = None):
        if lam.support != DELAY or kappa.support != HALF_LINE:
            raise DomainError("kernel needs lambda on the delay interval and kappa on the half line", "kernel")
        verdict = validate_balance(lam, kappa, tol)
        if isinstance(verdict, Unbalanced):
            raise UnbalancedError(
                f"weights are unbalanced: mass(lambda) - mass(kappa) = {verdict.discrepancy:.3e}",
                "kernel",
            )
        self.lam = lam
        self.kappa = kappa
        self.tau = lam.tau
        self._kloc = kappa.locations
        self._kw = kappa.weights
        self._lloc = lam.locations
        self._lw = lam.weights
        # suffix sums: total weight of atoms with index >= i
        self._ksuf = np.concatenate([np.cumsum(self._kw[::-1])[::-1], [0.0]]) if len(self._kw) else np.zeros(1)
        self._lsuf = np.concatenate([np.cumsum(self._lw[::-1])[::-1], [0.0]]) if len(self._lw) else np.zeros(1)
        pts = set(self._kloc.tolist()) | set(self._lloc.tolist())
        if self.tau > 0:
            pts.add(self.tau)
        pts.discard(0.0)
        self.breakpoints = tuple(sorted(pts))
        self.closed_form = self._detect_closed_form()
        d = kappa.density
        start = max([self.tau, *self._kloc.tolist(), 0.0])
        kind = d.tail_kind
        if kind == "power":
            self.tail = TailModel("power", start, d.tail_amplitude, d.tail_index, d.log_power)
        else:
            self.tail = TailModel(kind, start)

    def _detect_closed_form(self):
        d = self.kappa.density
        if (
            isinstance(d, PowerLaw)
            and not self.kappa.atoms
            and isinstance(self.lam.density, Zero)
            and len(self.lam.atoms) == 1
            and self.lam.atoms[0].location == 0.0
        ):
            return PowerLawClosedForm(d.c, d.alpha)
        return None

    # -- evaluation ---------------------------------------------------------

    def _atom_sum(self, loc, suf, x, strict):
        if len(loc) == 0:
            return np.zeros_like(x)
        idx = np.searchsorted(loc, x, side="right" if strict else "left")
        return suf[idx]

    def eval(self, x, side: str = "value"):
        """Evaluate K.

        ``side="value"`` applies the defining formula at ``x`` (closed
        conditions ``rho_j >= x``); ``"left"``/``"right"`` return one-sided
        limits, used at quadrature panel ends.
        """
        xa = np.asarray(x, dtype=float)
        scalar = xa.ndim == 0
        xa = np.atleast_1d(xa)
        if side == "right":
            if np.any(xa < 0):
                raise DomainError("K is defined for x >= 0", "kernel.eval")
        elif np.any(xa <= 0):
            raise DomainError("K is evaluated only at x > 0", "kernel.eval")
        strict = side == "right"
        out = self._atom_sum(self._kloc, self._ksuf, xa, strict)
        out = out + self.kappa.density.upper(xa)
        if self.tau > 0 or len(self._lloc):
            near = xa <= self.tau if side == "left" else xa < self.tau
            if np.any(near):
                xs = xa[near]
                lam = self._atom_sum(self._lloc, self._lsuf, xs, strict)
                if not isinstance(self.lam.density, Zero):
                    d = self.lam.density
                    lam = lam + (d.upper(xs) - d.upper(self.tau))
                out = out.copy()
                out[near] -= lam
        return float(out[0]) if scalar else out

    __call__ = eval

    # -- defaults -----------------------------------------------------------

    def default_horizon(self) -> float:
        last = max(self.breakpoints) if self.breakpoints else 0.0
        return max(100.0, 50.0 * self.tau, last + 100.0)

    def _check_horizon(self, horizon, step):
        horizon = self.default_horizon() if horizon is None else float(horizon)
        step = DEFAULT_STEP if step is None else float(step)
        if step <= 0:
            raise DomainError("step must be positive", "kernel")
        last = max(self.breakpoints) if self.breakpoints else 0.0
        if horizon <= max(self.tau, last):
            raise DomainError("horizon must exceed tau and every atom location", "kernel")
        return horizon, step

    def to_dict(self) -> dict:
        return {"lambda": self.lam.to_dict(), "kappa": self.kappa.to_dict(), "tau": self.tau}


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def _trapezoid_pair(vals, dx):
    """Trapezoid sums on the fine grid and on every other point."""
    fine = dx * (vals.sum() - 0.5 * (vals[0] + vals[-1]))
    coarse_v = vals[::2]
    coarse = 2 * dx * (coarse_v.sum() - 0.5 * (coarse_v[0] + coarse_v[-1]))
    return fine, coarse


def _richardson(fine, coarse):
    return fine + (fine - coarse) / 3.0


def _integrate(F, edges, horizon, step, far=FAR):
    """Integral of F over (0, far] split into a uniform and a geometric region.

    ``F(s, side)`` must accept arrays; ``side`` is applied at panel ends.
    """
    total = 0.0
    cuts = sorted({0.0, horizon, *[e for e in edges if 0.0 < e < horizon]})
    for a, b in zip(cuts[:-1], cuts[1:]):
        n = max(1, int(math.ceil((b - a) / step - 1e-9)))
        s = np.linspace(a, b, 2 * n + 1)
        vals = np.empty_like(s)
        vals[1:-1] = F(s[1:-1], "value")
        vals[0] = F(np.array([a]), "right")[0]
        vals[-1] = F(np.array([b]), "left")[0]
        total += _richardson(*_trapezoid_pair(vals, (b - a) / (2 * n)))
    if far > horizon:
        ya, yb = math.log(horizon), math.log(far)
        n = int(math.ceil((yb - ya) * LOG_POINTS_PER_UNIT))
        y = np.linspace(ya, yb, 2 * n + 1)
        s = np.exp(y)
        s[0] = horizon
        vals = F(s, "value") * s
        vals[0] = F(np.array([horizon]), "right")[0] * horizon
        total += _richardson(*_trapezoid_pair(vals, (yb - ya) / (2 * n)))
    return total


def l2_norm_sq(k: Kernel, horizon: float | None = None, step: float | None = None, analytic_tail: bool = True):
    """Integral of K^2 over (0, inf) with a Finite/Divergent/Undetermined verdict.

    With ``analytic_tail=False`` the geometric region still runs out to a far
    cutoff but no closing term is added beyond it.
    """
    finite = k.tail.l2_finite()
    if finite is None:
        return Undetermined("tail of the kernel is undetermined")
    if not finite:
        return Divergent(f"tail index {k.tail.alpha}, log power {k.tail.log_power}")
    horizon, step = _check_horizon_for(k, horizon, step)
    val = _integrate(lambda s, side: k.eval(s, side) ** 2, k.breakpoints, horizon, step)
    if analytic_tail:
        val += k.tail.remainder(FAR, 2)
    return Finite(float(val))


def l1_norm(k: Kernel, horizon: float | None = None, step: float | None = None, analytic_tail: bool = True):
    """Integral of |K| over (0, inf) with a verdict."""
    finite = k.tail.l1_finite()
    if finite is None:
        return Undetermined("tail of the kernel is undetermined")
    if not finite:
        return Divergent(f"tail index {k.tail.alpha}, log power {k.tail.log_power}")
    horizon, step = _check_horizon_for(k, horizon, step)
    val = _integrate(lambda s, side: np.abs(k.eval(s, side)), k.breakpoints, horizon, step)
    if analytic_tail:
        val += k.tail.remainder(FAR, 1)
    return Finite(float(val))


def overlap(k: Kernel, delta: float, horizon: float | None = None, step: float | None = None) -> float:
    """Integral of K(s) K(s + delta) over s in (0, inf)."""
    if delta < 0:
        raise DomainError("delta must be >= 0", "kernel.overlap")
    norm = l2_norm_sq(k, horizon, step)
    if not isinstance(norm, Finite):
        raise StationarityError(norm, "kernel.overlap")
    if delta == 0:
        return norm.value
    horizon, step = _check_horizon_for(k, horizon, step)
    edges = list(k.breakpoints) + [b - delta for b in k.breakpoints if b - delta > 0]
    far = max(FAR, 1e12 * delta)

    def F(s, side):
        return k.eval(s, side) * k.eval(s + delta, side)

    return float(_integrate(F, edges, horizon, step, far) + k.tail.remainder(far, 2))


def _check_horizon_for(k, horizon, step):
    return k._check_horizon(horizon, step)


def kernel_table(k: Kernel, x) -> np.ndarray:
    """K on a grid, using the right limit at 0 if present."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = k.eval(x[pos])
    if np.any(~pos):
        out[~pos] = k.eval(x[~pos], side="right")
    return out
