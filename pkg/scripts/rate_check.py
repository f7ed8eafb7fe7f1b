"""Tabulate gamma(delta) against its leading-order asymptote.

    python scripts/rate_check.py

Covers the long-memory (alpha = 0.75), short-memory (alpha = 1.5) and
critical (alpha = 1/2 with log power 1) regimes, then measures how much of
the short-memory autocovariance sum lies beyond lag 10^3.
"""

import numpy as np

from lmvol.autocov import asymptotic_gamma, gamma, verify_rate
from lmvol.measures import PowerLogLaw, SignedMeasure
from lmvol.moments import ModelConfig, power_law_model


def critical_model(p=1.0):
    d = PowerLogLaw(1.0, 0.5, p)
    return ModelConfig(1.0, 0.3, SignedMeasure.delay(0.0, [(0.0, d.mass())]), SignedMeasure.half_line(density=d))


def table(name, m, deltas):
    rep = verify_rate(m, deltas)
    print(f"\n{name}: regime {rep.regime}, approaching 1: {rep.converging}")
    print(f"{'delta':>9} {'gamma':>13} {'asymptote':>13} {'ratio':>8}")
    for d, g, a, r in rep.rows:
        print(f"{d:9.0f} {g:13.6e} {a:13.6e} {r:8.4f}")


def tail_fraction(m, lag=1000):
    head = sum(gamma(m, float(n)) for n in range(lag + 1))
    s = np.geomspace(lag + 1.0, 1e8, 600)
    gs = np.array([gamma(m, x) for x in s])
    a = m.kappa.density.tail_index
    far = asymptotic_gamma(m, s[-1]).value * s[-1] / (a - 1)
    tail = float(np.trapezoid(gs * s, np.log(s))) + far + 0.5 * gs[0]
    return head, tail


def main():
    table("alpha=0.75", power_law_model(0.75), [10, 100, 1e3, 1e4, 1e5])
    table("alpha=1.5", power_law_model(1.5), [10, 100, 1e3, 1e4, 1e5])
    table("alpha=1/2, p=1", critical_model(), [10, 100, 1e3, 1e4, 1e5])
    m = power_law_model(1.5)
    head, tail = tail_fraction(m, 1000)
    total = head + tail
    print(f"\nalpha=1.5: sum to 1000 = {head:.6f}, tail beyond = {tail:.6f} ({tail / total:.2%} of total)")
    # the tail beyond n is about 2 A n^-1/2, with A read off the asymptote
    A = asymptotic_gamma(m, 1e4).value * 1e4**1.5
    print(f"tail below 1% of the total needs lags beyond about {(2 * A / (0.01 * total)) ** 2:.2e}")

if __name__ == "__main__":
    main()
