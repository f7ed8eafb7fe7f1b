import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, special

from lmvol.autocov import (
    CRITICAL,
    LONG,
    SHORT,
    asymptotic_gamma,
    c_factor,
    classify_memory,
    gamma,
    gamma_curve,
    long_memory_constant,
    verify_rate,
)
from lmvol.errors import MemoryClass, StationarityError, UnsupportedRegimeError
from lmvol.measures import Exponential, PowerLaw, PowerLogLaw, SignedMeasure
from lmvol.moments import ModelConfig, limit_second_moment, power_law_model


def balanced(density, atoms=(), beta=0.3):
    kappa = SignedMeasure.half_line(atoms, density)
    own = sum(w for _, w in atoms)
    lam = SignedMeasure.delay(0.0, [(0.0, density.mass() + own)])
    return ModelConfig(1.0, beta, lam, kappa)


def test_gamma_zero_closed_form(pl075):
    # c_factor * int K^2 = limit - sigma^2 identically
    assert c_factor(pl075) * pl075.l2.value == pytest.approx(limit_second_moment(pl075) - 1, rel=1e-13)
    assert c_factor(pl075) * 32 / 9 == pytest.approx(1 / 0.68 - 1, rel=1e-9)
    assert gamma(pl075, 0.0) == pytest.approx(limit_second_moment(pl075) - 1, rel=5e-3)


@pytest.mark.parametrize("alpha", [0.6, 0.75, 0.9])
def test_long_memory_constant_identity(alpha):
    # a^-2 int_0^inf x^-a (1+x)^-a dx = a^-2 B(1-a, 2a-1)
    beta_form = special.beta(1 - alpha, 2 * alpha - 1) / alpha**2
    assert long_memory_constant(alpha) == pytest.approx(beta_form, rel=1e-10)
    f = lambda x: x**-alpha * (1 + x) ** -alpha
    q = integrate.quad(f, 0, 1, epsabs=0, epsrel=1e-13, limit=200)[0] + integrate.quad(f, 1, np.inf, epsabs=0, epsrel=1e-13, limit=200)[0]
    assert long_memory_constant(alpha) == pytest.approx(q / alpha**2, rel=1e-9)


def test_memory_classes(pl075, pl15):
    assert classify_memory(pl075) == MemoryClass.LONG
    assert classify_memory(pl15) == MemoryClass.SHORT
    assert classify_memory(balanced(Exponential(1.0, 1.0))) == MemoryClass.SHORT


def test_sign_changing_infinite_first_moment_undetermined():
    m = balanced(PowerLaw(1.0, 0.75), atoms=[(1.0, -0.2)], beta=0.1)
    assert classify_memory(m) == MemoryClass.UNDETERMINED


def test_nonstationary_has_no_gamma():
    with pytest.raises(StationarityError):
        gamma(power_law_model(0.4), 1.0)
    with pytest.raises(StationarityError):
        classify_memory(power_law_model(0.75, beta=0.6))


def test_regimes(pl075, pl15):
    assert asymptotic_gamma(pl075, 100.0).regime == LONG
    assert asymptotic_gamma(pl15, 100.0).regime == SHORT
    crit = balanced(PowerLogLaw(1.0, 0.5, 1.0))
    assert asymptotic_gamma(crit, 100.0).regime == CRITICAL
    with pytest.raises(UnsupportedRegimeError):
        asymptotic_gamma(power_law_model(1.0), 10.0)
    with pytest.raises(UnsupportedRegimeError):
        asymptotic_gamma(balanced(Exponential(1.0, 1.0)), 10.0)


def test_long_memory_asymptote_formula(pl075):
    d = 1e3
    expect = c_factor(pl075) * long_memory_constant(0.75) * d**-0.5
    assert asymptotic_gamma(pl075, d).value == pytest.approx(expect, rel=1e-12)


def test_short_memory_converges(pl15):
    rep = verify_rate(pl15, [10.0, 100.0, 1000.0])
    assert rep.converging
    assert abs(rep.rows[-1][3] - 1) < 0.1


def test_beta_zero_rate_is_exact():
    rep = verify_rate(power_law_model(0.75, beta=0.0), [10.0, 100.0])
    assert rep.exact and all(r[1] == 0.0 for r in rep.rows)


def test_curve(pl075):
    c = gamma_curve(pl075, [0, 1, 10])
    assert c.memory_class == MemoryClass.LONG
    assert np.all(np.diff(c.values) < 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.0, 1e3), st.floats(0.01, 1e3))
def test_gamma_nonincreasing(d0, step):
    m = power_law_model(0.75)
    assert gamma(m, d0 + step) <= gamma(m, d0) * (1 + 1e-10)


def test_long_memory_not_summable(pl075):
    # partial sums grow like sqrt(N): the 10^4 partial sum is far above the 10^2 one
    s2 = sum(gamma(pl075, float(n)) for n in range(1, 101))
    s3 = sum(gamma(pl075, float(n)) for n in range(1, 1001))
    assert s3 / s2 > math.sqrt(10) * 0.8
