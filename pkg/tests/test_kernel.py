import math
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from lmvol.errors import Divergent, DomainError, Finite, StationarityError, UnbalancedError
from lmvol.kernel import Kernel, kernel_table, l1_norm, l2_norm_sq, overlap
from lmvol.measures import Exponential, PowerLaw, PowerLogLaw, SignedMeasure


def power_kernel(alpha, c=1.0):
    d = PowerLaw(c, alpha)
    return Kernel(SignedMeasure.delay(0.0, [(0.0, d.mass())]), SignedMeasure.half_line(density=d))


def closed(alpha, x):
    return (1.0 / alpha) * (1.0 + x) ** -alpha


@pytest.fixture(scope="module")
def step_kernel():
    # kappa = one atom at 2, lambda = one atom at 0
    return Kernel(SignedMeasure.delay(0.0, [(0.0, 1.0)]), SignedMeasure.half_line([(2.0, 1.0)]))


def test_closed_form_on_log_grid():
    k = power_kernel(0.75)
    x = np.geomspace(1e-3, 1e4, 400)
    assert np.max(np.abs(k.eval(x) - closed(0.75, x))) < 1e-10


def test_eval_domain():
    k = power_kernel(0.75)
    with pytest.raises(DomainError):
        k.eval(0.0)
    with pytest.raises(DomainError):
        k.eval(-1.0)
    assert k.eval(0.0, side="right") == pytest.approx(1 / 0.75)


def test_far_field_small():
    assert power_kernel(0.75).eval(1e6) < 1e-2


def test_karamata_asymptote():
    # K(x) ~ x^-alpha L(x) / alpha with L -> c for the plain power law
    for a in (0.6, 0.75, 1.5):
        k = power_kernel(a)
        x = 1e4
        assert k.eval(x) * a * x**a == pytest.approx(1.0, rel=1e-2)


def test_step_kernel(step_kernel):
    k = step_kernel
    assert k.eval(1.0) == 1.0
    assert k.eval(3.0) == 0.0
    assert k.eval(2.0) == 1.0
    assert k.eval(2.0, side="left") == 1.0
    assert k.eval(2.0, side="right") == 0.0
    assert l2_norm_sq(k).value == pytest.approx(2.0, rel=1e-9)
    assert overlap(k, 1.0) == pytest.approx(1.0, rel=1e-9)


def test_unbalanced_rejected():
    d = PowerLaw(1.0, 0.75)
    with pytest.raises(UnbalancedError):
        Kernel(SignedMeasure.delay(0.0, [(0.0, 1.0)]), SignedMeasure.half_line(density=d))


def test_l2_closed_form():
    k = power_kernel(0.75)
    assert abs(l2_norm_sq(k).value - 32 / 9) < 1e-6
    pure = l2_norm_sq(k, horizon=1e3, step=0.01, analytic_tail=False)
    assert abs(pure.value - 32 / 9) < 1e-3


@pytest.mark.parametrize("alpha", [0.55, 0.75, 1.0, 2.5])
def test_l2_matches_formula(alpha):
    # int_0^inf a^-2 (1+x)^-2a dx = 1 / (a^2 (2a - 1))
    v = l2_norm_sq(power_kernel(alpha)).value
    assert v == pytest.approx(1 / (alpha**2 * (2 * alpha - 1)), rel=1e-7)


def test_l1():
    assert l1_norm(power_kernel(1.5)).value == pytest.approx(4 / 3, rel=1e-8)
    assert isinstance(l1_norm(power_kernel(0.75)), Divergent)


def test_divergence_verdicts():
    assert isinstance(l2_norm_sq(power_kernel(0.4)), Divergent)
    assert isinstance(l2_norm_sq(power_kernel(0.5)), Divergent)

    def plog(p):
        d = PowerLogLaw(1.0, 0.5, p)
        return Kernel(SignedMeasure.delay(0.0, [(0.0, d.mass())]), SignedMeasure.half_line(density=d))

    assert isinstance(l2_norm_sq(plog(1.0)), Finite)
    assert isinstance(l2_norm_sq(plog(0.25)), Divergent)
    assert isinstance(l2_norm_sq(plog(0.5)), Divergent)


@pytest.mark.parametrize("delta", [0.0, 1.0, 10.0, 100.0])
def test_overlap_against_quad(delta):
    k = power_kernel(0.75)
    ref, _ = integrate.quad(lambda s: closed(0.75, s) * closed(0.75, s + delta), 0, np.inf, epsabs=0, epsrel=1e-11, limit=400)
    assert overlap(k, delta) == pytest.approx(ref, rel=1e-7)


def test_overlap_needs_l2():
    with pytest.raises(StationarityError):
        overlap(power_kernel(0.4), 1.0)


def test_exponential_kernel_closed_form():
    # kappa = c e^-rs ds  =>  K(x) = (c / r) e^-r x
    d = Exponential(2.0, 0.5)
    k = Kernel(SignedMeasure.delay(0.0, [(0.0, d.mass())]), SignedMeasure.half_line(density=d))
    x = np.array([0.1, 1.0, 10.0])
    assert np.allclose(k.eval(x), 4.0 * np.exp(-0.5 * x), rtol=1e-12)
    assert l2_norm_sq(k).value == pytest.approx(16.0, rel=1e-7)


def test_delay_density_gives_negative_part():
    # lambda with a density on [0, 1]: K(x) for x < tau subtracts the remaining lambda mass
    lam_d = Exponential(1.0, 1.0)
    kap = PowerLaw(1.0, 1.5)
    lam_mass = 1 - math.exp(-1.0)
    lam = SignedMeasure.delay(1.0, [(0.0, kap.mass() - lam_mass)], lam_d)
    k = Kernel(lam, SignedMeasure.half_line(density=kap))
    x = 0.5
    expect = -(math.exp(-0.5) - math.exp(-1.0)) + kap.upper(x)
    assert k.eval(x) == pytest.approx(expect, rel=1e-10)
    assert k.eval(2.0) == pytest.approx(kap.upper(2.0), rel=1e-12)


def test_table_includes_zero():
    t = kernel_table(power_kernel(0.75), [0.0, 1.0])
    assert t[0] == pytest.approx(4 / 3) and t[1] == pytest.approx(closed(0.75, 1.0))


@settings(max_examples=30, deadline=None)
@given(st.floats(0.55, 3.0), st.lists(st.floats(1e-3, 1e5), min_size=2, max_size=10))
def test_nonnegative_kappa_gives_nonincreasing_kernel(alpha, xs):
    k = power_kernel(alpha)
    vals = k.eval(np.sort(xs))
    assert np.all(np.diff(vals) <= 1e-15)
    assert np.all(vals >= 0)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.55, 2.0), st.floats(0.0, 500.0))
def test_overlap_cauchy_schwarz(alpha, delta):
    k = power_kernel(alpha)
    l2 = l2_norm_sq(k).value
    ov = overlap(k, delta)
    assert 0 <= ov <= l2 * (1 + 1e-9)


def test_speed():
    t0 = time.perf_counter()
    k = power_kernel(0.75)
    k.eval(np.geomspace(1e-3, 1e4, 400))
    l2_norm_sq(k)
    l2_norm_sq(k, horizon=1e3, step=0.01, analytic_tail=False)
    assert time.perf_counter() - t0 < 1.0
