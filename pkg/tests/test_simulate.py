import math

import numpy as np
import pytest

from lmvol import simulate as simmod
from lmvol.errors import ConfigError, GridError
from lmvol.measures import SignedMeasure
from lmvol.moments import ModelConfig, power_law_model, solve_second_moment
from lmvol.simulate import (
    SimConfig,
    empirical_autocov,
    empirical_moments,
    returns_efficiency,
    sample_moments,
    scheme_cov,
    scheme_second_moment,
    simulate,
)


def test_beta_zero_black_scholes():
    m = power_law_model(0.75, sigma=0.4, beta=0.0, mu=0.05)
    sim = SimConfig(m, 1.0, 0.01, 3, seed=4, s0=2.0)
    e = simulate(sim)
    assert np.all(e.V == 0.4)
    for p in range(3):
        B = np.concatenate([[0.0], np.cumsum(e.brownian_increments(p))])
        assert np.allclose(e.X[:, p], 0.4 * B, atol=1e-13)
        gbm = 2.0 * np.exp((0.05 - 0.08) * e.grid + 0.4 * B)
        assert np.allclose(e.S[:, p], gbm, rtol=1e-12)


def test_three_step_hand_calculation():
    h, sigma, beta = 0.1, 1.0, 0.5
    kappa = SignedMeasure.half_line([(h, 1.0)])
    lam = SignedMeasure.delay(0.0, [(0.0, 1.0)])
    m = ModelConfig(sigma, beta, lam, kappa)
    assert m.kernel.eval(h) == 1.0 and m.kernel.eval(2 * h) == 0.0
    e = simulate(SimConfig(m, 3 * h, h, 1, seed=11))
    dB = e.brownian_increments(0)
    V1 = sigma + beta * sigma * dB[0]
    V2 = sigma + beta * V1 * dB[1]
    assert e.V[1, 0] == pytest.approx(V1, abs=1e-15)
    assert e.V[2, 0] == pytest.approx(V2, abs=1e-15)
    assert e.X[3, 0] == pytest.approx(sigma * dB[0] + V1 * dB[1] + V2 * dB[2], abs=1e-14)


def test_paths_prefix_and_threads(pl075):
    a = simulate(SimConfig(pl075, 2.0, 0.01, 4, seed=3))
    b = simulate(SimConfig(pl075, 2.0, 0.01, 8, seed=3))
    assert np.array_equal(a.V, b.V[:, :4]) and np.array_equal(a.S, b.S[:, :4])
    c = simulate(SimConfig(pl075, 2.0, 0.01, 300, seed=3), threads=1)
    d = simulate(SimConfig(pl075, 2.0, 0.01, 300, seed=3), threads=4)
    assert np.array_equal(c.V, d.V) and np.array_equal(c.X, d.X)


def test_chunk_size_irrelevant(pl075, monkeypatch):
    ref = simulate(SimConfig(pl075, 1.0, 0.01, 7, seed=1)).V
    monkeypatch.setattr(simmod, "CHUNK", 2)
    assert np.array_equal(simulate(SimConfig(pl075, 1.0, 0.01, 7, seed=1)).V, ref)


def test_config_checks(pl075):
    with pytest.raises(ConfigError):
        SimConfig(pl075, 1.0, 0.01, 0)
    with pytest.raises(ConfigError):
        SimConfig(pl075, 1.0, 0.01, 1, stride=3)
    with pytest.raises(GridError):
        SimConfig(pl075, 1.0, 0.3, 1)


def test_off_grid_time(pl075):
    e = simulate(SimConfig(pl075, 1.0, 0.01, 2, stride=10))
    assert e.index(0.5) == 5
    with pytest.raises(GridError):
        e.index(0.55)
    with pytest.raises(GridError):
        e.index(2.0)


def test_estimator_edge_cases(pl075):
    e = simulate(SimConfig(pl075, 2.0, 0.01, 5, stride=10))
    with pytest.raises(GridError):
        returns_efficiency(e, 1.0, 0.5, 0.0)
    assert returns_efficiency(e, 0.0, 1.0, 0.0).degenerate
    one = sample_moments(np.array([1.0]))
    assert one.degenerate and math.isnan(one.se_mean)


def test_scheme_moments_close_to_solver(pl075):
    f = scheme_second_moment(pl075, 2000, 0.01)
    sol = solve_second_moment(pl075, 20.0, 0.01)
    assert np.max(np.abs(f / sol.values - 1)) < 5e-3


def test_scheme_moments_match_monte_carlo(pl075):
    sim = SimConfig(pl075, 5.0, 0.01, 4000, seed=99, stride=10)
    e = simulate(sim)
    f = scheme_second_moment(pl075, 500, 0.01)
    mom = empirical_moments(e, 5.0)
    assert abs(mom.mean - 1.0) < 3 * mom.se_mean
    assert abs(mom.var - (f[-1] - 1)) < 3 * mom.se_var
    c = empirical_autocov(e, 4.0, 1.0)
    assert abs(c.cov - scheme_cov(pl075, 400, 100, 0.01, f)) < 3 * c.se
    r = returns_efficiency(e, 1.0, 2.0, 1.0)
    assert abs(r.corr) < 3 * r.se
    # isometry: E[X_T^2] = h sum E[V_i^2]
    x2 = e.X[-1] ** 2
    assert abs(x2.mean() - 0.01 * f[:500].sum()) < 3 * x2.std() / math.sqrt(len(x2))


def test_martingale_increments_orthogonal(pl075):
    e = simulate(SimConfig(pl075, 4.0, 0.01, 3000, seed=5, stride=100))
    d1 = e.X[2] - e.X[1]
    d2 = e.X[4] - e.X[3]
    prod = d1 * d2
    assert abs(prod.mean()) < 3 * prod.std() / math.sqrt(len(prod))
