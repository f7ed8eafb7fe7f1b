import math

import numpy as np
import pytest

from lmvol import rng
from lmvol.discrete import (
    DiscreteModel,
    FiniteSeq,
    FromKernel,
    PowerLawSeq,
    discrete_memory,
    discrete_stationarity,
    k_seq,
    simulate_discrete,
    square_sum,
)
from lmvol.errors import KERNEL_NOT_L2, ConfigError, MemoryClass, NonStationary, Stationary
from lmvol.measures import PowerLogLaw, SignedMeasure
from lmvol.moments import ModelConfig, power_law_model
from lmvol.simulate import SimConfig, simulate


def test_finite_seq_tail_sums():
    m = DiscreteModel(1.0, 0.5, FiniteSeq((0.5, 0.3, 0.2)))
    k, _ = m.seq.k_table(4)
    assert np.allclose(k, [0.5, 0.2, 0.0, 0.0, 0.0])
    assert square_sum(m)[0] == pytest.approx(0.29)


def test_power_law_seq_against_direct_sum():
    seq = PowerLawSeq(1.0, 0.75)
    k, _ = seq.k_table(5)
    direct = [sum((j + 1.0) ** -1.75 for j in range(n + 1, 2_000_000)) for n in range(6)]
    # the truncated direct sum misses about 2e6^-0.75 / 0.75
    assert np.allclose(k, direct, atol=2e-4)
    assert np.all(np.diff(k) < 0)
    assert k_seq(DiscreteModel(1, 0.3, seq), 3) == k[3]


def test_square_sum_oracle():
    # bracket sum_j K_j^2 with (j+2)^-a / a <= K_j <= (j+1)^-a / a
    a, M = 0.75, 200_000
    seq = PowerLawSeq(1.0, a)
    k, _ = seq.k_table(M - 1)
    head = float(np.sum(k**2))
    lo = head + (M + 2) ** (1 - 2 * a) / (a**2 * (2 * a - 1))
    hi = head + (M) ** (1 - 2 * a) / (a**2 * (2 * a - 1))
    total, _ = square_sum(DiscreteModel(1.0, 0.3, seq))
    assert lo <= total <= hi
    assert hi - lo < 2e-6


def test_stationarity_verdicts():
    assert discrete_stationarity(DiscreteModel(1, 0.3, PowerLawSeq(1.0, 0.4))) == NonStationary(KERNEL_NOT_L2)
    v = discrete_stationarity(DiscreteModel(1, 0.3, PowerLawSeq(1.0, 0.75)))
    assert isinstance(v, Stationary)
    assert isinstance(discrete_stationarity(DiscreteModel(1, 0.0, PowerLawSeq(1.0, 0.4))), Stationary)


def test_memory_classes():
    assert discrete_memory(DiscreteModel(1, 0.3, PowerLawSeq(1.0, 0.75))) == MemoryClass.LONG
    assert discrete_memory(DiscreteModel(1, 0.3, PowerLawSeq(1.0, 1.5))) == MemoryClass.SHORT
    assert discrete_memory(DiscreteModel(1, 0.3, FiniteSeq((1.0,)))) == MemoryClass.SHORT


def test_bad_inputs():
    with pytest.raises(ConfigError):
        DiscreteModel(1, 0.3, FiniteSeq((1.0,)), noise="cauchy")
    with pytest.raises(ConfigError):
        FiniteSeq((-1.0,))
    with pytest.raises(ConfigError):
        PowerLawSeq(1.0, 0.0)


def test_rademacher_exact_values():
    m = DiscreteModel(2.0, 0.5, FiniteSeq((0.4, 0.6)), noise="rademacher")
    e = simulate_discrete(m, 3, 4, seed=8)
    for p in range(4):
        xi = rng.rademacher(8, p, 3)
        V1 = 2.0
        V2 = 2.0 + 0.5 * 0.6 * V1 * xi[0]  # K_0 = a_1
        V3 = 2.0 + 0.5 * (0.6 * V2 * xi[1] + 0.0 * V1 * xi[0])
        assert e.V[:, p].tolist() == [V1, V2, V3]
        assert np.array_equal(np.abs(e.U[:, p]), np.abs(e.V[:, p]))
        assert e.X[3, p] == pytest.approx(V1 * xi[0] + V2 * xi[1] + V3 * xi[2])


@pytest.mark.parametrize("noise", ["normal", "rademacher"])
def test_mean_and_uncorrelated(noise):
    m = DiscreteModel(1.0, 0.3, PowerLawSeq(1.0, 0.75), noise=noise)
    e = simulate_discrete(m, 200, 4000, seed=21)
    v = e.V[-1]
    assert abs(v.mean() - 1.0) < 3 * v.std() / math.sqrt(len(v))
    for lag in (1, 5):
        u = e.U[-1] * e.U[-1 - lag]
        assert abs(u.mean()) < 3 * u.std() / math.sqrt(len(u))


def test_conditional_variance_slope():
    # E[U_n^2 | past] = V_n^2, so regressing U^2 on V^2 gives slope 1
    m = DiscreteModel(1.0, 0.3, PowerLawSeq(1.0, 0.75))
    e = simulate_discrete(m, 100, 5000, seed=2)
    x = (e.V[50:] ** 2).ravel()
    y = (e.U[50:] ** 2).ravel()
    slope = np.cov(x, y)[0, 1] / np.var(x, ddof=1)
    assert slope == pytest.approx(1.0, abs=0.05)


def test_threads_do_not_change_values():
    m = DiscreteModel(1.0, 0.3, PowerLawSeq(1.0, 0.75))
    a = simulate_discrete(m, 50, 300, seed=4, threads=1)
    b = simulate_discrete(m, 50, 300, seed=4, threads=3)
    assert np.array_equal(a.V, b.V)


def _plog_model():
    d = PowerLogLaw(1.0, 0.5, 1.0)
    return ModelConfig(1.0, 0.3, SignedMeasure.delay(0.0, [(0.0, d.mass())]), SignedMeasure.half_line(density=d))


@pytest.mark.parametrize("model", [power_law_model(0.75), power_law_model(1.5, beta=0.5), _plog_model()])
def test_from_kernel_bit_exact(model):
    h, n, paths, seed = 0.01, 300, 6, 17
    cont = simulate(SimConfig(model, n * h, h, paths, seed=seed))
    disc = simulate_discrete(DiscreteModel(model.sigma, model.beta, FromKernel(model, h)), n + 1, paths, seed)
    assert np.array_equal(cont.V, disc.V)
