import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from randconley.noise import HorizonExceeded, NoiseModel, NoisePath, sample_path, shift, value


@pytest.fixture(scope="module")
def wiener():
    return NoiseModel.wiener(dt=0.01, horizon=10.0)


def test_model_validation():
    with pytest.raises(ValueError):
        NoiseModel.wiener(dt=0.03, horizon=1.0)
    with pytest.raises(ValueError):
        NoiseModel("levy")
    assert NoiseModel.from_dict(NoiseModel.wiener(0.01, 5).to_dict()) == NoiseModel.wiener(0.01, 5)


def test_trivial_path_is_unique():
    m = NoiseModel.trivial()
    p = sample_path(m, 3)
    assert value(p, 5.0) == 0.0
    assert shift(p, 2.0) is p


def test_sampling_is_deterministic(wiener):
    a = sample_path(wiener, 7)
    b = sample_path(wiener, 7)
    assert np.array_equal(a.lattice, b.lattice)
    assert not np.array_equal(a.lattice, sample_path(wiener, 8).lattice)


def test_w0_is_zero(wiener):
    p = sample_path(wiener, 1)
    assert value(p, 0.0) == 0.0
    assert value(shift(shift(p, 1.37), -4.2), 0.0) == 0.0


def test_lattice_values_are_partial_sums():
    m = NoiseModel.wiener(dt=0.5, horizon=2.0)
    inc = np.array([0.1, -0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8])
    p = NoisePath.from_increments(m, inc)
    assert value(p, 0.5) == pytest.approx(-0.5)
    assert value(p, 1.0) == pytest.approx(0.1)
    assert value(p, -0.5) == pytest.approx(-0.4)
    assert value(p, -2.0) == pytest.approx(-(0.1 - 0.2 + 0.3 + 0.4))
    # linear in between
    assert value(p, 0.25) == pytest.approx(-0.25)


def test_shift_rebasing_example(wiener):
    p = sample_path(wiener, 2)
    assert value(shift(p, 1.0), -1.0) == pytest.approx(-value(p, 1.0), abs=1e-12)


def test_shift_rule_on_random_pairs(wiener):
    p = sample_path(wiener, 11)
    rng = np.random.default_rng(0)
    for s, t in rng.uniform(-4.5, 4.5, size=(100, 2)):
        assert abs(value(shift(p, s), t) - (value(p, t + s) - value(p, s))) <= 1e-12


def test_horizon_exceeded_names_limit(wiener):
    p = sample_path(wiener, 0)
    with pytest.raises(HorizonExceeded, match="largest valid"):
        value(p, 10.5)
    with pytest.raises(HorizonExceeded) as info:
        value(shift(p, 4.0), 7.0)
    assert info.value.limit == pytest.approx(6.0)


def test_rotation_model():
    m = NoiseModel.rotation(2 * math.pi)
    p = NoisePath(m, 0, omega0=0.5)
    assert shift(p, math.pi).omega == pytest.approx(0.5 + math.pi)
    assert value(p, 3.0) == 0.5
    assert shift(shift(p, 5.0), 4.0).omega == pytest.approx(shift(p, 9.0).omega)
    omegas = [sample_path(m, s).omega for s in range(200)]
    assert min(omegas) >= 0 and max(omegas) < 2 * math.pi


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
def test_shift_group_law(s1, s2, t):
    p = sample_path(NoiseModel.wiener(0.01, 10.0), 5)
    lhs = value(shift(shift(p, s1), s2), t)
    rhs = value(shift(p, s1 + s2), t)
    assert abs(lhs - rhs) <= 1e-12


def test_brownian_variance():
    # 10^4 seeds on a short window; Var W_1 = 1
    m = NoiseModel.wiener(0.01, 1.0)
    w1 = np.array([value(sample_path(m, s), 1.0) for s in range(10_000)])
    assert w1.var() == pytest.approx(1.0, abs=0.05)


def test_shift_preserves_distribution():
    m = NoiseModel.wiener(0.01, 4.0)
    paths = [sample_path(m, s) for s in range(10_000)]
    a = np.array([value(p, 1.0) for p in paths])
    b = np.array([value(shift(p, 2.0), 1.0) for p in paths])
    # asymptotic 1% critical value for two samples of 10^4
    crit = 1.63 * math.sqrt(2 / 10_000)
    assert stats.ks_2samp(a, b).statistic < crit
