import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import solve_ivp

from randconley.noise import NoiseModel, NoisePath, sample_path
from randconley.systems import (CubicDeterministic, CubicSDE, NumericOverflow, RotationConjugate,
                                check_cocycle, eval, inverse_eval, make_system, rk4)

TWO_PI = 2 * math.pi


def _ode(field, t, x):
    sol = solve_ivp(lambda _, y: field(y), (0.0, t), [x], rtol=1e-12, atol=1e-14)
    return float(sol.y[0, -1])


def test_cubic_det_closed_form_against_ode():
    sys = CubicDeterministic()
    omega = sample_path(sys.noise, 0)
    expected = 0.5 * math.exp(-1) / math.sqrt(0.75 + 0.25 * math.exp(-2))
    assert eval(sys, 1.0, omega, 0.5) == pytest.approx(expected, abs=1e-15)
    assert abs(eval(sys, 1.0, omega, 0.5) - _ode(lambda y: y ** 3 - y, 1.0, 0.5)) <= 1e-8


def test_cubic_det_fixed_points():
    sys = CubicDeterministic()
    omega = sample_path(sys.noise, 0)
    assert list(sys.flow(7.0, 0.0, omega, [-1.0, 0.0, 1.0])) == [-1.0, 0.0, 1.0]


def _zero_path(horizon=2.0, dt=0.01):
    m = NoiseModel.wiener(dt, horizon)
    return NoisePath.from_increments(m, np.zeros(2 * m.n_steps))


def test_cubic_sde_formula_with_zero_noise():
    sys = CubicSDE(0.01, 2.0)
    expected = 0.5 * math.e / math.sqrt(0.75 + 0.25 * math.e ** 2)
    assert eval(sys, 1.0, _zero_path(), 0.5) == pytest.approx(expected, abs=1e-15)


def test_cubic_sde_against_stratonovich_heun():
    # fine Brownian path with W_1 = 0, integrated with the Stratonovich Heun scheme
    dt, n = 1e-5, 100_000
    rng = np.random.default_rng(42)
    inc = rng.normal(0, math.sqrt(dt), n)
    inc -= inc.mean()
    m = NoiseModel.wiener(dt, 1.0)
    omega = NoisePath.from_increments(m, np.concatenate([np.zeros(n), inc]))
    assert abs(omega.increment(0.0, 1.0)) < 1e-9

    x = 0.5
    for dw in inc:
        g = x - x ** 3
        xp = x + g * (dt + dw)
        x = x + 0.5 * (g + (xp - xp ** 3)) * (dt + dw)
    got = eval(CubicSDE(dt, 1.0), 1.0, omega, 0.5)
    assert abs(got - x) <= 2e-3


def test_cubic_sde_equilibria():
    sys = CubicSDE(0.01, 10.0)
    for seed in range(5):
        omega = sample_path(sys.noise, seed)
        out = sys.flow(np.array([[3.0], [-4.5]]), 0.0, omega, [-1.0, 0.0, 1.0])
        assert np.array_equal(out, np.tile([-1.0, 0.0, 1.0], (2, 1)))


def test_inverse_round_trips():
    det = CubicDeterministic()
    o = sample_path(det.noise, 0)
    assert inverse_eval(det, 2.0, o, eval(det, 2.0, o, 0.3)) == pytest.approx(0.3, abs=1e-9)
    assert inverse_eval(det, 0.0, o, 0.3) == 0.3
    sde = CubicSDE(0.01, 5.0)
    o = sample_path(sde.noise, 9)
    assert inverse_eval(sde, 1.5, o, eval(sde, 1.5, o, -0.7)) == pytest.approx(-0.7, abs=1e-9)


def test_cos2_circle_fixed_point_and_forward_motion():
    sys = make_system("COS2_CIRCLE")
    o = sample_path(sys.noise, 0)
    assert eval(sys, 5.0, o, math.pi) == pytest.approx(math.pi, abs=1e-12)
    xs = np.linspace(0, TWO_PI, 400, endpoint=False)
    xs = xs[np.abs(xs - math.pi) > 1e-3]
    step = np.mod(sys.flow(0.05, 0.0, o, xs) - xs, TWO_PI)
    assert np.all((step > 0) & (step < math.pi))


def test_cos2_circle_against_ode():
    sys = make_system("COS2_CIRCLE")
    o = sample_path(sys.noise, 0)
    for x in (0.3, 2.0, 4.0, 6.0):
        ref = _ode(lambda y: np.cos(y / 2) ** 2, 3.0, x) % TWO_PI
        got = eval(sys, 3.0, o, x)
        assert min(abs(got - ref), TWO_PI - abs(got - ref)) <= 1e-8


def test_rot_conj_matches_conjugated_field():
    sys = RotationConjugate()
    o = sample_path(sys.noise, 4)
    w = o.omega
    # d/dt of psi(theta_t w) phi0(t) psi(w)^-1 x is 1 - cos(x - w - t)
    for x in (0.1, 1.5, 3.0, 5.5):
        sol = solve_ivp(lambda t, y: 1 - np.cos(y - w - t), (0, 2.0), [x], rtol=1e-11, atol=1e-12)
        ref = sol.y[0, -1] % TWO_PI
        got = eval(sys, 2.0, o, x)
        assert min(abs(got - ref), TWO_PI - abs(got - ref)) <= 1e-4


def test_rk4_matches_closed_form():
    xs = np.linspace(-0.9, 0.9, 7)
    got = rk4(lambda y: y ** 3 - y, 1.0, xs, 1e-3)
    expected = CubicDeterministic().flow(1.0, 0.0, sample_path(NoiseModel.trivial(), 0), xs)
    assert np.max(np.abs(got - expected)) < 1e-10


def test_out_of_domain_is_an_error():
    sys = CubicDeterministic()
    with pytest.raises(NumericOverflow):
        sys.flow(-1.0, 0.0, sample_path(sys.noise, 0), 1.5)


def test_make_system_unknown():
    with pytest.raises(KeyError):
        make_system("LORENZ")


# ---------------------------------------------------------------------------
# cocycle law

CLOSED = ["CUBIC_DET", "COS2_CIRCLE", "CUBIC_SDE", "ROT_CONJ"]


def _random_cocycle_residuals(name, trials, integrated=False, seed=0):
    sys = make_system(name, horizon=20.0, integrated=integrated)
    rng = np.random.default_rng(seed)
    lo, hi = sys.space.lo, sys.space.hi
    worst = 0.0
    for i in range(trials):
        omega = sample_path(sys.noise, int(rng.integers(0, 10**6)))
        t, s = rng.uniform(-4, 4, 2)
        xs = rng.uniform(lo, hi, 5)
        worst = max(worst, check_cocycle(sys, omega, t, s, xs))
    return worst


@pytest.mark.parametrize("name", CLOSED)
def test_cocycle_closed_forms(name):
    assert _random_cocycle_residuals(name, 100) <= 1e-9


@pytest.mark.parametrize("name", CLOSED)
def test_cocycle_identity_at_zero(name):
    sys = make_system(name, horizon=5.0)
    o = sample_path(sys.noise, 1)
    assert check_cocycle(sys, o, 0.0, 0.0, [0.1, 0.5, 0.9]) == 0.0


def test_cocycle_integrated_rot_conj():
    assert _random_cocycle_residuals("ROT_CONJ", 100, integrated=True) <= 1e-5


@given(st.floats(-0.99, 0.99), st.floats(-0.99, 0.99), st.floats(-5, 5), st.integers(0, 50))
def test_interval_systems_monotone(x, y, t, seed):
    if x == y:
        return
    sys = CubicSDE(0.01, 6.0)
    o = sample_path(sys.noise, seed)
    fx, fy = sys.flow(t, 0.0, o, [x, y])
    if abs(fx - fy) < 1e-15:
        return  # both collapsed onto an endpoint in floating point
    assert (fx < fy) == (x < y)
