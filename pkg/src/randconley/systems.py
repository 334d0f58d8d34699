"""Evaluatable cocycles phi(t, omega, x) on 1-D phase spaces.

Every system implements ``flow(t, s, omega, x)``, the map
``phi(t, theta_s omega)`` applied to ``x``, vectorised over broadcastable
``t``, ``s`` and ``x``.  Evaluating at many base offsets in one call is what
makes pullback images along a fibre window cheap.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .geometry import PhaseSpace
from .noise import NoiseModel, NoisePath, shift

# results this far outside an interval are float noise at a fixed endpoint
_CLAMP_TOL = 1e-12


class NumericOverflow(ArithmeticError):
    pass


class CocycleSystem:
    """Base class: subclasses provide :meth:`_raw_flow`."""

    name = "system"
    closed_form = True

    def __init__(self, space: PhaseSpace, noise: NoiseModel):
        self.space = space
        self.noise = noise

    def _raw_flow(self, t, s, omega: NoisePath, x):
        raise NotImplementedError

    def flow(self, t, s, omega: NoisePath, x):
        t, s, x = np.broadcast_arrays(np.asarray(t, float), np.asarray(s, float),
                                      np.asarray(x, float))
        y = np.asarray(self._raw_flow(t, s, omega, x), dtype=float)
        if not np.all(np.isfinite(y)):
            raise NumericOverflow(f"{self.name}: non-finite state")
        return self._into_space(y)

    def _into_space(self, y):
        sp = self.space
        if sp.periodic:
            return np.mod(y, sp.extent)
        if np.any(y < sp.lo - _CLAMP_TOL) or np.any(y > sp.hi + _CLAMP_TOL):
            raise NumericOverflow(f"{self.name}: state left [{sp.lo}, {sp.hi}]")
        return np.clip(y, sp.lo, sp.hi)

    def describe(self) -> dict:
        return {"name": self.name, "space": self.space.to_dict(), "noise": self.noise.to_dict()}

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


def _scalar(y):
    return float(y) if np.ndim(y) == 0 else y


def eval(sys: CocycleSystem, t, omega: NoisePath, x):
    """phi(t, omega) x."""
    return _scalar(sys.flow(t, 0.0, omega, x))


def inverse_eval(sys: CocycleSystem, t, omega: NoisePath, y):
    """phi(t, omega)^{-1} y, computed as phi(-t, theta_t omega) y."""
    return _scalar(sys.flow(-np.asarray(t, float), t, omega, y))


def check_cocycle(sys: CocycleSystem, omega: NoisePath, t, s, xs) -> float:
    """Largest distance between phi(t+s, omega)x and phi(t, theta_s omega)phi(s, omega)x."""
    xs = np.asarray(xs, dtype=float)
    direct = sys.flow(t + s, 0.0, omega, xs)
    composed = sys.flow(t, 0.0, shift(omega, s), sys.flow(s, 0.0, omega, xs))
    if xs.size == 0:
        return 0.0
    return float(np.max(sys.space.distance(direct, composed)))


# ---------------------------------------------------------------------------
# closed forms

def cubic_flow(x, a):
    """Time-``a`` map of y' = y - y^3, valid for every real ``a`` on [-1, 1].

    x e^a / sqrt(1 - x^2 + x^2 e^{2a}), rearranged so that neither branch
    overflows.
    """
    x = np.asarray(x, dtype=float)
    a = np.asarray(a, dtype=float)
    x, a = np.broadcast_arrays(x, a)
    out = np.empty_like(x)
    pos = a > 0
    xp, ap = x[pos], a[pos]
    den = np.sqrt(xp * xp + (1.0 - xp * xp) * np.exp(-2.0 * ap))
    # 0 is fixed; guard the 0/0 when exp underflows
    out[pos] = np.where(xp == 0.0, 0.0, xp / np.where(den > 0, den, 1.0))
    xn, an = x[~pos], a[~pos]
    e = np.exp(an)
    out[~pos] = xn * e / np.sqrt(1.0 - xn * xn + xn * xn * e * e)
    return out


class CubicDeterministic(CocycleSystem):
    """x' = x^3 - x on [-1, 1]; equilibria -1, 0, 1 with 0 stable."""

    name = "CUBIC_DET"

    def __init__(self):
        super().__init__(PhaseSpace.interval(-1.0, 1.0), NoiseModel.trivial())

    def _raw_flow(self, t, s, omega, x):
        return cubic_flow(x, -t)


class CubicSDE(CocycleSystem):
    """Stratonovich dX = (X - X^3)(dt + o dW) on [-1, 1] via its explicit cocycle."""

    name = "CUBIC_SDE"

    def __init__(self, dt: float = 0.01, horizon: float = 25.0):
        super().__init__(PhaseSpace.interval(-1.0, 1.0), NoiseModel.wiener(dt, horizon))

    def _raw_flow(self, t, s, omega, x):
        return cubic_flow(x, t + omega.increment(s, t))


class Cos2Circle(CocycleSystem):
    """theta' = cos^2(theta/2) on the circle of length 2 pi; pi is the only equilibrium.

    In the chart u = tan(theta/2) the flow is u -> u + t/2.  The pole of the
    chart is the equilibrium itself, which no trajectory reaches in finite
    time, so each orbit stays on one branch of the chart.
    """

    name = "COS2_CIRCLE"

    def __init__(self):
        super().__init__(PhaseSpace.circle(2 * math.pi), NoiseModel.trivial())

    def _raw_flow(self, t, s, omega, x):
        th = np.mod(x, 2 * math.pi)
        th = np.where(th > math.pi, th - 2 * math.pi, th)  # (-pi, pi]
        fixed = np.isclose(th, math.pi, rtol=0.0, atol=1e-15)
        u = np.tan(np.where(fixed, 0.0, th) / 2.0) + t / 2.0
        return np.where(fixed, math.pi, 2.0 * np.arctan(u))


def gudermannian(y):
    return np.arcsin(np.tanh(y))


def inverse_gudermannian(x):
    return np.arctanh(np.sin(x))


def neg_cos_flow(t, x):
    """Time-t map of x' = -cos x on the circle (closed form).

    Equilibria at pi/2 (repelling) and 3 pi/2 (attracting).  On each arc
    between them the inverse Gudermannian linearises the flow.
    """
    x = np.mod(np.asarray(x, dtype=float) + math.pi / 2, 2 * math.pi) - math.pi / 2
    t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
    out = np.empty_like(x)
    left = x < math.pi / 2  # arc (-pi/2, pi/2): moves down
    z = x[~left] - math.pi  # arc (pi/2, 3pi/2), shifted: moves up
    # at the equilibria arctanh(+-1) is infinite and maps back onto them
    with np.errstate(divide="ignore"):
        out[left] = gudermannian(inverse_gudermannian(x[left]) - t[left])
        out[~left] = gudermannian(inverse_gudermannian(z) + t[~left]) + math.pi
    return out


def rk4(field: Callable, t, x, step: float):
    """Fixed-step classical Runge-Kutta for an autonomous scalar field.

    Each entry of ``t`` is covered by ``ceil(|t|/step)`` equal steps.
    """
    t = np.asarray(t, dtype=float)
    x = np.array(x, dtype=float, copy=True)
    t, x = np.broadcast_arrays(t, x)
    x = x.copy()
    nsteps = np.ceil(np.abs(t) / step - 1e-12).astype(np.int64)
    h = np.where(nsteps > 0, t / np.maximum(nsteps, 1), 0.0)
    for i in range(int(nsteps.max(initial=0))):
        live = nsteps > i
        xl, hl = x[live], h[live]
        k1 = field(xl)
        k2 = field(xl + 0.5 * hl * k1)
        k3 = field(xl + 0.5 * hl * k2)
        k4 = field(xl + hl * k3)
        x[live] = xl + hl / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    return x


class RotationConjugate(CocycleSystem):
    """phi(t, omega) = psi(theta_t omega) o phi0(t) o psi(omega)^{-1} on the circle.

    ``psi(omega) x = x + omega`` and ``phi0`` is the flow of x' = -cos x;
    the base flow rotates omega at unit speed.
    """

    name = "ROT_CONJ"

    def __init__(self, integrated: bool = False, step: float = 1e-3):
        super().__init__(PhaseSpace.circle(2 * math.pi), NoiseModel.rotation(2 * math.pi))
        self.integrated = integrated
        self.step = step
        self.closed_form = not integrated

    def base_flow(self, t, x):
        if self.integrated:
            return rk4(lambda y: -np.cos(y), t, x, self.step)
        return neg_cos_flow(t, x)

    def _raw_flow(self, t, s, omega, x):
        w = omega.base_point(s)
        return self.base_flow(t, x - w) + w + t

    def describe(self) -> dict:
        d = super().describe()
        d["evaluator"] = {"integrated": self.integrated, "step": self.step}
        return d


class IntegratedSystem(CocycleSystem):
    """Autonomous scalar vector field integrated with fixed-step RK4."""

    closed_form = False

    def __init__(self, name: str, space: PhaseSpace, field: Callable, step: float = 1e-3):
        super().__init__(space, NoiseModel.trivial())
        self.name = name
        self.field = field
        self.step = step

    def _raw_flow(self, t, s, omega, x):
        y = rk4(self.field, t, x, self.step)
        if not self.space.periodic:
            # RK4 can overshoot an invariant endpoint by round-off
            tol = 1e-6 * self.space.extent
            y = np.where((y < self.space.lo) & (y > self.space.lo - tol), self.space.lo, y)
            y = np.where((y > self.space.hi) & (y < self.space.hi + tol), self.space.hi, y)
        return y


SYSTEM_NAMES = ("CUBIC_DET", "COS2_CIRCLE", "CUBIC_SDE", "ROT_CONJ")


def make_system(name: str, *, dt: float = 0.01, horizon: float = 25.0,
                integrated: bool = False, step: float = 1e-3) -> CocycleSystem:
    """Built-in system by name; noise and integrator settings come from config."""
    key = name.upper()
    if key == "CUBIC_DET":
        if integrated:
            return IntegratedSystem("CUBIC_DET", PhaseSpace.interval(-1, 1),
                                    lambda x: x ** 3 - x, step)
        return CubicDeterministic()
    if key == "COS2_CIRCLE":
        if integrated:
            return IntegratedSystem("COS2_CIRCLE", PhaseSpace.circle(),
                                    lambda x: np.cos(x / 2) ** 2, step)
        return Cos2Circle()
    if key == "CUBIC_SDE":
        return CubicSDE(dt, horizon)
    if key == "ROT_CONJ":
        return RotationConjugate(integrated=integrated, step=step)
    raise KeyError(f"unknown system {name!r}; choose from {', '.join(SYSTEM_NAMES)}")
