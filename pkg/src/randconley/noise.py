"""Sampled realisations of the driving noise and their shift flow.

Three base flows are supported: the trivial one-point flow used for
deterministic systems, two-sided Brownian paths stored as increment
lattices on ``[-horizon, horizon]``, and the rotation ``omega -> omega + s``
of a circle.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

_TIME_SLACK = 1e-9


class HorizonExceeded(ValueError):
    """An evaluation asked for noise outside the sampled window."""

    def __init__(self, t, limit):
        self.t = t
        self.limit = limit
        super().__init__(
            f"noise evaluated at time {t:g}, beyond the sampled window; "
            f"largest valid |t| is {limit:g}")


@dataclass(frozen=True)
class NoiseModel:
    kind: str  # "trivial" | "wiener" | "rotation"
    dt: float = 0.0
    horizon: float = 0.0
    circumference: float = 0.0

    def __post_init__(self):
        if self.kind == "wiener":
            if self.dt <= 0 or self.horizon <= 0:
                raise ValueError("Wiener noise needs positive dt and horizon")
            steps = self.horizon / self.dt
            if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
                raise ValueError("dt must divide horizon")
        elif self.kind == "rotation":
            if self.circumference <= 0:
                raise ValueError("rotation noise needs a positive circumference")
        elif self.kind != "trivial":
            raise ValueError(f"unknown noise kind {self.kind!r}")

    @classmethod
    def trivial(cls) -> "NoiseModel":
        return cls("trivial")

    @classmethod
    def wiener(cls, dt: float = 0.01, horizon: float = 25.0) -> "NoiseModel":
        return cls("wiener", dt=float(dt), horizon=float(horizon))

    @classmethod
    def rotation(cls, circumference: float = 2 * math.pi) -> "NoiseModel":
        return cls("rotation", circumference=float(circumference))

    @property
    def n_steps(self) -> int:
        """Lattice steps on each side of time zero (Wiener only)."""
        return int(round(self.horizon / self.dt))

    def to_dict(self) -> dict:
        d = {"kind": self.kind}
        if self.kind == "wiener":
            d.update(dt=self.dt, horizon=self.horizon)
        elif self.kind == "rotation":
            d.update(circumference=self.circumference)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        return cls(d["kind"], dt=d.get("dt", 0.0), horizon=d.get("horizon", 0.0),
                   circumference=d.get("circumference", 0.0))


@dataclass(frozen=True, eq=False)
class NoisePath:
    """One realisation omega, viewed from base offset ``offset`` (i.e. theta_offset omega).

    For Wiener paths ``lattice`` holds the two-sided partial sums B_j at times
    ``j*dt`` for ``j = -N..N`` with ``B_0 = 0``; the value at time t of the
    shifted path is ``B(offset + t) - B(offset)``.
    """

    model: NoiseModel
    seed: int
    lattice: np.ndarray | None = field(default=None, repr=False)
    omega0: float = 0.0
    offset: float = 0.0

    @classmethod
    def from_increments(cls, model: NoiseModel, increments, seed: int = -1) -> "NoisePath":
        """Build a Wiener path from its ``2N`` increments, earliest first."""
        inc = np.asarray(increments, dtype=float)
        n = model.n_steps
        if inc.shape != (2 * n,):
            raise ValueError(f"expected {2 * n} increments, got {inc.shape}")
        lattice = np.empty(2 * n + 1)
        lattice[n] = 0.0
        lattice[n + 1:] = np.cumsum(inc[n:])
        lattice[:n] = -np.cumsum(inc[:n][::-1])[::-1]
        lattice.flags.writeable = False
        return cls(model, seed, lattice=lattice)

    def _partial_sum(self, tau):
        """Piecewise-linear interpolation of the lattice at absolute times ``tau``."""
        m = self.model
        tau = np.asarray(tau, dtype=float)
        limit = m.horizon
        bad = np.abs(tau) > limit + _TIME_SLACK
        if np.any(bad):
            worst = float(np.max(np.abs(tau)))
            raise HorizonExceeded(worst - self.offset if worst else worst,
                                  max(0.0, limit - abs(self.offset)))
        n = m.n_steps
        pos = np.clip(tau / m.dt + n, 0.0, 2 * n)
        j = np.minimum(np.floor(pos).astype(np.int64), 2 * n - 1)
        frac = pos - j
        lat = self.lattice
        return lat[j] + frac * (lat[j + 1] - lat[j])

    def increment(self, s, t):
        """``value(shift(self, s), t)`` vectorised over ``s`` and ``t``."""
        if self.model.kind != "wiener":
            return np.zeros(np.broadcast(np.asarray(s), np.asarray(t)).shape)
        s = np.asarray(s, dtype=float) + self.offset
        t = np.asarray(t, dtype=float)
        return self._partial_sum(s + t) - self._partial_sum(s)

    def base_point(self, s=0.0):
        """Rotation coordinate of ``shift(self, s)``, vectorised over ``s``."""
        c = self.model.circumference
        return np.mod(self.omega0 + self.offset + np.asarray(s, dtype=float), c)

    @property
    def omega(self) -> float:
        """Current base point of a rotation path."""
        return float(self.base_point(0.0))

    def describe(self) -> dict:
        return {"noise": self.model.to_dict(), "seed": self.seed, "offset": self.offset}


def sample_path(model: NoiseModel, seed: int) -> NoisePath:
    """Draw one realisation; a pure function of ``(model, seed)``."""
    rng = np.random.default_rng(seed)
    if model.kind == "wiener":
        inc = rng.normal(0.0, math.sqrt(model.dt), size=2 * model.n_steps)
        return NoisePath.from_increments(model, inc, seed=seed)
    if model.kind == "rotation":
        return NoisePath(model, seed, omega0=float(rng.uniform(0.0, model.circumference)))
    return NoisePath(model, seed)


def value(path: NoisePath, t):
    """Noise coordinate at time t: W_t for Wiener, the base point for rotations."""
    kind = path.model.kind
    if kind == "wiener":
        out = path.increment(0.0, t)
        return float(out) if np.ndim(out) == 0 else out
    if kind == "rotation":
        # constant in t; time enters through shift
        return path.omega
    return 0.0


def shift(path: NoisePath, s: float) -> NoisePath:
    """theta_s applied to the path; a new view sharing the same lattice."""
    if path.model.kind == "trivial":
        return path
    if path.model.kind == "rotation":
        c = path.model.circumference
        return NoisePath(path.model, path.seed, omega0=float(np.mod(path.omega0 + path.offset + s, c)))
    return NoisePath(path.model, path.seed, lattice=path.lattice, offset=path.offset + float(s))
