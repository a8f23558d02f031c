"""Alternating random shears on the torus [0, 2pi)^2.

One composed step applies a horizontal shear for duration tau1, then a
vertical shear for duration tau2: (q, p) -> (q + tau1 f1(p), p) ->
(q', p + tau2 f2(q')).  Durations are iid uniform on [0, horizon].
Coordinates are reduced mod 2pi after every shear; the vertical speed
f2 therefore always sees the representative of q in [0, 2pi), frozen
for the whole shear.  All maps act elementwise on arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng
from .profiles import TWO_PI, ShearModel, wrap_angle


class TorusPoint(NamedTuple):
    q: float
    p: float

    @staticmethod
    def make(q, p) -> "TorusPoint":
        return TorusPoint(float(wrap_angle(q)), float(wrap_angle(p)))


def torus_dist(q1, p1, q2, p2):
    dq = np.abs(wrap_angle(np.asarray(q1, dtype=float) - q2))
    dq = np.minimum(dq, TWO_PI - dq)
    dp = np.abs(wrap_angle(np.asarray(p1, dtype=float) - p2))
    dp = np.minimum(dp, TWO_PI - dp)
    return np.hypot(dq, dp)


@dataclass(frozen=True)
class Schedule:
    """Alternating durations (tau_1, tau_2, ..., tau_2m); odd slots are
    horizontal, even slots vertical.  seed is None for explicit schedules."""
    durations: np.ndarray
    horizon: float
    seed: object = None

    def __post_init__(self):
        d = np.atleast_1d(np.asarray(self.durations, dtype=float))
        if d.ndim != 1 or len(d) % 2 != 0:
            raise ValueError("durations must be a flat list of even length")
        if np.any(d < 0.0):
            raise ValueError("durations must be nonnegative")
        object.__setattr__(self, "durations", d)

    @property
    def n_steps(self) -> int:
        return len(self.durations) // 2

    def pairs(self) -> np.ndarray:
        return self.durations.reshape(-1, 2)


def sample_schedule(seed: int, m: int, horizon: float, sample: int = 0) -> Schedule:
    """Schedule of m composed steps; duration i is a pure function of
    (seed, sample, i) and can be regenerated in isolation."""
    i = np.arange(2 * m, dtype=np.uint64)
    d = rng.durations(seed, np.uint64(sample), i, horizon)
    return Schedule(durations=d, horizon=horizon, seed=seed)


def shear_step(q, p, tau, axis: str, model: ShearModel):
    """One shear; returns (q', p', J) with J the 2x2 Jacobian (dq, dp rows)."""
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    J = np.zeros(np.broadcast(q, p).shape + (2, 2))
    J[..., 0, 0] = 1.0
    J[..., 1, 1] = 1.0
    if axis == "h":
        q2 = wrap_angle(q + tau * model.f1.eval(p, 0))
        p2 = p + np.zeros_like(q2)
        J[..., 0, 1] = tau * model.f1.eval(p, 1)
    elif axis == "v":
        p2 = wrap_angle(p + tau * model.f2.eval(q, 0))
        q2 = q + np.zeros_like(p2)
        J[..., 1, 0] = tau * model.f2.eval(q, 1)
    else:
        raise ValueError("axis must be 'h' or 'v'")
    return q2, p2, J


def step(q, p, tau1, tau2, model: ShearModel):
    """Composed step (vertical after horizontal) with its Jacobian."""
    q1, p1, Jh = shear_step(q, p, tau1, "h", model)
    q2, p2, Jv = shear_step(q1, p1, tau2, "v", model)
    return q2, p2, Jv @ Jh


def step_positions(q, p, tau1, tau2, model: ShearModel):
    q1 = wrap_angle(np.asarray(q, dtype=float) + tau1 * model.f1.eval(p, 0))
    p1 = wrap_angle(np.asarray(p, dtype=float) + tau2 * model.f2.eval(q1, 0))
    return q1, p1


def inverse_step(q, p, tau1, tau2, model: ShearModel):
    """Inverse of the composed step: undo the vertical, then the horizontal."""
    p1 = wrap_angle(np.asarray(p, dtype=float) - tau2 * model.f2.eval(q, 0))
    q1 = wrap_angle(np.asarray(q, dtype=float) - tau1 * model.f1.eval(p1, 0))
    return q1, p1


def run_schedule(q, p, schedule: Schedule, model: ShearModel):
    for tau1, tau2 in schedule.pairs():
        q, p = step_positions(q, p, tau1, tau2, model)
    return q, p


def run_schedule_inverse(q, p, schedule: Schedule, model: ShearModel):
    for tau1, tau2 in schedule.pairs()[::-1]:
        q, p = inverse_step(q, p, tau1, tau2, model)
    return q, p


def det2(J):
    return J[..., 0, 0] * J[..., 1, 1] - J[..., 0, 1] * J[..., 1, 0]
