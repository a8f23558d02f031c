"""Auxiliary Markov chains over the base flow.

The tangent (lifted) chain carries a tangent vector through the step
Jacobians and accumulates log growth; the projective chain keeps the
direction only, with u and -u identified; the two-point chain moves a
pair of base points under one shared schedule.

Invariant sets of the two-point chain off the diagonal are unions of
graphs (q, p) -> (sq*q + a, sp*p + b) mod 2pi.  A candidate graph is
invariant for every duration iff, with real-valued profile evaluation,

    f1(sp*z + b) = sq * f1(z)   and   f2(sq*z + a) = sp * f2(z).

Candidates are generated from profile symmetry data (periods,
antiperiods, even axes, odd centers) and kept only if both identities
re-verify on sampled points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .flow import ShearModel, torus_dist, wrap_angle
from .profiles import TWO_PI, symmetry_data


@dataclass
class TangentState:
    q: float
    p: float
    u1: float
    u2: float
    log_norm: float = 0.0

    def __post_init__(self):
        if self.u1 == 0.0 and self.u2 == 0.0:
            raise ValueError("tangent vector must be nonzero")


@dataclass
class ProjectiveState:
    """Direction state; u and -u represent the same element."""
    q: float
    p: float
    u1: float
    u2: float

    def __post_init__(self):
        n = math.hypot(self.u1, self.u2)
        if n == 0.0:
            raise ValueError("direction must be nonzero")
        self.u1 /= n
        self.u2 /= n


@dataclass
class TwoPointState:
    qx: float
    px: float
    qy: float
    py: float


def tangent_step(q, p, u1, u2, tau1, tau2, model: ShearModel, renormalize=True):
    """Advance point and tangent one composed step.

    Returns (q', p', u1', u2', log_gain); with renormalize the returned
    tangent is unit length and log_gain is the log of its growth factor.
    The Jacobian is applied shear by shear (each factor is triangular),
    never formed as a product.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    u1 = np.asarray(u1, dtype=float)
    u2 = np.asarray(u2, dtype=float)
    q1 = wrap_angle(q + tau1 * model.f1.eval(p, 0))
    u1 = u1 + tau1 * model.f1.eval(p, 1) * u2
    p1 = wrap_angle(p + tau2 * model.f2.eval(q1, 0))
    u2 = u2 + tau2 * model.f2.eval(q1, 1) * u1
    norm = np.hypot(u1, u2)
    log_gain = np.log(norm)
    if renormalize:
        u1 = u1 / norm
        u2 = u2 / norm
    return q1, p1, u1, u2, log_gain


def projective_step(q, p, u1, u2, tau1, tau2, model: ShearModel):
    """Tangent step followed by normalization; equivariant under u -> -u."""
    q1, p1, v1, v2, _ = tangent_step(q, p, u1, u2, tau1, tau2, model,
                                     renormalize=True)
    return q1, p1, v1, v2


def two_point_step(qx, px, qy, py, tau1, tau2, model: ShearModel):
    """Both points move under the same durations."""
    from .flow import step_positions
    qx1, px1 = step_positions(qx, px, tau1, tau2, model)
    qy1, py1 = step_positions(qy, py, tau1, tau2, model)
    return qx1, px1, qy1, py1


@dataclass(frozen=True)
class ComponentMap:
    """One invariant graph (q, p) -> (sign_q*q + shift_q, sign_p*p + shift_p)."""
    kind: str
    sign_q: int
    shift_q: float
    sign_p: int
    shift_p: float

    def apply(self, q, p):
        return (wrap_angle(self.sign_q * np.asarray(q, dtype=float) + self.shift_q),
                wrap_angle(self.sign_p * np.asarray(p, dtype=float) + self.shift_p))


@dataclass(frozen=True)
class InvariantSetDescriptor:
    components: tuple

    def __len__(self):
        return len(self.components)


def _identity_holds(profile, sign_in, shift, sign_out, n=64, tol=1e-9):
    # real-valued check of f(sign_in * z + shift) == sign_out * f(z)
    rng = np.random.default_rng(98765)
    z = np.concatenate([np.linspace(0.0, TWO_PI, 17)[:-1],
                        rng.uniform(0.0, TWO_PI, n)])
    lhs = profile.eval(sign_in * z + shift, 0)
    rhs = sign_out * profile.eval(z, 0)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    return float(np.max(np.abs(lhs - rhs))) <= tol * scale


def _graph_invariant(model: ShearModel, sign_q, shift_q, sign_p, shift_p):
    return (_identity_holds(model.f1, sign_p, shift_p, sign_q)
            and _identity_holds(model.f2, sign_q, shift_q, sign_p))


def build_invariant_set(model: ShearModel) -> InvariantSetDescriptor:
    """Enumerate invariant graphs from symmetry data, then re-verify each.

    Families: shifts by periods (I1), antiperiod shift in q with reflection
    across an even axis in p (I2), the mirror family (I3), and double
    reflections through odd centers (I4).  The diagonal is always present.
    Candidates whose defining identities fail in real values are dropped;
    for the circle identity profile this prunes everything but shifts by 0.
    """
    s1 = symmetry_data(model.f1)
    s2 = symmetry_data(model.f2)
    candidates = [("I0", 1, 0.0, 1, 0.0)]
    for a in s2.period_shifts():
        for b in s1.period_shifts():
            candidates.append(("I1", 1, a, 1, b))
    for s in s2.antiperiods:
        for c in s1.even_axes:
            candidates.append(("I2", 1, s, -1, 2.0 * c))
    for c in s2.even_axes:
        for s in s1.antiperiods:
            candidates.append(("I3", -1, 2.0 * c, 1, s))
    for d in s2.odd_centers:
        for e in s1.odd_centers:
            candidates.append(("I4", -1, 2.0 * d, -1, 2.0 * e))

    def canon(angle):
        w = float(wrap_angle(angle))
        if TWO_PI - w < 1e-9:
            w = 0.0
        return w

    seen = set()
    comps = []
    for kind, sq, a, sp, b in candidates:
        a = canon(a)
        b = canon(b)
        key = (sq, round(a, 9), sp, round(b, 9))
        if key in seen:
            continue
        if kind != "I0" and not _graph_invariant(model, sq, a, sp, b):
            continue
        seen.add(key)
        comps.append(ComponentMap(kind=kind, sign_q=sq, shift_q=a,
                                  sign_p=sp, shift_p=b))
    return InvariantSetDescriptor(components=tuple(comps))


def dist_to_invariant(qx, px, qy, py, desc: InvariantSetDescriptor):
    """min over components k of torus distance d(k(x), y)."""
    best = None
    for comp in desc.components:
        qk, pk = comp.apply(qx, px)
        d = torus_dist(qk, pk, qy, py)
        best = d if best is None else np.minimum(best, d)
    return best
