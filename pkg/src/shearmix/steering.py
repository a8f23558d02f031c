"""Controllability schedules for the shear chains.

steer_to builds closed-form plans for the one-point chain: a horizontal leg
solves q + tau1*f1(p) = q_target (mod 2pi) with the minimal nonnegative
duration, a vertical leg then fixes the row.  When the start row or the
target column carries too little speed for that to be numerically sound,
the plan routes through the anchor point (argmax |f2|, argmax |f1|), whose
columns and rows always carry maximal speed; a start with f1(p) = 0 gets a
preliminary vertical move to a row where |f1| >= 1e-4.  Every plan is split
to the duration cap and verified by forward simulation.

numeric_steer covers the projective and two-point chains, where no closed
form is available: 64 random multi-starts followed by damped Gauss-Newton
on a smooth chordal embedding of the terminal mismatch, durations kept
nonnegative by a squared reparameterization.  The damping step only ever
accepts parameter moves that do not increase the residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from . import rng
from .chains import (build_invariant_set, dist_to_invariant, projective_step,
                     two_point_step)
from .errors import ConfigError, NumericsError
from .flow import Schedule, run_schedule, torus_dist, wrap_angle
from .profiles import CircleIdentity, ShearModel, TWO_PI

_ANCHOR_GRID_N = 4096
_PRE_MOVE_GRID_N = 10**4
_PRE_MOVE_FLOOR = 1e-4
_MIN_SPEED = 1e-5
_EXACT_TOL = 1e-9
_N_STARTS = 64
_GN_ITERS = 80
_INIT_SCALES = (0.1, 0.25, 0.5, 1.0)


@dataclass(frozen=True)
class SteeringPlan:
    legs: Schedule
    residual: float
    method: str

    def __post_init__(self):
        if self.method not in ("exact", "numeric"):
            raise ConfigError("unknown plan method %r" % (self.method,))


def argmax_abs(profile):
    """Location of the maximum of |f| on the circle, grid scan plus
    golden-section refinement.  The circle identity attains its supremum at
    the wrap edge, where refinement cannot bracket it."""
    if isinstance(profile, CircleIdentity):
        return TWO_PI * (1.0 - 2.0 ** -30)
    z = np.arange(_ANCHOR_GRID_N) * (TWO_PI / _ANCHOR_GRID_N)
    vals = np.abs(profile.eval(z, 0))
    i = int(np.argmax(vals))
    a = z[(i - 1) % _ANCHOR_GRID_N]
    c = z[(i + 1) % _ANCHOR_GRID_N]
    if a > z[i]:
        a -= TWO_PI
    if c < z[i]:
        c += TWO_PI
    res = minimize_scalar(lambda t: -abs(float(profile.eval(t, 0))),
                          bracket=(a, float(z[i]), c), method="golden")
    return float(wrap_angle(res.x))


def _leg(delta, speed):
    """Minimal tau >= 0 moving an angle by delta (mod 2pi) at a constant
    signed speed."""
    move = float(wrap_angle(delta if speed > 0.0 else -delta))
    return move / abs(speed)


def _pre_move_duration(q, p, model: ShearModel):
    """Smallest vertical duration bringing the row to |f1| >= 1e-4, by grid
    scan then bisection onto the threshold crossing."""
    vq = float(model.f2.eval(q, 0))
    if abs(vq) < _MIN_SPEED:
        raise NumericsError("start too close to the fixed-point set to steer")
    span = TWO_PI / abs(vq)
    taus = np.linspace(0.0, span, _PRE_MOVE_GRID_N + 1)[1:]
    ok = np.abs(model.f1.eval(wrap_angle(p + taus * vq), 0)) >= _PRE_MOVE_FLOOR
    hits = np.nonzero(ok)[0]
    if len(hits) == 0:
        raise NumericsError("no row with usable horizontal speed found")
    hi = float(taus[hits[0]])
    lo = 0.0 if hits[0] == 0 else float(taus[hits[0] - 1])
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if abs(float(model.f1.eval(wrap_angle(p + mid * vq), 0))) >= _PRE_MOVE_FLOOR:
            hi = mid
        else:
            lo = mid
    return hi


def steer_to(x, target, model: ShearModel, T_cap: float = 10.0) -> SteeringPlan:
    """Exact plan landing the one-point chain on the target.

    Verified by forward simulation to 1e-9; all durations lie in
    [0, T_cap] after splitting."""
    if T_cap <= 0.0:
        raise ConfigError("T_cap must be > 0")
    q, p = float(wrap_angle(x[0])), float(wrap_angle(x[1]))
    qt, pt = float(wrap_angle(target[0])), float(wrap_angle(target[1]))
    for qq, pp, who in ((q, p, "start"), (qt, pt, "target")):
        if (abs(float(model.f1.eval(pp, 0))) < _MIN_SPEED
                and abs(float(model.f2.eval(qq, 0))) < _MIN_SPEED):
            raise ConfigError("%s lies too close to the fixed-point set" % who)
    if q == qt and p == pt:
        return SteeringPlan(legs=Schedule(durations=np.zeros(0), horizon=T_cap),
                            residual=0.0, method="exact")

    pairs = []
    if abs(float(model.f1.eval(p, 0))) < _MIN_SPEED:
        tau_pre = _pre_move_duration(q, p, model)
        pairs.append((0.0, tau_pre))
        p = float(wrap_angle(p + tau_pre * float(model.f2.eval(q, 0))))

    speed_row = float(model.f1.eval(p, 0))
    speed_target_col = float(model.f2.eval(qt, 0))
    if abs(speed_target_col) >= _MIN_SPEED:
        # direct: horizontal along the current row, vertical at the target
        # column
        tau1 = _leg(qt - q, speed_row)
        tau2 = _leg(pt - p, speed_target_col)
        pairs.append((tau1, tau2))
    else:
        # the target column is frozen; go through the anchor column, fix the
        # row there, and finish with a horizontal leg along the target row
        q0 = argmax_abs(model.f2)
        speed_target_row = float(model.f1.eval(pt, 0))
        if abs(speed_target_row) < _MIN_SPEED:
            raise ConfigError("target lies too close to the fixed-point set")
        tau1 = _leg(q0 - q, speed_row)
        tau2 = _leg(pt - p, float(model.f2.eval(q0, 0)))
        pairs.append((tau1, tau2))
        pairs.append((_leg(qt - q0, speed_target_row), 0.0))

    flat = [d for pair in pairs for d in pair]
    plan = split_schedule(Schedule(durations=np.asarray(flat), horizon=max(
        T_cap, max(flat))), T_cap)
    end_q, end_p = run_schedule(x[0], x[1], plan, model)
    residual = float(torus_dist(end_q, end_p, qt, pt))
    if residual > _EXACT_TOL:
        raise NumericsError("steering plan verification failed: residual %.3e"
                            % residual)
    return SteeringPlan(legs=plan, residual=residual, method="exact")


def split_schedule(s: Schedule, T_cap: float) -> Schedule:
    """Endpoint-preserving split of every duration into equal parts of at
    most T_cap.

    A pair (t1, t2) becomes (t1/n1, 0) repeated n1 - 1 times, then
    (t1/n1, t2/n2), then (0, t2/n2) repeated n2 - 1 times; inserted zero
    durations leave the flow untouched, so the composed map is unchanged up
    to float association."""
    if T_cap <= 0.0:
        raise ConfigError("T_cap must be > 0")
    out = []
    for t1, t2 in s.pairs():
        n1 = max(1, int(math.ceil(float(t1) / T_cap)))
        n2 = max(1, int(math.ceil(float(t2) / T_cap)))
        part1 = float(t1) / n1
        part2 = float(t2) / n2
        out.extend([part1, 0.0] * (n1 - 1))
        out.extend([part1, part2])
        out.extend([0.0, part2] * (n2 - 1))
    return Schedule(durations=np.asarray(out, dtype=float), horizon=T_cap)


def _chordal(a, b):
    return np.cos(a) - np.cos(b), np.sin(a) - np.sin(b)


def _projective_residual(state, target):
    q, p, u1, u2 = state
    qt, pt, v1, v2 = target
    cq, sq = _chordal(q, qt)
    cp, sp = _chordal(p, pt)
    # sign-free direction mismatch via the outer-product embedding
    r5 = u1 * u1 - v1 * v1
    r6 = math.sqrt(2.0) * (u1 * u2 - v1 * v2)
    r7 = u2 * u2 - v2 * v2
    return np.stack([cq, sq, cp, sp, r5, r6, r7])


def _two_point_residual(state, target):
    comps = []
    for a, b in zip(state, target):
        ca, sa = _chordal(a, b)
        comps.extend([ca, sa])
    return np.stack(comps)


def _rollout(chain, start, taus, model):
    """Advance a batch of chains; start entries are scalars, taus has shape
    (batch, 2*m)."""
    n = taus.shape[0]
    state = [np.full(n, float(v)) for v in start]
    for j in range(taus.shape[1] // 2):
        t1 = taus[:, 2 * j]
        t2 = taus[:, 2 * j + 1]
        if chain == "projective":
            state = list(projective_step(*state, t1, t2, model))
        else:
            state = list(two_point_step(*state, t1, t2, model))
    return state


def _normalize_direction(u1, u2):
    norm = math.hypot(u1, u2)
    if norm == 0.0:
        raise ConfigError("direction must be nonzero")
    return u1 / norm, u2 / norm


def chain_distance(chain, a, b):
    """Metric mismatch: torus distance on positions plus, for the projective
    chain, the unsigned angle between direction lines."""
    if chain == "projective":
        pos = float(torus_dist(a[0], a[1], b[0], b[1]))
        dot = abs(a[2] * b[2] + a[3] * b[3])
        ang = math.acos(min(1.0, dot))
        return math.hypot(pos, ang)
    dx = float(torus_dist(a[0], a[1], b[0], b[1]))
    dy = float(torus_dist(a[2], a[3], b[2], b[3]))
    return math.hypot(dx, dy)


def numeric_steer(chain: str, start, target, model: ShearModel, n_steps: int,
                  seed: int, horizon: float = 10.0, trace=None) -> SteeringPlan:
    """Multi-start damped Gauss-Newton steering for chains without closed
    forms.

    Returns the best plan found with its verified residual; callers treat
    residual < 1e-3 as success.  When trace is a list, the best embedded
    residual after each iteration is appended to it (it never increases)."""
    if chain not in ("projective", "two_point"):
        raise ConfigError("chain must be projective or two_point")
    if n_steps < 1:
        raise ConfigError("n_steps must be >= 1")
    if chain == "projective":
        start = (wrap_angle(start[0]), wrap_angle(start[1]),
                 *_normalize_direction(start[2], start[3]))
        target = (wrap_angle(target[0]), wrap_angle(target[1]),
                  *_normalize_direction(target[2], target[3]))
        resid_fn = _projective_residual
    else:
        start = tuple(float(wrap_angle(v)) for v in start)
        target = tuple(float(wrap_angle(v)) for v in target)
        delta = build_invariant_set(model)
        if float(dist_to_invariant(*target, delta)) < 1e-9:
            raise ConfigError("two_point target lies on the invariant set")
        resid_fn = _two_point_residual
    start = tuple(float(v) for v in start)
    target = tuple(float(v) for v in target)
    if start == target:
        return SteeringPlan(legs=Schedule(durations=np.zeros(0),
                                          horizon=horizon),
                            residual=0.0, method="numeric")

    n_par = 2 * n_steps
    k = np.arange(_N_STARTS, dtype=np.uint64)
    # long initial durations put the rollout deep in the chaotic regime where
    # Gauss-Newton stalls, so the starts cycle through duration scales
    scales = horizon * np.asarray(_INIT_SCALES)[k % len(_INIT_SCALES)]
    theta = np.empty((_N_STARTS, n_par))
    for j in range(n_par):
        theta[:, j] = np.sqrt(scales * rng.uniform01(seed, k, j, stream=0))

    def residuals(th):
        state = _rollout(chain, start, th * th, model)
        return resid_fn(state, target)

    r = residuals(theta)
    cost = np.sqrt(np.sum(r * r, axis=0))
    mu = np.full(_N_STARTS, 1e-3)
    n_res = r.shape[0]
    eye = np.eye(n_par)
    for _ in range(_GN_ITERS):
        jac = np.empty((_N_STARTS, n_res, n_par))
        for j in range(n_par):
            h = 1e-6 * (1.0 + np.abs(theta[:, j]))
            up = theta.copy()
            up[:, j] += h
            dn = theta.copy()
            dn[:, j] -= h
            jac[:, :, j] = ((residuals(up) - residuals(dn)) / (2.0 * h)).T
        jtj = np.einsum("brj,brk->bjk", jac, jac)
        jtr = np.einsum("brj,br->bj", jac, r.T)
        lhs = jtj + mu[:, None, None] * eye
        try:
            delta_th = np.linalg.solve(lhs, jtr[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            delta_th = np.linalg.solve(lhs + 1e-8 * eye, jtr[:, :, None])[:, :, 0]
        cand = theta - delta_th
        r_cand = residuals(cand)
        cost_cand = np.sqrt(np.sum(r_cand * r_cand, axis=0))
        accept = cost_cand <= cost
        theta = np.where(accept[:, None], cand, theta)
        r = np.where(accept[None, :], r_cand, r)
        cost = np.where(accept, cost_cand, cost)
        mu = np.where(accept, mu * 0.5, mu * 8.0)
        if trace is not None:
            trace.append(float(cost.min()))
        if float(cost.min()) < 1e-11:
            break
    best = int(np.argmin(cost))
    taus = theta[best] * theta[best]
    end = [float(v[0]) for v in _rollout(chain, start, taus[None, :], model)]
    residual = chain_distance(chain, end, target)
    return SteeringPlan(legs=Schedule(durations=taus,
                                      horizon=float(max(horizon, taus.max()))),
                        residual=residual, method="numeric")
