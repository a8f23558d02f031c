"""Lyapunov exponent estimation along the renormalized tangent chain.

lambda1 is estimated per sample as (1/m) sum of per-step log gains of a
renormalized tangent vector; the sum of exponents uses per-step Jacobian
determinants (each factor is measured, never a matrix product, so the
estimate checks volume preservation rather than assuming it).  Log
accumulators use compensated summation in a fixed index order, so runs
are reproducible bit for bit for a given configuration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .profiles import TWO_PI, ShearModel, fixed_points, wrap_angle

_STREAM_Q = 1
_STREAM_P = 2
_STREAM_TH = 3


def _kahan_add(total, comp, x):
    y = x - comp
    t = total + y
    comp = (t - total) - y
    return t, comp


def sample_initial_states(model: ShearModel, n: int, seed: int,
                          with_direction: bool = True):
    """Uniform initial points (resampled if within 1e-9 of a joint zero)
    and uniform unit directions, all counter-derived from the seed."""
    j = np.arange(n, dtype=np.uint64)
    q = rng.uniform01(seed, j, 0, _STREAM_Q) * TWO_PI
    p = rng.uniform01(seed, j, 0, _STREAM_P) * TWO_PI
    F = fixed_points(model)
    for retry in range(1, 64):
        bad = np.zeros(n, dtype=bool)
        for (fq, fp) in F:
            dq = np.abs(wrap_angle(q - fq))
            dq = np.minimum(dq, TWO_PI - dq)
            dp = np.abs(wrap_angle(p - fp))
            dp = np.minimum(dp, TWO_PI - dp)
            bad |= np.hypot(dq, dp) < 1e-9
        if not bad.any():
            break
        q[bad] = rng.uniform01(seed, j[bad], retry, _STREAM_Q) * TWO_PI
        p[bad] = rng.uniform01(seed, j[bad], retry, _STREAM_P) * TWO_PI
    if not with_direction:
        return q, p
    th = rng.uniform01(seed, j, 0, _STREAM_TH) * TWO_PI
    return q, p, np.cos(th), np.sin(th)


@dataclass(frozen=True)
class LyapunovEstimate:
    horizon: float
    m: int
    n_samples: int
    seed: int
    lambda1: float
    stderr: float
    ci_lo: float
    ci_hi: float
    lambda1_per_time: float
    trace: tuple = field(default_factory=tuple)  # (m_k, lambda1_k, stderr_k)


def estimate_lambda1(model: ShearModel, horizon: float, m: int, n_samples: int,
                     seed: int, horizontal_only: bool = False,
                     n_checkpoints: int = 10) -> LyapunovEstimate:
    """Mean and spread of per-sample finite-horizon exponents.

    horizontal_only freezes the vertical shear (tau2 = 0); the exponent
    then collapses since p never moves and growth is polynomial.
    """
    q, p, u1, u2 = sample_initial_states(model, n_samples, seed)
    acc = np.zeros(n_samples)
    comp = np.zeros(n_samples)
    time_acc = np.zeros(n_samples)
    j = np.arange(n_samples, dtype=np.uint64)
    checkpoints = sorted({max(1, (m * (k + 1)) // n_checkpoints)
                          for k in range(n_checkpoints)})
    trace = []
    f1, f2 = model.f1, model.f2
    for k in range(m):
        t1 = rng.durations(seed, j, 2 * k, horizon)
        t2 = rng.durations(seed, j, 2 * k + 1, horizon)
        if horizontal_only:
            t2 = np.zeros_like(t2)
        q = wrap_angle(q + t1 * f1.eval(p, 0))
        u1 = u1 + t1 * f1.eval(p, 1) * u2
        p = wrap_angle(p + t2 * f2.eval(q, 0))
        u2 = u2 + t2 * f2.eval(q, 1) * u1
        norm = np.hypot(u1, u2)
        u1 /= norm
        u2 /= norm
        acc, comp = _kahan_add(acc, comp, np.log(norm))
        time_acc += t1 + t2
        if k + 1 in checkpoints or k + 1 == m:
            lam = acc / (k + 1)
            mean = float(lam.mean())
            se = float(lam.std(ddof=1) / math.sqrt(n_samples))
            trace.append((k + 1, mean, se))
    lam = acc / m
    mean = float(lam.mean())
    se = float(lam.std(ddof=1) / math.sqrt(n_samples))
    per_time = float((acc / np.maximum(time_acc, 1e-300)).mean())
    return LyapunovEstimate(horizon=horizon, m=m, n_samples=n_samples,
                            seed=seed, lambda1=mean, stderr=se,
                            ci_lo=mean - 1.96 * se, ci_hi=mean + 1.96 * se,
                            lambda1_per_time=per_time, trace=tuple(trace))


@dataclass(frozen=True)
class LambdaSumEstimate:
    horizon: float
    m: int
    n_samples: int
    seed: int
    lambda_sum_mean: float
    lambda_sum_max_abs: float


def estimate_lambda_sum(model: ShearModel, horizon: float, m: int,
                        n_samples: int, seed: int) -> LambdaSumEstimate:
    """(1/m) sum of log |det J_step| per sample; volume preservation makes
    this vanish, and each determinant comes from the measured step entries."""
    q, p = sample_initial_states(model, n_samples, seed, with_direction=False)
    acc = np.zeros(n_samples)
    comp = np.zeros(n_samples)
    j = np.arange(n_samples, dtype=np.uint64)
    f1, f2 = model.f1, model.f2
    for k in range(m):
        t1 = rng.durations(seed, j, 2 * k, horizon)
        t2 = rng.durations(seed, j, 2 * k + 1, horizon)
        a = t1 * f1.eval(p, 1)
        q = wrap_angle(q + t1 * f1.eval(p, 0))
        b = t2 * f2.eval(q, 1)
        p = wrap_angle(p + t2 * f2.eval(q, 0))
        det = (1.0 + a * b) - a * b
        acc, comp = _kahan_add(acc, comp, np.log(np.abs(det)))
    lam = acc / m
    return LambdaSumEstimate(horizon=horizon, m=m, n_samples=n_samples,
                             seed=seed, lambda_sum_mean=float(lam.mean()),
                             lambda_sum_max_abs=float(np.max(np.abs(lam))))


def lambda_vs_horizon(model: ShearModel, horizons, m: int, n_samples: int,
                      seed: int) -> list:
    """One estimate per horizon value, same budget each."""
    return [estimate_lambda1(model, float(T), m, n_samples, seed)
            for T in horizons]
