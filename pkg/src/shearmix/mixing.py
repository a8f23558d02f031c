"""Passive-scalar advection and mixing diagnostics.

The scalar solves a transport equation, so its value after m composed
steps is the initial data evaluated along backward characteristics: every
grid point is pulled back through the inverted schedule and u0 is sampled
there.  No interpolation enters at any point; the field values are exact
samples of u0 up to float rounding, which is what makes the rearrangement
(L-infinity preservation) and exactness tests meaningful.

The geometric mixing scale is the largest ball radius at which some
quotient-metric disk still holds an average exceeding the threshold
(default 1, meaningful because the stock data has amplitude above 1); disk
averages for all centers at once come from an FFT circular convolution with
a rasterized disk mask.  Rasterization perturbs each ball average by O(h),
so the reported scale can be off by at most one radius-grid step near a
threshold crossing.

eta_hat tracks max m / |log r| over observed exceedance radii r < 1/e.
xi_hat is rho / grad_norm_l1(rho) with rho set to the last step index that
still shows a nonzero scale; the step index doubles as the slot count for
the gradient norm (the speeded-field clock ticks one slot per unit time,
and the step series is indexed on that clock).  Both are lower estimates
on any finite run.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConfigError
from .flow import Schedule, run_schedule_inverse
from .profiles import ShearModel, TWO_PI, zero_set

_MEAN_TOL_FACTOR = 1e-3
_ETA_RADIUS_CAP = 1.0 / math.e
_QUAD_TOL = 1e-10
_MIN_GRID = 8


def _two_sin_q(q, p):
    return 2.0 * np.sin(q)


def _checkerboard(q, p):
    return 3.0 * np.sign(np.sin(q) * np.sin(p))


INITIAL_CONDITIONS = {
    "two_sin_q": _two_sin_q,
    "checkerboard": _checkerboard,
}


def resolve_initial_condition(u0):
    if callable(u0):
        return u0, getattr(u0, "__name__", "custom")
    try:
        return INITIAL_CONDITIONS[u0], u0
    except KeyError:
        raise ConfigError("unknown initial condition %r; known: %s"
                          % (u0, ", ".join(sorted(INITIAL_CONDITIONS))))


@dataclass(frozen=True)
class ScalarField:
    grid_n: int
    values: np.ndarray
    u0_name: str
    amplitude: float
    schedule: Schedule
    m: int


def advect(u0, schedule: Schedule, m: int, grid_n: int,
           model: ShearModel) -> ScalarField:
    """Field after m composed steps, sampled exactly on an N x N grid.

    The grid is pulled back through the inverses of steps m, m-1, ..., 1
    and u0 is evaluated at the endpoints.  Requires mean-zero data with
    amplitude above 1 so the unit threshold of the mixing scale bites.
    """
    if m < 0:
        raise ConfigError("m must be >= 0")
    if m > schedule.n_steps:
        raise ConfigError("schedule provides only %d steps" % schedule.n_steps)
    if grid_n < _MIN_GRID:
        raise ConfigError("grid_n must be >= %d" % _MIN_GRID)
    fn, name = resolve_initial_condition(u0)
    axis = np.arange(grid_n) * (TWO_PI / grid_n)
    qq, pp = np.meshgrid(axis, axis, indexing="ij")
    base = np.asarray(fn(qq, pp), dtype=float)
    amplitude = float(np.max(np.abs(base)))
    if amplitude <= 1.0:
        raise ConfigError("initial data amplitude must exceed 1")
    if abs(float(base.mean())) > _MEAN_TOL_FACTOR * amplitude:
        raise ConfigError("initial data is not mean-zero on the grid")
    if m == 0:
        values = base
    else:
        sub = Schedule(durations=schedule.durations[:2 * m],
                       horizon=schedule.horizon, seed=schedule.seed)
        q, p = run_schedule_inverse(qq, pp, sub, model)
        values = np.asarray(fn(q, p), dtype=float)
    return ScalarField(grid_n=grid_n, values=values, u0_name=name,
                       amplitude=amplitude, schedule=schedule, m=m)


@functools.lru_cache(maxsize=128)
def _mask_fft(grid_n: int, radius: float):
    h = TWO_PI / grid_n
    idx = np.arange(grid_n) * h
    d = np.minimum(idx, TWO_PI - idx)
    dq, dp = np.meshgrid(d, d, indexing="ij")
    mask = (np.hypot(dq, dp) <= radius).astype(float)
    return np.fft.rfft2(mask), float(mask.sum())


def ball_means(field: ScalarField, radius: float) -> np.ndarray:
    """Average of the field over the quotient-metric disk of the given
    radius centered at every grid point, via circular convolution."""
    mf, count = _mask_fft(field.grid_n, float(radius))
    conv = np.fft.irfft2(np.fft.rfft2(field.values) * mf, s=field.values.shape)
    return conv / count


def _validate_radii(radii, grid_n):
    radii = [float(r) for r in radii]
    if not radii:
        raise ConfigError("radii must be non-empty")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ConfigError("radii must be sorted strictly descending")
    if radii[-1] < 2.0 * TWO_PI / grid_n:
        raise ConfigError("radii must span at least two grid cells")
    if radii[0] > math.pi * math.sqrt(2.0):
        raise ConfigError("radii must not exceed the torus diameter")
    return radii


def _peak_means(field: ScalarField, radii):
    """max_centers |ball mean| per radius, sharing one forward transform."""
    fv = np.fft.rfft2(field.values)
    out = []
    for r in radii:
        mf, count = _mask_fft(field.grid_n, r)
        conv = np.fft.irfft2(fv * mf, s=field.values.shape)
        out.append(float(np.max(np.abs(conv))) / count)
    return out


def mixing_scale(field: ScalarField, radii, threshold: float = 1.0) -> float:
    """Largest listed radius whose best ball average still exceeds the
    threshold in absolute value; 0.0 once no ball does."""
    radii = _validate_radii(radii, field.grid_n)
    for r, peak in zip(radii, _peak_means(field, radii)):
        if peak > threshold:
            return r
    return 0.0


def default_radii(grid_n: int):
    """Dyadic radii from pi down to four grid cells."""
    out = []
    r = math.pi
    floor = 4.0 * TWO_PI / grid_n
    while r >= floor:
        out.append(r)
        r /= 2.0
    return tuple(out)


@functools.lru_cache(maxsize=32)
def _profile_grad_integral(profile) -> float:
    # |f'| is non-smooth exactly at the zeros of f'; hand those to quad
    kinks = zero_set(profile, 1).roots
    val, err = quad(lambda z: abs(float(profile.eval(z, 1))), 0.0, TWO_PI,
                    points=sorted(kinks) if kinks else None,
                    limit=200, epsabs=_QUAD_TOL, epsrel=_QUAD_TOL)
    if err > 1e-8:
        raise ConfigError("gradient quadrature did not converge")
    return float(val)


def grad_norm_l1(schedule: Schedule, rho: int, model: ShearModel) -> float:
    """Cumulative L1 norm of the velocity gradient over the first rho unit
    slots: each slot contributes tau * 2*pi * integral of |f'| (the single
    off-diagonal entry of the displacement gradient), odd slots from f1,
    even slots from f2."""
    if rho < 0:
        raise ConfigError("rho must be >= 0")
    if rho > len(schedule.durations):
        raise ConfigError("schedule provides only %d slots"
                          % len(schedule.durations))
    total = 0.0
    comp = 0.0
    for i in range(rho):
        profile = model.f1 if i % 2 == 0 else model.f2
        term = float(schedule.durations[i]) * TWO_PI * _profile_grad_integral(profile)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return total


@dataclass(frozen=True)
class MixReport:
    grid_n: int
    u0_name: str
    m: tuple
    mix_scale: tuple
    grad_norm_cum: tuple
    eta_running: tuple
    eta_hat: float | None
    xi_hat: float | None
    slope: float | None
    r2: float | None
    no_mixing: bool


def mix_run(model: ShearModel, u0, schedule: Schedule, m_max: int,
            grid_n: int, radii=None) -> MixReport:
    """Mixing-scale series over m = 0..m_max plus the derived estimates.

    Exceedance radii below 1/e feed eta_hat = max m / |log r|; xi_hat is
    m over grad_norm_l1(m slots) at the last m with a nonzero scale, so it
    can be reproduced from the emitted series.  The log-linear fit covers
    the steps with nonzero scale.  An all-zero schedule cannot mix and is
    flagged instead of fitted.
    """
    if m_max < 1:
        raise ConfigError("m_max must be >= 1")
    if m_max > schedule.n_steps:
        raise ConfigError("schedule provides only %d steps" % schedule.n_steps)
    radii = _validate_radii(default_radii(grid_n) if radii is None else radii,
                            grid_n)
    ms, scales, grad_cum, eta_run = [], [], [], []
    eta = None
    name = None
    for m in range(m_max + 1):
        field = advect(u0, schedule, m, grid_n, model)
        name = field.u0_name
        peaks = _peak_means(field, radii)
        scale = 0.0
        for r, peak in zip(radii, peaks):
            if peak > 1.0:
                scale = r
                break
        scales.append(scale)
        r_small = 0.0
        for r, peak in zip(radii, peaks):
            if r < _ETA_RADIUS_CAP and peak > 1.0:
                r_small = r
                break
        if r_small > 0.0:
            cand = m / abs(math.log(r_small))
            eta = cand if eta is None else max(eta, cand)
        ms.append(m)
        grad_cum.append(grad_norm_l1(schedule, m, model))
        eta_run.append(eta)
    no_mixing = float(np.sum(schedule.durations[:2 * m_max])) == 0.0
    xi = None
    last_nonzero = max((m for m, s in zip(ms, scales) if s > 0.0), default=0)
    if not no_mixing and last_nonzero >= 1:
        denom = grad_norm_l1(schedule, last_nonzero, model)
        if denom > 0.0:
            xi = float(last_nonzero) / denom
    slope = r2 = None
    fit_pts = [(m, s) for m, s in zip(ms, scales) if s > 0.0]
    if not no_mixing and len(fit_pts) >= 3:
        mm = np.asarray([m for m, _ in fit_pts], dtype=float)
        logs = np.log(np.asarray([s for _, s in fit_pts]))
        coef = np.polyfit(mm, logs, 1)
        fit = coef[0] * mm + coef[1]
        ss_res = float(np.sum((logs - fit) ** 2))
        ss_tot = float(np.sum((logs - logs.mean()) ** 2))
        slope = float(coef[0])
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return MixReport(grid_n=grid_n, u0_name=name, m=tuple(ms),
                     mix_scale=tuple(scales), grad_norm_cum=tuple(grad_cum),
                     eta_running=tuple(eta_run),
                     eta_hat=None if no_mixing else eta,
                     xi_hat=xi, slope=slope, r2=r2, no_mixing=no_mixing)
