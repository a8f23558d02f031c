"""Analytic shear speed profiles on the circle and their interrogation.

A profile is either a trigonometric polynomial or the circle identity
(the representative of z in [0, 2pi)).  The operations here locate zero
sets, check the separation of zeros from critical points, extract the
symmetry data used to build invariant sets of the two-point chain, and
measure the distortion constant K with (1/K) d(z, zeros) <= |f(z)| <=
K d(z, zeros).

All zero and symmetry finding follows the same pattern: a dense grid
scan proposes candidates, a local refinement sharpens them, and an
independent re-verification on fresh sample points accepts or discards
them.  Candidates that fail re-verification are dropped silently;
candidate counts that exceed what the degree allows raise NumericsError.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import NumericsError

TWO_PI = 2.0 * math.pi

_GRID_N = 8192
_SYM_GRID_N = 4096
_DISTORTION_GRID_N = 1 << 16
_ISOLATION_TOL = 1e-10


def wrap_angle(z):
    """Reduce to [0, 2pi)."""
    return np.mod(z, TWO_PI)


def circle_dist(a, b=0.0):
    d = np.abs(wrap_angle(np.asarray(a, dtype=float) - b))
    return np.minimum(d, TWO_PI - d)


@dataclass(frozen=True)
class TrigPoly:
    """f(z) = a0 + sum_k (a_k cos kz + b_k sin kz).

    cos_coeffs = (a0, a1, ..., aK), sin_coeffs = (b1, ..., bK).
    """
    cos_coeffs: tuple
    sin_coeffs: tuple

    def __post_init__(self):
        object.__setattr__(self, "cos_coeffs", tuple(float(c) for c in self.cos_coeffs))
        object.__setattr__(self, "sin_coeffs", tuple(float(c) for c in self.sin_coeffs))
        if len(self.cos_coeffs) < 1:
            raise ValueError("cos_coeffs must include the constant term")
        if len(self.sin_coeffs) != len(self.cos_coeffs) - 1:
            raise ValueError("sin_coeffs must have one entry per harmonic")

    @property
    def degree(self) -> int:
        deg = 0
        for k in range(1, len(self.cos_coeffs)):
            if self.cos_coeffs[k] != 0.0 or self.sin_coeffs[k - 1] != 0.0:
                deg = k
        return deg

    def eval(self, z, order: int = 0):
        """Value of the order-th derivative at z (scalar or array)."""
        z = np.asarray(z, dtype=float)
        out = np.zeros_like(z)
        if order == 0:
            out = out + self.cos_coeffs[0]
        shift = order * (math.pi / 2.0)
        for k in range(1, len(self.cos_coeffs)):
            a, b = self.cos_coeffs[k], self.sin_coeffs[k - 1]
            if a == 0.0 and b == 0.0:
                continue
            kn = float(k) ** order
            kz = k * z + shift
            out = out + kn * (a * np.cos(kz) + b * np.sin(kz))
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class CircleIdentity:
    """f(z) = representative of z in [0, 2pi); derivative 1, higher orders 0.

    The jump at 0 is a quotient artifact: as a circle map this is the
    identity, and symmetry/distortion claims about it hold in the
    quotient metric on values.
    """

    @property
    def degree(self) -> int:
        return 1

    def eval(self, z, order: int = 0):
        z = np.asarray(z, dtype=float)
        if order == 0:
            out = wrap_angle(z)
        elif order == 1:
            out = np.ones_like(z)
        else:
            out = np.zeros_like(z)
        return out if out.ndim else float(out)


def sine_profile() -> TrigPoly:
    return TrigPoly(cos_coeffs=(0.0, 0.0), sin_coeffs=(1.0,))


@dataclass(frozen=True)
class ShearModel:
    """A pair of shear profiles: f1 drives horizontal shear (speed f1(p)),
    f2 drives vertical shear (speed f2(q))."""
    name: str
    f1: object
    f2: object


def pierrehumbert() -> ShearModel:
    return ShearModel(name="pierrehumbert", f1=sine_profile(), f2=sine_profile())


def chirikov() -> ShearModel:
    return ShearModel(name="chirikov", f1=sine_profile(), f2=CircleIdentity())


def fixed_points(model: ShearModel) -> tuple:
    """Joint zeros F = {(q, p): f2(q) = 0 and f1(p) = 0}; these are fixed
    by every composed step."""
    qs = zero_set(model.f2, 0).roots
    ps = zero_set(model.f1, 0).roots
    return tuple((q, p) for q in qs for p in ps)


@dataclass(frozen=True)
class ZeroSet:
    roots: tuple
    tolerance: float


def _dedup_circle(vals, tol=1e-8):
    out = []
    for v in sorted(wrap_angle(np.asarray(vals, dtype=float)).tolist()):
        if all(circle_dist(v, u) > tol for u in out):
            out.append(v)
    return tuple(out)


def zero_set(profile, order: int = 0) -> ZeroSet:
    """Zeros of the order-th derivative on [0, 2pi), isolated to 1e-10.

    Transversal zeros come from sign changes on a dense grid refined by
    bisection; tangential zeros from local minima of |f| refined by
    bounded scalar minimization and accepted only if the minimum value
    is below tolerance.
    """
    if isinstance(profile, CircleIdentity):
        if order == 0:
            return ZeroSet(roots=(0.0,), tolerance=_ISOLATION_TOL)
        return ZeroSet(roots=(), tolerance=_ISOLATION_TOL)

    g = lambda z: profile.eval(z, order)
    zg = np.linspace(0.0, TWO_PI, _GRID_N, endpoint=False)
    vals = g(zg)
    scale = float(np.max(np.abs(vals)))
    if scale < 1e-13:
        raise NumericsError("profile derivative of order %d is numerically zero; "
                            "zero set is not isolated" % order)

    h = TWO_PI / _GRID_N
    roots = []
    # transversal zeros: sign change between neighbors (wrapping)
    nxt = np.roll(vals, -1)
    for i in np.nonzero(vals * nxt < 0.0)[0]:
        a = zg[i]
        roots.append(brentq(g, a, a + h, xtol=1e-14))
    roots.extend(zg[vals == 0.0].tolist())

    # tangential zeros: |g| dips to zero without a sign change
    absv = np.abs(vals)
    lo = np.minimum(np.roll(absv, 1), np.roll(absv, -1))
    cand = np.nonzero((absv <= lo) & (absv < 1e-4 * scale))[0]
    for i in cand:
        c = zg[i]
        res = minimize_scalar(lambda z: abs(g(z)), bounds=(c - h, c + h),
                              method="bounded", options={"xatol": 1e-13})
        if abs(res.fun) < _ISOLATION_TOL * scale:
            roots.append(float(res.x))

    roots = _dedup_circle(roots)
    if len(roots) > 2 * profile.degree:
        raise NumericsError("found %d zeros at order %d, more than 2*degree = %d"
                            % (len(roots), order, 2 * profile.degree))
    return ZeroSet(roots=roots, tolerance=_ISOLATION_TOL)


@dataclass(frozen=True)
class H1Result:
    min_gap: float
    passed: bool


def check_h1(profile) -> H1Result:
    """Separation of zeros from critical points: min circle distance
    between the zero sets of f and f'; passes iff the gap exceeds 1e-6."""
    zeros = zero_set(profile, 0).roots
    crits = zero_set(profile, 1).roots
    if not zeros or not crits:
        return H1Result(min_gap=math.inf, passed=True)
    gap = min(float(circle_dist(z, c)) for z in zeros for c in crits)
    return H1Result(min_gap=gap, passed=gap > 1e-6)


@dataclass(frozen=True)
class SymmetryData:
    """Symmetries of a profile used to build two-point invariant sets.

    fundamental_period: smallest positive period (2pi means none beyond
    the trivial one).  even_axes: c with f(2c - t) = f(t).  odd_centers:
    c with f(2c - t) = -f(t).  antiperiods: shifts s with f(t + s) =
    -f(t).  For the circle identity the defining identities hold in the
    quotient metric on values.
    """
    fundamental_period: float
    even_axes: tuple
    odd_centers: tuple
    antiperiods: tuple

    def period_shifts(self) -> tuple:
        """All period shifts in [0, 2pi): multiples of the fundamental period."""
        d = int(round(TWO_PI / self.fundamental_period))
        return tuple(wrap_angle(k * self.fundamental_period) for k in range(d))


def _verify_identity(profile, transform, sign, n=64, tol=1e-9, quotient=False):
    """Check f(transform(t)) == sign * f(t) at sampled t."""
    rng = np.random.default_rng(12345)
    t = np.concatenate([np.linspace(0.0, TWO_PI, 17)[:-1], rng.uniform(0.0, TWO_PI, n)])
    lhs = profile.eval(transform(t), 0)
    rhs = sign * profile.eval(t, 0)
    if quotient:
        err = circle_dist(lhs, rhs)
    else:
        err = np.abs(lhs - rhs)
    scale = max(1.0, float(np.max(np.abs(rhs))))
    return float(np.max(err)) <= tol * scale


def _isolated_minima(energy, grid, scale2, max_count):
    """Indices of grid-local minima of an energy profile that plausibly
    touch zero; NumericsError if they are not isolated."""
    lo = np.minimum(np.roll(energy, 1), np.roll(energy, -1))
    idx = np.nonzero((energy <= lo) & (energy < 1e-8 * scale2))[0]
    if len(idx) > max_count:
        raise NumericsError("symmetry candidates are not isolated (%d found)" % len(idx))
    return idx


def symmetry_data(profile) -> SymmetryData:
    if isinstance(profile, CircleIdentity):
        # identities hold mod 2pi: rep(-t) = -rep(t), rep(2pi - t) = -rep(t)
        return SymmetryData(fundamental_period=TWO_PI, even_axes=(),
                            odd_centers=(0.0, math.pi), antiperiods=())

    deg = profile.degree
    tg = np.linspace(0.0, TWO_PI, _SYM_GRID_N, endpoint=False)
    f = profile.eval(tg, 0)
    scale2 = max(1.0, float(np.mean(f * f)))

    # fundamental period: test divisors 2pi/d, largest d wins
    period = TWO_PI
    for d in range(deg, 1, -1):
        s = TWO_PI / d
        if float(np.max(np.abs(profile.eval(tg + s, 0) - f))) < 1e-9:
            period = s
            break

    # residual energies against all grid shifts via circular (auto)correlation:
    #   reflect: E(c_i) = 2 mean f^2 -+ (2/N) (f (*) f)[2i]
    #   shift:   A(s_i) = 2 mean f^2 +  (2/N) corr(f, f)[i]
    N = _SYM_GRID_N
    F = np.fft.rfft(f)
    conv = np.fft.irfft(F * F, n=N)          # sum_j f[(i - j) mod N] f[j]
    corr = np.fft.irfft(F * np.conj(F), n=N)  # sum_j f[(j + i) mod N] f[j]
    mean_sq = float(np.mean(f * f))
    conv2 = conv[(2 * np.arange(N)) % N]
    e_even = 2.0 * mean_sq - (2.0 / N) * conv2
    e_odd = 2.0 * mean_sq + (2.0 / N) * conv2
    e_anti = 2.0 * mean_sq + (2.0 / N) * corr

    def refine_axis(c0, sign):
        def energy(c):
            t = tg[::16]
            r = profile.eval(2.0 * c - t, 0) - sign * profile.eval(t, 0)
            return float(np.mean(r * r))
        h = TWO_PI / N
        res = minimize_scalar(energy, bounds=(c0 - h, c0 + h), method="bounded",
                              options={"xatol": 1e-12})
        return float(res.x)

    def refine_shift(s0):
        def energy(s):
            t = tg[::16]
            r = profile.eval(t + s, 0) + profile.eval(t, 0)
            return float(np.mean(r * r))
        h = TWO_PI / N
        res = minimize_scalar(energy, bounds=(s0 - h, s0 + h), method="bounded",
                              options={"xatol": 1e-12})
        return float(res.x)

    even_axes = []
    for i in _isolated_minima(e_even, tg, scale2, 4 * max(deg, 1)):
        c = refine_axis(tg[i], +1.0)
        if _verify_identity(profile, lambda t, c=c: 2.0 * c - t, +1.0):
            even_axes.append(wrap_angle(c))
    odd_centers = []
    for i in _isolated_minima(e_odd, tg, scale2, 4 * max(deg, 1)):
        c = refine_axis(tg[i], -1.0)
        if _verify_identity(profile, lambda t, c=c: 2.0 * c - t, -1.0):
            odd_centers.append(wrap_angle(c))
    antiperiods = []
    for i in _isolated_minima(e_anti, tg, scale2, 4 * max(deg, 1)):
        s = refine_shift(tg[i])
        if _verify_identity(profile, lambda t, s=s: t + s, -1.0):
            antiperiods.append(wrap_angle(s))

    return SymmetryData(fundamental_period=period,
                        even_axes=_dedup_circle(even_axes),
                        odd_centers=_dedup_circle(odd_centers),
                        antiperiods=_dedup_circle(antiperiods))


def distortion_constant(profile) -> float:
    """Smallest K >= 1 (within 1%) with (1/K) d(z, zeros) <= |f(z)| <= K d(z, zeros).

    Grid scan over 2^16 points plus local refinement of the ratio maxima.
    For the circle identity the quotient metric on values makes the map an
    isometry pointwise, and the value cap (sup |f| = 2pi against sup d = pi)
    gives the returned constant 2.
    """
    if isinstance(profile, CircleIdentity):
        return 2.0

    if not check_h1(profile).passed:
        raise NumericsError("distortion constant requires zeros separated "
                            "from critical points")
    roots = np.asarray(zero_set(profile, 0).roots, dtype=float)
    if roots.size == 0:
        raise NumericsError("distortion constant requires a nonempty zero set")

    def ratios(z):
        z = np.asarray(z, dtype=float)
        d = np.min(circle_dist(z[..., None], roots[None, :]), axis=-1)
        av = np.abs(profile.eval(z, 0))
        ok = (d > 1e-12) & (av > 1e-300)
        up = np.where(ok, av / np.where(ok, d, 1.0), 0.0)
        dn = np.where(ok, d / np.where(ok, av, 1.0), 0.0)
        return up, dn

    zg = np.linspace(0.0, TWO_PI, _DISTORTION_GRID_N, endpoint=False)
    up, dn = ratios(zg)
    h = TWO_PI / _DISTORTION_GRID_N

    best = max(1.0, float(np.max(up)), float(np.max(dn)))
    for vals, which in ((up, 0), (dn, 1)):
        i = int(np.argmax(vals))
        c = zg[i]
        res = minimize_scalar(lambda z: -ratios(np.array([z]))[which][0],
                              bounds=(c - h, c + h), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, float(-res.fun))
    return best
