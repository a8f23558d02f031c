"""Drift diagnostics and correlation decay for the random shear chain.

One-point drift uses V(q, p) = max(d(q, zeros(f2)), d(p, zeros(f1)))^(-beta) + b,
which blows up on the fixed-point set F and is >= 1 away from it when b = 1.
Closed-form one-step bounds come in two regimes (case 1 and case 2); both
decay to 2^(-beta) for large horizons when beta < 1/4.  The two-point
functional V2 is c0 on a bounded region C and W + a*(V1(x) + V1(y)) near the
invariant set or near F, with W built from the distance to the invariant-set
components.  Monte Carlo ratios estimate the measured one-step contraction of
both functionals; correlation_series tracks ball-to-ball decorrelation of a
mean-zero observable and fits a geometric rate over the window where the
signal stays above three standard errors.

All Monte Carlo reductions run through math.fsum in fixed index order, so
repeated runs with the same seed are bitwise identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import rng
from .chains import InvariantSetDescriptor, build_invariant_set, dist_to_invariant
from .errors import ConfigError
from .flow import step_positions, wrap_angle
from .profiles import ShearModel, circle_dist, fixed_points, zero_set

_CLIP = 1e-12
_QUAD_N = 256
_MEAN_ZERO_TOL = 1e-6
_SNR_FACTOR = 3.0
_SCAN_RADII = 8
_SCAN_ANGLES = 16

_STREAM_RADIUS = 1
_STREAM_ANGLE = 3


@dataclass(frozen=True)
class DriftSpec:
    """Parameters of the one-point drift functional and its bounds.

    K is the distortion constant of the model's profiles; it only enters the
    closed-form bounds, so it may be left None when only eval_V is needed.
    horizon = 0 is allowed and makes the step the identity.
    """

    beta: float
    b: float = 1.0
    K: float | None = None
    horizon: float = 10.0
    eps0: float = 0.1

    def __post_init__(self):
        if not 0.0 < self.beta < 0.5:
            raise ConfigError("beta must lie in (0, 1/2), got %r" % (self.beta,))
        if self.b < 0.0:
            raise ConfigError("b must be >= 0")
        if self.K is not None and self.K < 1.0:
            raise ConfigError("distortion constant K must be >= 1")
        if self.horizon < 0.0:
            raise ConfigError("horizon must be >= 0")
        if self.eps0 <= 0.0:
            raise ConfigError("eps0 must be > 0")


@dataclass(frozen=True)
class TwoPointDriftSpec:
    """Parameters of the two-point functional V2.

    W(x, y) = (min_k d(k(x), y))^(-h) with unit weight; V2 equals c0 on
    C = {pairs farther than s_star from the invariant set with both points
    at least eps from F} and W + a*(V1(x) + V1(y)) elsewhere.
    """

    h: float
    s_star: float = 0.05
    a: float = 0.1
    c0: float = 1.0
    eps: float = 0.1

    def __post_init__(self):
        if self.h <= 0.0:
            raise ConfigError("h must be > 0")
        if self.s_star <= 0.0:
            raise ConfigError("s_star must be > 0")
        if self.a <= 0.0:
            raise ConfigError("a must be > 0")
        if self.c0 < 1.0:
            raise ConfigError("c0 must be >= 1")
        if self.eps <= 0.0:
            raise ConfigError("eps must be > 0")


def _dist_to_roots(z, roots):
    """Circle distance from z to the nearest element of a root tuple."""
    z = np.asarray(z, dtype=float)
    stacked = np.stack([circle_dist(z, r) for r in roots])
    return stacked.min(axis=0)


def _model_lines(model: ShearModel):
    """Zero sets entering V: q is measured against zeros(f2), p against
    zeros(f1)."""
    return zero_set(model.f2).roots, zero_set(model.f1).roots


def _v_core(q, p, zq, zp, beta, clip=None):
    d = np.maximum(_dist_to_roots(q, zq), _dist_to_roots(p, zp))
    n_clipped = 0
    if clip is not None:
        n_clipped = int(np.count_nonzero(d < clip))
        d = np.maximum(d, clip)
    with np.errstate(divide="ignore"):
        v1 = np.where(d > 0.0, d, np.nan) ** (-beta)
    v1 = np.where(np.asarray(d) > 0.0, v1, np.inf)
    return v1, n_clipped


def eval_V(x, model: ShearModel, spec: DriftSpec):
    """V(x) = max(d(q, C_f2), d(p, C_f1))^(-beta) + b; inf exactly on F."""
    zq, zp = _model_lines(model)
    v1, _ = _v_core(x[0], x[1], zq, zp, spec.beta)
    return float(v1 + spec.b)


def _f_dist(q, p, f_points):
    q = np.asarray(q, dtype=float)
    stacked = np.stack(
        [np.hypot(circle_dist(q, qf), circle_dist(p, pf)) for qf, pf in f_points]
    )
    return stacked.min(axis=0)


def _v2_core(qx, px, qy, py, zq, zp, f_points, delta, spec, spec2, clip=None):
    d_pair = dist_to_invariant(qx, px, qy, py, delta)
    n_clipped = 0
    if clip is not None:
        n_clipped = int(np.count_nonzero(np.asarray(d_pair) < clip))
        d_pair = np.maximum(d_pair, clip)
    v1x, cx = _v_core(qx, px, zq, zp, spec.beta, clip)
    v1y, cy = _v_core(qy, py, zq, zp, spec.beta, clip)
    n_clipped += cx + cy
    f_dist = np.minimum(_f_dist(qx, px, f_points), _f_dist(qy, py, f_points))
    in_c = (np.asarray(d_pair) > spec2.s_star) & (f_dist >= spec2.eps)
    with np.errstate(divide="ignore"):
        w = np.where(np.asarray(d_pair) > 0.0, d_pair, np.nan) ** (-spec2.h)
    w = np.where(np.asarray(d_pair) > 0.0, w, np.inf)
    v2 = np.where(in_c, spec2.c0, w + spec2.a * (v1x + v1y))
    return v2, n_clipped


def eval_V2(x, y, model: ShearModel, spec: DriftSpec, spec2: TwoPointDriftSpec,
            delta: InvariantSetDescriptor | None = None):
    """Piecewise two-point functional; inf exactly on the invariant set."""
    if delta is None:
        delta = build_invariant_set(model)
    zq, zp = _model_lines(model)
    f_points = fixed_points(model)
    v2, _ = _v2_core(x[0], x[1], y[0], y[1], zq, zp, f_points, delta, spec, spec2)
    return float(v2)


def drift_bound(case: int, K: float, beta: float, T: float) -> float:
    """Closed-form one-step bound on E[V after] / V for points near F.

    Case 2's middle term has exponent 1/2 - 2*beta and so decays only for
    beta < 1/4; for beta >= 1/4 the bound grows without limit in T.
    """
    if case not in (1, 2):
        raise ConfigError("case must be 1 or 2")
    if K < 1.0:
        raise ConfigError("K must be >= 1")
    if not 0.0 < beta < 0.5:
        raise ConfigError("beta must lie in (0, 1/2)")
    if T <= 0.0:
        raise ConfigError("T must be > 0")
    tail = 2.0 ** (-beta)
    if case == 1:
        return K * 2.0 ** beta / T ** 2 + 2.0 ** (2.0 + beta) * K ** (beta + 1.0) / T ** (1.0 - beta) + tail
    return (
        4.0 ** beta * K ** beta / T ** (2.0 - beta)
        + 4.0 ** (1.0 + beta) * K ** (2.0 + 2.0 * beta) / T ** (0.5 - 2.0 * beta)
        + 3.0 * K / T ** ((1.0 - beta) / 2.0)
        + tail
    )


_MAX_T = 1e300


def find_min_T(K: float, beta: float) -> float | None:
    """Smallest horizon T with max(case-1, case-2) bound < 1, to three
    significant digits, or None when no representable T achieves it."""
    if not 0.0 < beta < 0.25:
        raise ConfigError("find_min_T requires beta in (0, 1/4)")
    if K < 1.0:
        raise ConfigError("K must be >= 1")

    def worst(T):
        return max(drift_bound(1, K, beta, T), drift_bound(2, K, beta, T))

    lo = 1.0
    hi = 10.0
    while worst(hi) >= 1.0:
        lo = hi
        hi *= 10.0
        if hi > _MAX_T:
            return None
    while hi / lo > 1.0 + 1e-3:
        mid = math.sqrt(lo * hi)
        if worst(mid) < 1.0:
            hi = mid
        else:
            lo = mid
    return hi


@dataclass(frozen=True)
class DriftRatio:
    x: tuple
    v_start: float
    ratio: float
    stderr: float
    n: int
    n_clipped: int
    seed: int


def _mean_ratio(values, v_start, n):
    """mean(values)/v_start computed so that values identical to v_start
    give exactly 1.0 (the zero-horizon identity)."""
    shift = math.fsum(float(v) - v_start for v in values)
    return 1.0 + shift / (n * v_start)


def empirical_drift_ratio(x, model: ShearModel, spec: DriftSpec, n: int,
                          seed: int, sample_offset: int = 0) -> DriftRatio:
    """Monte Carlo estimate of E[V(step(x))] / V(x) over n duration draws.

    Points are required to start within eps0 of F, the regime the drift
    bounds address.  Draws landing within 1e-12 of the zero lines are
    clipped there and counted in n_clipped.
    """
    if n < 2:
        raise ConfigError("n must be >= 2")
    f_points = fixed_points(model)
    if float(_f_dist(x[0], x[1], f_points)) > spec.eps0 * (1.0 + 1e-9):
        raise ConfigError("start point lies farther than eps0 from F")
    zq, zp = _model_lines(model)
    v_start, _ = _v_core(x[0], x[1], zq, zp, spec.beta)
    v_start = float(v_start + spec.b)
    if not math.isfinite(v_start):
        raise ConfigError("start point lies exactly on F")
    taus = rng.duration_matrix(seed, n, 2, spec.horizon, sample_offset=sample_offset)
    q1, p1 = step_positions(np.full(n, float(x[0])), np.full(n, float(x[1])),
                            taus[:, 0], taus[:, 1], model)
    v1, n_clipped = _v_core(q1, p1, zq, zp, spec.beta, clip=_CLIP)
    v_after = v1 + spec.b
    ratio = _mean_ratio(v_after, v_start, n)
    stderr = float(np.std(v_after)) / math.sqrt(n) / v_start
    return DriftRatio(x=(float(x[0]), float(x[1])), v_start=v_start, ratio=ratio,
                      stderr=stderr, n=n, n_clipped=n_clipped, seed=seed)


@dataclass(frozen=True)
class DriftScan:
    spec: DriftSpec
    n_per_point: int
    seed: int
    records: tuple
    empirical_alpha: float
    worst_point: tuple
    all_contracting_95: bool


def polar_grid(model: ShearModel, spec: DriftSpec) -> tuple:
    """Scan geometry shared by drift_scan and its serializers: one entry
    (center, radius, angle, start point) per node, 8 geometric radii
    (eps0/128 up to eps0) by 16 angles around every point of F."""
    radii = [spec.eps0 * 2.0 ** (i - (_SCAN_RADII - 1)) for i in range(_SCAN_RADII)]
    nodes = []
    for qf, pf in fixed_points(model):
        for r in radii:
            for ia in range(_SCAN_ANGLES):
                ang = 2.0 * math.pi * ia / _SCAN_ANGLES
                x = (float(wrap_angle(qf + r * math.cos(ang))),
                     float(wrap_angle(pf + r * math.sin(ang))))
                nodes.append(((qf, pf), r, ang, x))
    return tuple(nodes)


def drift_scan(model: ShearModel, spec: DriftSpec, n: int, seed: int) -> DriftScan:
    """Drift ratios over polar_grid.  empirical_alpha is the worst measured
    ratio; the 95% flag holds when ratio + 1.96*stderr < 1 at every node."""
    records = []
    for idx, (_, _, _, x) in enumerate(polar_grid(model, spec)):
        records.append(empirical_drift_ratio(x, model, spec, n, seed,
                                             sample_offset=idx * n))
    worst = max(records, key=lambda rec: rec.ratio)
    ok95 = all(rec.ratio + 1.96 * rec.stderr < 1.0 for rec in records)
    return DriftScan(spec=spec, n_per_point=n, seed=seed, records=tuple(records),
                     empirical_alpha=worst.ratio, worst_point=worst.x,
                     all_contracting_95=ok95)


@dataclass(frozen=True)
class TwoPointDriftRatio:
    x: tuple
    y: tuple
    h: float
    v2_start: float
    ratio: float
    stderr: float
    n: int
    n_clipped: int
    seed: int


def empirical_two_point_drift(x, y, model: ShearModel, spec: DriftSpec,
                              spec2: TwoPointDriftSpec, n: int, seed: int,
                              delta: InvariantSetDescriptor | None = None
                              ) -> TwoPointDriftRatio:
    """Monte Carlo estimate of E[V2 after one shared-duration step] / V2(x, y).

    The pair must start at least 1e-6 off the invariant set.  Draws whose
    image lands within 1e-12 of the invariant set or the zero lines are
    clipped and counted."""
    if n < 2:
        raise ConfigError("n must be >= 2")
    if delta is None:
        delta = build_invariant_set(model)
    if float(dist_to_invariant(x[0], x[1], y[0], y[1], delta)) < 1e-6:
        raise ConfigError("pair starts closer than 1e-6 to the invariant set")
    zq, zp = _model_lines(model)
    f_points = fixed_points(model)
    v2_start, _ = _v2_core(x[0], x[1], y[0], y[1], zq, zp, f_points, delta,
                           spec, spec2)
    v2_start = float(v2_start)
    taus = rng.duration_matrix(seed, n, 2, spec.horizon)
    qx, px = step_positions(np.full(n, float(x[0])), np.full(n, float(x[1])),
                            taus[:, 0], taus[:, 1], model)
    qy, py = step_positions(np.full(n, float(y[0])), np.full(n, float(y[1])),
                            taus[:, 0], taus[:, 1], model)
    v2, n_clipped = _v2_core(qx, px, qy, py, zq, zp, f_points, delta, spec,
                             spec2, clip=_CLIP)
    ratio = _mean_ratio(v2, v2_start, n)
    stderr = float(np.std(v2)) / math.sqrt(n) / v2_start
    return TwoPointDriftRatio(x=(float(x[0]), float(x[1])),
                              y=(float(y[0]), float(y[1])), h=spec2.h,
                              v2_start=v2_start, ratio=ratio, stderr=stderr,
                              n=n, n_clipped=n_clipped, seed=seed)


def two_point_drift_sweep(x, y, model: ShearModel, spec: DriftSpec,
                          spec2: TwoPointDriftSpec, n: int, seed: int,
                          hs=(0.1, 0.25, 0.5)):
    """One record per h on the same trajectories; the smallest ratio marks
    the best measured contraction."""
    delta = build_invariant_set(model)
    records = tuple(
        empirical_two_point_drift(x, y, model, spec, replace(spec2, h=h), n,
                                  seed, delta=delta)
        for h in hs
    )
    best = min(records, key=lambda rec: rec.ratio)
    return records, best


OBSERVABLES = {
    "two_sin_q": lambda q, p: 2.0 * np.sin(q),
    "two_sin_p": lambda q, p: 2.0 * np.sin(p),
    "sin_q_sin_p": lambda q, p: np.sin(q) * np.sin(p),
}


def resolve_observable(g):
    """Accept a registry name or a callable g(q, p); reject observables whose
    plain quadrature mean on the torus exceeds 1e-6 in absolute value."""
    if callable(g):
        fn, name = g, getattr(g, "__name__", "custom")
    else:
        try:
            fn, name = OBSERVABLES[g], g
        except KeyError:
            raise ConfigError("unknown observable %r; known: %s"
                              % (g, ", ".join(sorted(OBSERVABLES))))
    grid = (np.arange(_QUAD_N) + 0.5) * (2.0 * math.pi / _QUAD_N)
    qq, pp = np.meshgrid(grid, grid, indexing="ij")
    mean = float(np.mean(fn(qq, pp)))
    if abs(mean) > _MEAN_ZERO_TOL:
        raise ConfigError("observable %s is not mean-zero (quadrature mean %.3e)"
                          % (name, mean))
    return fn, name


@dataclass(frozen=True)
class CorrelationSeries:
    g_name: str
    center: tuple
    radius: float
    horizon: float
    n_pairs: int
    m_max: int
    seed: int
    m: tuple
    c_m: tuple
    stderr: tuple
    window_len: int
    lambda_hat: float | None
    r2: float | None


def correlation_series(model: ShearModel, g, center, radius: float,
                       n_pairs: int, m_max: int, seed: int,
                       horizon: float = 10.0) -> CorrelationSeries:
    """Ball-to-ball correlation decay: c_m = |mean over pairs of
    g(x_m) g(y_m)| with both points of a pair driven by the same schedule.

    The geometric rate is fitted by least squares on log c_m over the
    longest prefix where c_m exceeds three times its standard error; pairs
    are drawn independently and uniformly from the ball."""
    if radius <= 0.0:
        raise ConfigError("radius must be > 0")
    if m_max < 1:
        raise ConfigError("m_max must be >= 1")
    if n_pairs < 2:
        raise ConfigError("n_pairs must be >= 2")
    fn, name = resolve_observable(g)
    k = np.arange(n_pairs, dtype=np.uint64)
    pts = []
    for j in (0, 1):
        u_r = rng.uniform01(seed, k, j, stream=_STREAM_RADIUS)
        u_a = rng.uniform01(seed, k, j, stream=_STREAM_ANGLE)
        rr = radius * np.sqrt(u_r)
        ang = 2.0 * math.pi * u_a
        pts.append((wrap_angle(center[0] + rr * np.cos(ang)),
                    wrap_angle(center[1] + rr * np.sin(ang))))
    (qx, px), (qy, py) = pts
    taus = rng.duration_matrix(seed, n_pairs, 2 * m_max, horizon)

    ms, c_abs, errs = [], [], []

    def record(step_index, qx, px, qy, py):
        prod = fn(qx, px) * fn(qy, py)
        mean = math.fsum(float(v) for v in prod) / n_pairs
        ms.append(step_index)
        c_abs.append(abs(mean))
        errs.append(float(np.std(prod)) / math.sqrt(n_pairs))

    record(0, qx, px, qy, py)
    for m in range(1, m_max + 1):
        t1 = taus[:, 2 * (m - 1)]
        t2 = taus[:, 2 * (m - 1) + 1]
        qx, px = step_positions(qx, px, t1, t2, model)
        qy, py = step_positions(qy, py, t1, t2, model)
        record(m, qx, px, qy, py)

    window = 0
    while window < len(ms) and c_abs[window] > _SNR_FACTOR * errs[window]:
        window += 1
    lambda_hat = r2 = None
    if window >= 2:
        mm = np.asarray(ms[:window], dtype=float)
        logc = np.log(np.asarray(c_abs[:window]))
        slope, intercept = np.polyfit(mm, logc, 1)
        fit = slope * mm + intercept
        ss_res = float(np.sum((logc - fit) ** 2))
        ss_tot = float(np.sum((logc - logc.mean()) ** 2))
        lambda_hat = float(np.exp(slope))
        r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return CorrelationSeries(g_name=name, center=(float(center[0]), float(center[1])),
                             radius=radius, horizon=horizon, n_pairs=n_pairs,
                             m_max=m_max, seed=seed, m=tuple(ms),
                             c_m=tuple(c_abs), stderr=tuple(errs),
                             window_len=window, lambda_hat=lambda_hat, r2=r2)
