"""Advection exactness, mixing-scale semantics, gradient norms, mix_run."""
import dataclasses
import math

import numpy as np
import pytest

from shearmix.errors import ConfigError
from shearmix.flow import Schedule, sample_schedule
from shearmix.mixing import (INITIAL_CONDITIONS, ScalarField, advect,
                             ball_means, default_radii, grad_norm_l1,
                             mix_run, mixing_scale, resolve_initial_condition)
from shearmix.profiles import TWO_PI, chirikov, pierrehumbert

PM = pierrehumbert()
CH = chirikov()

# largest r with 4 J1(r)/r = 1 (scipy.optimize.brentq on scipy.special.j1)
BESSEL_RSTAR = 2.2150893677243317


def grid_axes(n):
    ax = np.arange(n) * (TWO_PI / n)
    return np.meshgrid(ax, ax, indexing="ij")


def test_initial_condition_registry():
    assert set(INITIAL_CONDITIONS) == {"two_sin_q", "checkerboard"}
    fn, name = resolve_initial_condition("two_sin_q")
    assert name == "two_sin_q"
    assert math.isclose(fn(np.pi / 2.0, 0.0), 2.0, rel_tol=0, abs_tol=1e-15)
    with pytest.raises(ConfigError):
        resolve_initial_condition("no_such_data")


def test_advect_preconditions():
    s = sample_schedule(5, 3, 10.0)
    with pytest.raises(ConfigError):
        advect("two_sin_q", s, -1, 64, PM)
    with pytest.raises(ConfigError):
        advect("two_sin_q", s, 4, 64, PM)
    with pytest.raises(ConfigError):
        advect("two_sin_q", s, 1, 4, PM)
    with pytest.raises(ConfigError):
        advect(lambda q, p: 0.5 * np.sin(q), s, 0, 64, PM)
    with pytest.raises(ConfigError):
        advect(lambda q, p: 1.0 + np.sin(q), s, 0, 64, PM)


def test_advect_m0_samples_initial_data():
    s = sample_schedule(5, 2, 10.0)
    field = advect("two_sin_q", s, 0, 64, PM)
    qq, _ = grid_axes(64)
    np.testing.assert_array_equal(field.values, 2.0 * np.sin(qq))
    assert field.m == 0 and field.grid_n == 64
    assert field.u0_name == "two_sin_q"
    assert math.isclose(field.amplitude, 2.0, rel_tol=1e-6)


def test_advect_zero_schedule_unchanged():
    s = Schedule(durations=[0.0] * 10, horizon=10.0)
    base = advect("checkerboard", s, 0, 96, PM)
    for m in (1, 3, 5):
        np.testing.assert_array_equal(advect("checkerboard", s, m, 96, PM).values,
                                      base.values)


def test_single_horizontal_shear_closed_form():
    tau = 1.3
    s = Schedule(durations=[tau, 0.0], horizon=10.0)
    field = advect("two_sin_q", s, 1, 128, PM)
    qq, pp = grid_axes(128)
    exact = 2.0 * np.sin(qq - tau * np.sin(pp))
    np.testing.assert_allclose(field.values, exact, rtol=0, atol=1e-12)


def test_advection_matches_independent_backward_orbit():
    s = sample_schedule(11, 5, 10.0)
    n = 64
    field = advect("two_sin_q", s, 5, n, PM)
    taus = s.durations.tolist()
    rng = np.random.default_rng(2)
    for _ in range(25):
        i, j = int(rng.integers(n)), int(rng.integers(n))
        q = i * (TWO_PI / n)
        p = j * (TWO_PI / n)
        for k in range(4, -1, -1):
            p = math.fmod(p - taus[2 * k + 1] * math.sin(q), TWO_PI) % TWO_PI
            q = math.fmod(q - taus[2 * k] * math.sin(p), TWO_PI) % TWO_PI
        assert abs(field.values[i, j] - 2.0 * math.sin(q)) < 1e-12


def test_linf_rearrangement_checkerboard():
    # exact sampling keeps the value set {-3, 0, 3}; no interpolation decay
    s = sample_schedule(17, 8, 10.0)
    for m in (0, 2, 8):
        field = advect("checkerboard", s, m, 256, PM)
        assert abs(float(np.max(np.abs(field.values))) - 3.0) < 1e-12


def test_ball_means_full_torus_is_grid_mean():
    s = Schedule(durations=[0.0, 0.0], horizon=10.0)
    field = advect("two_sin_q", s, 0, 64, PM)
    means = ball_means(field, math.pi * math.sqrt(2.0))
    np.testing.assert_allclose(means, float(field.values.mean()),
                               rtol=0, atol=1e-12)


def test_bessel_threshold_radius():
    s = Schedule(durations=[0.0, 0.0], horizon=10.0)
    field = advect("two_sin_q", s, 0, 512, PM)
    step = 0.05
    radii = [3.0 - step * i for i in range(50)]
    scale = mixing_scale(field, radii)
    assert abs(scale - BESSEL_RSTAR) <= step + 1e-12
    assert scale <= BESSEL_RSTAR  # rasterized averages approximate from below


def test_zero_field_scale_is_zero():
    s = Schedule(durations=[0.0, 0.0], horizon=10.0)
    field = ScalarField(grid_n=64, values=np.zeros((64, 64)), u0_name="zero",
                        amplitude=0.0, schedule=s, m=0)
    assert mixing_scale(field, default_radii(64)) == 0.0


def test_radii_validation():
    s = Schedule(durations=[0.0, 0.0], horizon=10.0)
    field = advect("two_sin_q", s, 0, 64, PM)
    with pytest.raises(ConfigError):
        mixing_scale(field, [])
    with pytest.raises(ConfigError):
        mixing_scale(field, [1.0, 2.0])
    with pytest.raises(ConfigError):
        mixing_scale(field, [1.0, TWO_PI / 64])
    with pytest.raises(ConfigError):
        mixing_scale(field, [5.0, 1.0])


def test_threshold_monotonicity():
    s = sample_schedule(9, 3, 10.0)
    radii = default_radii(128)
    for m in (0, 1, 2):
        field = advect("two_sin_q", s, m, 128, PM)
        assert mixing_scale(field, radii, 1.5) <= mixing_scale(field, radii, 1.0)


def test_scale_monotone_under_pointwise_shrinking():
    s = sample_schedule(9, 2, 10.0)
    radii = default_radii(128)
    field = advect("two_sin_q", s, 1, 128, PM)
    shrunk = dataclasses.replace(field, values=0.6 * field.values)
    assert mixing_scale(shrunk, radii) <= mixing_scale(field, radii)


def test_default_radii_shape():
    radii = default_radii(1024)
    assert radii[0] == math.pi
    assert all(a / b == 2.0 for a, b in zip(radii, radii[1:]))
    assert radii[-1] >= 4.0 * TWO_PI / 1024


def test_grad_norm_oracles():
    z = Schedule(durations=[0.0, 0.0], horizon=10.0)
    assert grad_norm_l1(z, 2, PM) == 0.0
    s = Schedule(durations=[1.0, 0.0], horizon=10.0)
    assert math.isclose(grad_norm_l1(s, 1, PM), 8.0 * math.pi,
                        rel_tol=0, abs_tol=1e-9)
    # circle identity has f' = 1, so a vertical slot gives tau * 2pi * 2pi
    c = Schedule(durations=[0.0, 1.5], horizon=10.0)
    assert math.isclose(grad_norm_l1(c, 2, CH), 1.5 * TWO_PI * TWO_PI,
                        rel_tol=0, abs_tol=1e-9)


def test_grad_norm_additive_and_linear():
    s = sample_schedule(23, 2, 10.0)
    parts = 0.0
    for i in range(4):
        one = np.zeros(4)
        one[i] = s.durations[i]
        parts += grad_norm_l1(Schedule(durations=one, horizon=10.0), 4, PM)
    total = grad_norm_l1(s, 4, PM)
    assert math.isclose(total, parts, rel_tol=1e-12)
    doubled = Schedule(durations=2.0 * s.durations, horizon=10.0)
    assert math.isclose(grad_norm_l1(doubled, 4, PM), 2.0 * total, rel_tol=1e-12)
    with pytest.raises(ConfigError):
        grad_norm_l1(s, 5, PM)
    with pytest.raises(ConfigError):
        grad_norm_l1(s, -1, PM)


def test_mix_run_decay_and_estimates():
    rep = mix_run(PM, "two_sin_q", sample_schedule(3, 12, 10.0), 12, 256)
    assert rep.m == tuple(range(13))
    assert not rep.no_mixing
    assert all(0.0 <= sc <= math.pi * math.sqrt(2.0) for sc in rep.mix_scale)
    assert rep.mix_scale[-1] < rep.mix_scale[0]
    assert all(b >= a for a, b in zip(rep.grad_norm_cum, rep.grad_norm_cum[1:]))
    assert rep.slope is not None and rep.slope < 0.0
    assert rep.r2 is not None and rep.r2 > 0.8
    assert rep.eta_hat is not None and rep.eta_hat > 0.0
    assert rep.eta_running[-1] == rep.eta_hat
    m_star = max(m for m, sc in zip(rep.m, rep.mix_scale) if sc > 0.0)
    assert rep.xi_hat == m_star / rep.grad_norm_cum[m_star]
    assert rep.xi_hat > 0.0


def test_mix_run_all_zero_schedule_flagged():
    s = Schedule(durations=[0.0] * 8, horizon=10.0)
    rep = mix_run(PM, "two_sin_q", s, 4, 128)
    assert rep.no_mixing
    assert len(set(rep.mix_scale)) == 1
    assert rep.eta_hat is None and rep.xi_hat is None
    assert rep.slope is None and rep.r2 is None


def test_mix_run_determinism():
    a = mix_run(PM, "two_sin_q", sample_schedule(4, 6, 10.0), 6, 128)
    b = mix_run(PM, "two_sin_q", sample_schedule(4, 6, 10.0), 6, 128)
    assert a.mix_scale == b.mix_scale
    assert a.grad_norm_cum == b.grad_norm_cum
    assert a.eta_hat == b.eta_hat and a.xi_hat == b.xi_hat


def test_mix_run_validation():
    s = sample_schedule(4, 6, 10.0)
    with pytest.raises(ConfigError):
        mix_run(PM, "two_sin_q", s, 0, 128)
    with pytest.raises(ConfigError):
        mix_run(PM, "two_sin_q", s, 7, 128)
