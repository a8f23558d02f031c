"""Tangent, projective, and two-point chains; invariant sets of pairs."""
import itertools
import math

import numpy as np
import pytest

from shearmix.chains import (InvariantSetDescriptor, ProjectiveState,
                             TangentState, build_invariant_set,
                             dist_to_invariant, projective_step, tangent_step,
                             two_point_step)
from shearmix.flow import sample_schedule, step, step_positions, torus_dist
from shearmix.profiles import TrigPoly, ShearModel, chirikov, pierrehumbert

TWO_PI = 2.0 * math.pi


def test_zero_tangent_rejected():
    with pytest.raises(ValueError):
        TangentState(q=0.0, p=0.0, u1=0.0, u2=0.0)
    with pytest.raises(ValueError):
        ProjectiveState(q=0.0, p=0.0, u1=0.0, u2=0.0)


def test_projective_state_normalizes():
    s = ProjectiveState(q=0.0, p=0.0, u1=3.0, u2=4.0)
    assert math.hypot(s.u1, s.u2) == pytest.approx(1.0, abs=1e-12)


def test_tangent_step_horizontal_example():
    # f1'(0) = 1 for the sine profile: u = (0,1) -> (tau, 1),
    # log gain = log sqrt(1 + tau^2)
    m = pierrehumbert()
    for tau in (0.5, 1.0, 7.3):
        q, p, u1, u2, lg = tangent_step(1.0, 0.0, 0.0, 1.0, tau, 0.0, m,
                                        renormalize=False)
        assert u1 == pytest.approx(tau, abs=1e-12)
        assert u2 == pytest.approx(1.0, abs=1e-12)
        assert lg == pytest.approx(0.5 * math.log(1.0 + tau * tau), abs=1e-12)


def test_tangent_step_matches_jacobian():
    # independent route: multiply the full 2x2 Jacobian from the base flow
    for m in (pierrehumbert(), chirikov()):
        rs = np.random.default_rng(21)
        for _ in range(60):
            q, p = rs.uniform(0, TWO_PI, 2)
            t1, t2 = rs.uniform(0, 10.0, 2)
            u = rs.normal(size=2)
            u /= np.hypot(*u)
            _, _, J = step(q, p, t1, t2, m)
            w = J @ u
            q1, p1, v1, v2, lg = tangent_step(q, p, u[0], u[1], t1, t2, m,
                                              renormalize=False)
            np.testing.assert_allclose([v1, v2], w, atol=1e-12)
            assert lg == pytest.approx(math.log(np.hypot(*w)), abs=1e-12)


def test_tangent_telescoping_vs_jacobian_product():
    # sum of per-step log gains equals log |J_m ... J_1 u0| for m <= 50
    m = pierrehumbert()
    rs = np.random.default_rng(22)
    q, p = rs.uniform(0, TWO_PI, 2)
    u1, u2 = 0.6, 0.8
    sched = sample_schedule(seed=31, m=50, horizon=10.0)
    J_total = np.eye(2)
    qq, pp = q, p
    total = 0.0
    v1, v2 = u1, u2
    for t1, t2 in sched.pairs():
        _, _, J = step(qq, pp, t1, t2, m)
        J_total = J @ J_total
        qq, pp, v1, v2, lg = tangent_step(qq, pp, v1, v2, t1, t2, m)
        total += lg
    ref = math.log(np.linalg.norm(J_total @ np.array([u1, u2])))
    assert total == pytest.approx(ref, rel=1e-8)


def test_projective_step_sign_equivariance():
    m = pierrehumbert()
    rs = np.random.default_rng(23)
    for _ in range(40):
        q, p = rs.uniform(0, TWO_PI, 2)
        t1, t2 = rs.uniform(0, 10.0, 2)
        th = rs.uniform(0, TWO_PI)
        u = (math.cos(th), math.sin(th))
        qa, pa, a1, a2 = projective_step(q, p, u[0], u[1], t1, t2, m)
        qb, pb, b1, b2 = projective_step(q, p, -u[0], -u[1], t1, t2, m)
        assert (qa, pa) == (qb, pb)
        same = max(abs(a1 - b1), abs(a2 - b2))
        flip = max(abs(a1 + b1), abs(a2 + b2))
        assert min(same, flip) < 1e-12
        assert math.hypot(a1, a2) == pytest.approx(1.0, abs=1e-12)


def test_two_point_step_marginals():
    m = chirikov()
    qx, px, qy, py = 0.3, 1.1, 4.0, 5.5
    t1, t2 = 2.2, 0.7
    rx = step_positions(qx, px, t1, t2, m)
    ry = step_positions(qy, py, t1, t2, m)
    got = two_point_step(qx, px, qy, py, t1, t2, m)
    np.testing.assert_allclose(got, (rx[0], rx[1], ry[0], ry[1]), atol=0)


def _brute_force_graph_count(model, n_shift=512, n_z=64):
    """Independent oracle: scan all candidate graphs (sq*q + a, sp*p + b)
    on a shift grid and count those whose defining real identities hold."""
    z = np.linspace(0.0, TWO_PI, n_z, endpoint=False) + 0.0123
    shifts = np.linspace(0.0, TWO_PI, n_shift, endpoint=False)
    found = set()
    for sq, sp in itertools.product((1, -1), repeat=2):
        f1z = model.f1.eval(sp * z[None, :] + shifts[:, None], 0)
        ok1 = np.max(np.abs(f1z - sq * model.f1.eval(z, 0)[None, :]), axis=1) < 1e-9
        f2z = model.f2.eval(sq * z[None, :] + shifts[:, None], 0)
        ok2 = np.max(np.abs(f2z - sp * model.f2.eval(z, 0)[None, :]), axis=1) < 1e-9
        for b in shifts[ok1]:
            for a in shifts[ok2]:
                found.add((sq, round(float(a), 6), sp, round(float(b), 6)))
    return len(found)


def test_invariant_set_pierrehumbert():
    desc = build_invariant_set(pierrehumbert())
    assert len(desc) == 4
    maps = {(c.sign_q, round(c.shift_q, 9), c.sign_p, round(c.shift_p, 9))
            for c in desc.components}
    pi = round(math.pi, 9)
    assert maps == {(1, 0.0, 1, 0.0), (1, pi, -1, pi), (-1, pi, 1, pi),
                    (-1, 0.0, -1, 0.0)}


def test_invariant_set_chirikov_diagonal_only():
    desc = build_invariant_set(chirikov())
    assert len(desc) == 1
    c = desc.components[0]
    assert (c.sign_q, c.shift_q, c.sign_p, c.shift_p) == (1, 0.0, 1, 0.0)


def test_invariant_set_double_sine_matches_brute_force():
    f = TrigPoly(cos_coeffs=(0.0, 0.0, 0.0), sin_coeffs=(0.0, 1.0))
    model = ShearModel(name="double-sine", f1=f, f2=f)
    desc = build_invariant_set(model)
    assert len(desc) == 16
    assert _brute_force_graph_count(model) == 16


def test_dist_to_invariant_example():
    desc = build_invariant_set(pierrehumbert())
    d = dist_to_invariant(0.0, 0.3, math.pi, math.pi - 0.3, desc)
    assert float(d) == pytest.approx(0.0, abs=1e-12)
    d2 = dist_to_invariant(0.0, 0.3, 0.0, 0.3, desc)
    assert float(d2) == pytest.approx(0.0, abs=1e-12)
    d3 = dist_to_invariant(1.0, 2.0, 1.5, 2.0, desc)
    assert float(d3) == pytest.approx(0.5, abs=1e-9)


def test_invariant_set_survives_twenty_steps():
    # pairs seeded on a component stay within 1e-6 after 20 shared steps;
    # horizon 2 keeps the exponential roundoff amplification below the bound
    for model in (pierrehumbert(), chirikov()):
        desc = build_invariant_set(model)
        rs = np.random.default_rng(77)
        n = 1000
        qx = rs.uniform(0, TWO_PI, n)
        px = rs.uniform(0, TWO_PI, n)
        comp_idx = rs.integers(0, len(desc.components), n)
        qy = np.empty(n)
        py = np.empty(n)
        for i, c in enumerate(desc.components):
            sel = comp_idx == i
            qy[sel], py[sel] = c.apply(qx[sel], px[sel])
        for k in range(20):
            t1, t2 = rs.uniform(0, 2.0, 2)
            qx, px, qy, py = two_point_step(qx, px, qy, py, t1, t2, model)
        d = dist_to_invariant(qx, px, qy, py, desc)
        assert float(np.max(d)) <= 1e-6
