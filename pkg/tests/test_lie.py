"""Bracket calculus: dual-number route vs finite differences vs closed forms.

Closed-form bracket components used as oracles here were derived by hand
and double-checked with symbolic differentiation before being frozen.
"""
import math

import numpy as np
import pytest

from shearmix.errors import ConfigError, NumericsError
from shearmix.lie import (DEFAULT_WORDS, Dual, bracket, bracket_depth,
                          check_hypothesis, eval_field, eval_word,
                          profile_eval, projective_det3, rank_certificate,
                          word_label)
from shearmix.profiles import (CircleIdentity, TrigPoly, ShearModel, chirikov,
                               pierrehumbert, sine_profile)

TWO_PI = 2.0 * math.pi


def test_dual_arithmetic_and_profile_eval():
    f = sine_profile()
    d = profile_eval(f, Dual(1.2, 1.0))
    assert d.a == pytest.approx(math.sin(1.2), abs=1e-15)
    assert d.b == pytest.approx(math.cos(1.2), abs=1e-15)
    # second derivative through nesting
    dd = profile_eval(f, Dual(Dual(1.2, 1.0), Dual(1.0, 0.0)))
    assert dd.b.b == pytest.approx(-math.sin(1.2), abs=1e-15)
    # circle identity: representative value, derivative one
    ci = profile_eval(CircleIdentity(), Dual(7.0, 2.0))
    assert ci.a == pytest.approx(7.0 - TWO_PI, abs=1e-15)
    assert ci.b == 2.0


def test_field_values():
    m = pierrehumbert()
    np.testing.assert_allclose(eval_field("base", 1, (0.3, 1.1), m),
                               [math.sin(1.1), 0.0], atol=1e-15)
    np.testing.assert_allclose(eval_field("lifted", 2, (0.3, 1.1, 0.5, 0.6), m),
                               [0.0, math.sin(0.3), 0.0, 0.5 * math.cos(0.3)],
                               atol=1e-15)
    np.testing.assert_allclose(eval_field("two_point", 1, (0.3, 1.1, 0.4, 1.2), m),
                               [math.sin(1.1), 0.0, math.sin(1.2), 0.0],
                               atol=1e-15)
    c = chirikov()
    np.testing.assert_allclose(eval_field("lifted", 2, (0.3, 1.1, 0.5, 0.6), c),
                               [0.0, 0.3, 0.0, 0.5], atol=1e-15)


def test_base_bracket_example():
    # [X1, X2] = (-f1'(p) f2(q), f1(p) f2'(q)) = (-1, 0) at (pi/2, 0)
    m = pierrehumbert()
    res = bracket("base", 1, 2, (math.pi / 2, 0.0), m)
    np.testing.assert_allclose(res.value, [-1.0, 0.0], atol=1e-9)
    np.testing.assert_allclose(res.exact, [-1.0, 0.0], atol=1e-15)


def test_base_bracket_closed_form_everywhere():
    for m in (pierrehumbert(), chirikov()):
        rs = np.random.default_rng(31)
        for _ in range(200):
            q, p = rs.uniform(0.1, TWO_PI - 0.1, 2)
            res = bracket("base", 1, 2, (q, p), m)
            want = [-m.f1.eval(p, 1) * m.f2.eval(q, 0),
                    m.f1.eval(p, 0) * m.f2.eval(q, 1)]
            np.testing.assert_allclose(res.value, want, atol=1e-6)
            np.testing.assert_allclose(res.exact, want, atol=1e-12)
            assert res.disagreement < 1e-6


def test_lifted_bracket_closed_form():
    m = pierrehumbert()
    rs = np.random.default_rng(32)
    for _ in range(1000):
        q, p = rs.uniform(0, TWO_PI, 2)
        th = rs.uniform(0, TWO_PI)
        u, v = math.cos(th), math.sin(th)
        got = eval_word("lifted", (1, 2), (q, p, u, v), m)
        want = [-math.cos(p) * math.sin(q),
                math.cos(q) * math.sin(p),
                -u * math.cos(p) * math.cos(q) + v * math.sin(p) * math.sin(q),
                v * math.cos(p) * math.cos(q) - u * math.sin(p) * math.sin(q)]
        np.testing.assert_allclose(got, want, atol=1e-13)


def test_lifted_double_bracket_closed_form_fd_route():
    # [X1, [X1, X2]] against the displayed closed form, via the returned
    # finite-difference route, at 10^3 points within 1e-6
    m = pierrehumbert()
    rs = np.random.default_rng(33)
    for _ in range(1000):
        q, p = rs.uniform(0, TWO_PI, 2)
        th = rs.uniform(0, TWO_PI)
        u, v = math.cos(th), math.sin(th)
        res = bracket("lifted", 1, (1, 2), (q, p, u, v), m)
        want = [-2.0 * math.cos(p) * math.cos(q) * math.sin(p),
                -math.sin(p) ** 2 * math.sin(q),
                -2.0 * v * math.cos(p) ** 2 * math.cos(q)
                + 2.0 * v * math.cos(q) * math.sin(p) ** 2
                + u * math.sin(2 * p) * math.sin(q),
                -math.sin(p) * (u * math.cos(q) * math.sin(p)
                                + 2.0 * v * math.cos(p) * math.sin(q))]
        np.testing.assert_allclose(res.value, want, atol=1e-6)


def test_two_point_double_bracket_closed_form():
    m = pierrehumbert()
    rs = np.random.default_rng(34)
    for _ in range(300):
        q, p, q1, p1 = rs.uniform(0, TWO_PI, 4)
        got = eval_word("two_point", ((1, 2), 1), (q, p, q1, p1), m)
        want = [math.cos(q) * math.sin(2 * p), math.sin(q) * math.sin(p) ** 2,
                math.cos(q1) * math.sin(2 * p1), math.sin(q1) * math.sin(p1) ** 2]
        np.testing.assert_allclose(got, want, atol=1e-13)


def test_bracket_antisymmetry():
    m = pierrehumbert()
    rs = np.random.default_rng(35)
    for family, dim in (("base", 2), ("lifted", 4), ("two_point", 4)):
        for _ in range(30):
            pt = rs.uniform(0, TWO_PI, dim)
            if family == "lifted":
                n = math.hypot(pt[2], pt[3])
                pt[2] /= n
                pt[3] /= n
            a = eval_word(family, (1, 2), pt, m)
            b = eval_word(family, (2, 1), pt, m)
            np.testing.assert_allclose(a, -b, atol=1e-9)


def test_jacobi_identity():
    # [A,[B,C]] + [B,[C,A]] + [C,[A,B]] = 0 with A = X1, B = X2, C = [X1, X2]
    m = pierrehumbert()
    rs = np.random.default_rng(36)
    for _ in range(100):
        pt = rs.uniform(0.2, TWO_PI - 0.2, 2)
        t1 = bracket("base", 1, (2, (1, 2)), pt, m).value
        t2 = bracket("base", 2, ((1, 2), 1), pt, m).value
        t3 = bracket("base", (1, 2), (1, 2), pt, m).value
        np.testing.assert_allclose(t1 + t2 + t3, 0.0, atol=1e-4)


def test_bracket_depth_cap():
    m = pierrehumbert()
    deep = (1, (1, (1, (1, 2))))
    assert bracket_depth(deep) == 4
    with pytest.raises(ConfigError):
        eval_word("base", deep, (1.0, 1.0), m)


def test_word_labels():
    assert word_label((1, (1, 2))) == "[X1,[X1,X2]]"


class _LyingProfile:
    """Reports a derivative inconsistent with its values."""
    degree = 1

    def eval(self, z, order: int = 0):
        z = np.asarray(z, dtype=float)
        if order == 0:
            out = np.sin(z)
        elif order == 1:
            out = np.cos(z) + 0.5
        else:
            out = -np.sin(z)
        return out if out.ndim else float(out)


def test_bracket_route_disagreement_raises():
    m = ShearModel(name="lying", f1=_LyingProfile(), f2=sine_profile())
    with pytest.raises(NumericsError):
        bracket("base", 1, 2, (1.0, 1.0), m)


def test_golden_determinants_true_values():
    # honest values of the four certificates; see notes on the two-point
    # sine-model value, whose published figure disagrees with its own
    # formulas (the true determinant at that point is sqrt(3)/16)
    pm, cm = pierrehumbert(), chirikov()
    lifted_pt = (math.pi / 3, math.pi / 3, math.sqrt(2) / 2, math.sqrt(2) / 2)
    c1 = rank_certificate("lifted", lifted_pt,
                          (1, 2, (1, 2), (1, (1, 2))), pm)
    assert c1.det == pytest.approx(27.0 / 128.0, abs=1e-9)
    assert c1.passed and c1.rank == 4
    c2 = rank_certificate("two_point", (math.pi / 3, math.pi / 2, math.pi / 2, math.pi / 3),
                          (1, 2, (1, 2), ((1, 2), 1)), pm)
    assert c2.det == pytest.approx(math.sqrt(3) / 16.0, abs=1e-9)
    assert c2.passed and c2.rank == 4
    c3 = rank_certificate("lifted", lifted_pt,
                          (1, 2, (1, 2), (1, (1, 2))), cm)
    assert c3.det == pytest.approx((9.0 - math.sqrt(3) * math.pi) / 16.0, abs=1e-9)
    assert c3.passed
    c4 = rank_certificate("two_point", (math.pi, math.pi / 2, math.pi / 2, math.pi / 3),
                          (1, 2, (1, 2), (1, (1, 2))), cm)
    assert c4.det == pytest.approx((3.0 - math.sqrt(3)) * math.pi / 4.0, abs=1e-9)
    assert c4.passed


def test_golden_determinants_fd_oracle():
    # independent route: assemble the same matrices from pure central
    # finite differences of the generator fields, no dual numbers involved
    def fd_word(family, word, pt, model, h=1e-5):
        from shearmix.lie import field_fn, scalar_value
        if isinstance(word, int):
            fn = field_fn(family, word, model)
            return np.array([scalar_value(c) for c in fn(list(pt))])

        def ev(w, x):
            return fd_word(family, w, x, model, h)
        wa, wb = word
        A = ev(wa, pt)
        B = ev(wb, pt)
        # directional differences along A and B
        pa_p = ev(wb, np.asarray(pt) + h * A)
        pa_m = ev(wb, np.asarray(pt) - h * A)
        pb_p = ev(wa, np.asarray(pt) + h * B)
        pb_m = ev(wa, np.asarray(pt) - h * B)
        return (pa_p - pa_m) / (2 * h) - (pb_p - pb_m) / (2 * h)

    pm = pierrehumbert()
    pt = np.array([math.pi / 3, math.pi / 2, math.pi / 2, math.pi / 3])
    cols = [fd_word("two_point", w, pt, pm)
            for w in (1, 2, (1, 2), ((1, 2), 1))]
    det = np.linalg.det(np.column_stack(cols))
    assert det == pytest.approx(math.sqrt(3) / 16.0, abs=1e-4)


def test_projective_det3_formula():
    # det of rows (q, p, u1) at u = (0, 1) equals
    # f2(q)^2 ([f1'(p)]^2 - f1(p) f1''(p)); sin^2(q) for the sine model
    m = pierrehumbert()
    rs = np.random.default_rng(37)
    for _ in range(1000):
        q, p = rs.uniform(0, TWO_PI, 2)
        got = projective_det3(m, q, p)
        f2q = m.f2.eval(q, 0)
        want = f2q * f2q * (m.f1.eval(p, 1) ** 2 - m.f1.eval(p, 0) * m.f1.eval(p, 2))
        assert got == pytest.approx(want, abs=1e-6)
        assert got == pytest.approx(math.sin(q) ** 2, abs=1e-6)


def test_projective_rank_target():
    m = pierrehumbert()
    res = check_hypothesis("projective", m, n_points=200, seed=5)
    assert res.passed
    assert res.certificate.rank == 3
    assert res.certificate.target_rank == 3


def test_check_hypothesis_standard_models():
    for m in (pierrehumbert(), chirikov()):
        h2 = check_hypothesis("lifted", m, n_points=100, seed=6)
        assert h2.passed and h2.n_tried <= 5
        h3 = check_hypothesis("two_point", m, n_points=100, seed=7)
        assert h3.passed and h3.n_tried <= 5
        hb = check_hypothesis("base", m, n_points=100, seed=8)
        assert hb.passed


def test_check_hypothesis_not_established():
    null = TrigPoly(cos_coeffs=(0.0, 0.0), sin_coeffs=(0.0,))
    m = ShearModel(name="degenerate", f1=sine_profile(), f2=null)
    res = check_hypothesis("lifted", m, n_points=50, seed=9)
    assert not res.passed
    assert "not established" in res.note
    assert res.n_tried == 50
