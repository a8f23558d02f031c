"""Lie bracket calculus for the shear vector-field families.

Four families over their phase spaces:

    base       (q, p)           X1 = (f1(p), 0),  X2 = (0, f2(q))
    lifted     (q, p, u, v)     tangent dynamics appended
    projective (q, p, u1, u2)   |u| = 1; fiber component projected onto u-perp
    two_point  (q, p, q1, p1)   two base points sharing durations

Bracket words are nested pairs of the generator indices 1 and 2, e.g.
(1, (1, 2)) is [X1, [X1, X2]].  Two evaluation routes back every bracket:
an exact one built on forward-mode dual numbers (derivatives of the
profiles are closed-form, so this route has no truncation error), and a
Richardson-extrapolated central finite difference.  The public bracket()
returns the finite-difference value after checking it against the exact
route; disagreement beyond 1e-5 raises NumericsError.  Rank and golden
determinant certificates use the exact route.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericsError
from .profiles import ShearModel

FAMILIES = ("base", "lifted", "projective", "two_point")
_DIM = {"base": 2, "lifted": 4, "projective": 4, "two_point": 4}
_TARGET_RANK = {"base": 2, "lifted": 4, "projective": 3, "two_point": 4}
_SV_RTOL = 1e-8
_MAX_BRACKET_DEPTH = 3


class Dual:
    """Forward-mode dual number a + eps*b; nests for higher derivatives."""
    __slots__ = ("a", "b")

    def __init__(self, a, b):
        self.a = a
        self.b = b

    def __add__(self, o):
        if isinstance(o, Dual):
            return Dual(self.a + o.a, self.b + o.b)
        return Dual(self.a + o, self.b)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.a, -self.b)

    def __sub__(self, o):
        return self + (-o)

    def __rsub__(self, o):
        return (-self) + o

    def __mul__(self, o):
        if isinstance(o, Dual):
            return Dual(self.a * o.a, self.a * o.b + self.b * o.a)
        return Dual(self.a * o, self.b * o)

    __rmul__ = __mul__


def scalar_value(x):
    while isinstance(x, Dual):
        x = x.a
    return float(x)


def profile_eval(profile, z, order: int = 0):
    """Profile derivative evaluation closed under dual numbers."""
    if isinstance(z, Dual):
        return Dual(profile_eval(profile, z.a, order),
                    z.b * profile_eval(profile, z.a, order + 1))
    return float(profile.eval(z, order))


def field_fn(family: str, index: int, model: ShearModel):
    """The generator field as a callable on points (lists of scalars)."""
    f1, f2 = model.f1, model.f2
    if index not in (1, 2):
        raise ConfigError("generator index must be 1 or 2")
    if family == "base":
        if index == 1:
            return lambda x: [profile_eval(f1, x[1]), 0.0]
        return lambda x: [0.0, profile_eval(f2, x[0])]
    if family == "lifted":
        if index == 1:
            return lambda x: [profile_eval(f1, x[1]), 0.0,
                              profile_eval(f1, x[1], 1) * x[3], 0.0]
        return lambda x: [0.0, profile_eval(f2, x[0]), 0.0,
                          profile_eval(f2, x[0], 1) * x[2]]
    if family == "projective":
        if index == 1:
            def x1(x):
                g = profile_eval(f1, x[1], 1) * x[3]
                c = g * x[2]
                return [profile_eval(f1, x[1]), 0.0, g - c * x[2], -c * x[3]]
            return x1

        def x2(x):
            g = profile_eval(f2, x[0], 1) * x[2]
            c = g * x[3]
            return [0.0, profile_eval(f2, x[0]), -c * x[2], g - c * x[3]]
        return x2
    if family == "two_point":
        if index == 1:
            return lambda x: [profile_eval(f1, x[1]), 0.0,
                              profile_eval(f1, x[3]), 0.0]
        return lambda x: [0.0, profile_eval(f2, x[0]), 0.0,
                          profile_eval(f2, x[2])]
    raise ConfigError("unknown family %r" % family)


def bracket_depth(word) -> int:
    if isinstance(word, int):
        return 0
    a, b = word
    return 1 + max(bracket_depth(a), bracket_depth(b))


def word_label(word) -> str:
    if isinstance(word, int):
        return "X%d" % word
    a, b = word
    return "[%s,%s]" % (word_label(a), word_label(b))


def _dir_deriv(fn, point, vec):
    lifted = [Dual(point[i], vec[i]) for i in range(len(point))]
    out = fn(lifted)
    return [w.b if isinstance(w, Dual) else 0.0 for w in out]


def word_fn(family: str, word, model: ShearModel):
    """Exact evaluator for a bracket word, built recursively on duals."""
    if bracket_depth(word) > _MAX_BRACKET_DEPTH:
        raise ConfigError("bracket depth exceeds %d" % _MAX_BRACKET_DEPTH)
    if isinstance(word, int):
        return field_fn(family, word, model)
    wa, wb = word
    fa = word_fn(family, wa, model)
    fb = word_fn(family, wb, model)

    def br(point):
        a_val = fa(point)
        b_val = fb(point)
        d_b = _dir_deriv(fb, point, a_val)
        d_a = _dir_deriv(fa, point, b_val)
        return [d_b[i] - d_a[i] for i in range(len(point))]
    return br


def eval_word(family: str, word, point, model: ShearModel) -> np.ndarray:
    fn = word_fn(family, word, model)
    return np.array([scalar_value(c) for c in fn([float(v) for v in point])])


def eval_field(family: str, index: int, point, model: ShearModel) -> np.ndarray:
    return eval_word(family, index, point, model)


def _fd_bracket(fa, fb, point, h):
    # central difference of the directional derivatives at one step size
    point = [float(v) for v in point]

    def dd(fn, v):
        plus = [point[i] + h * v[i] for i in range(len(point))]
        minus = [point[i] - h * v[i] for i in range(len(point))]
        wp = [scalar_value(c) for c in fn(plus)]
        wm = [scalar_value(c) for c in fn(minus)]
        return [(a - b) / (2.0 * h) for a, b in zip(wp, wm)]

    a_val = [scalar_value(c) for c in fa(point)]
    b_val = [scalar_value(c) for c in fb(point)]
    d_b = dd(fb, a_val)
    d_a = dd(fa, b_val)
    return np.array([d_b[i] - d_a[i] for i in range(len(point))])


@dataclass(frozen=True)
class BracketResult:
    value: np.ndarray       # Richardson-extrapolated finite difference
    exact: np.ndarray       # dual-number route
    disagreement: float


def bracket(family: str, word_a, word_b, point, model: ShearModel,
            step: float = 1e-4) -> BracketResult:
    """[A, B] at point, A and B given as words; see module docstring for
    the two routes and the 1e-5 integrity threshold."""
    fa = word_fn(family, word_a, model)
    fb = word_fn(family, word_b, model)
    coarse = _fd_bracket(fa, fb, point, step)
    fine = _fd_bracket(fa, fb, point, step / 2.0)
    fd = (4.0 * fine - coarse) / 3.0
    exact = eval_word(family, (word_a, word_b), point, model)
    scale = max(1.0, float(np.max(np.abs(exact))))
    dis = float(np.max(np.abs(fd - exact))) / scale
    if dis > 1e-5:
        raise NumericsError(
            "bracket routes disagree by %.3g at %s; finite differences are "
            "not trustworthy here" % (dis, np.array2string(np.asarray(point))))
    return BracketResult(value=fd, exact=exact, disagreement=dis)


DEFAULT_WORDS = {
    "base": (1, 2, (1, 2)),
    "lifted": (1, 2, (1, 2), (1, (1, 2)), (2, (1, 2))),
    "projective": (1, 2, (1, 2), (1, (1, 2)), (2, (1, 2))),
    "two_point": (1, 2, (1, 2), (1, (1, 2)), (2, (1, 2))),
}


@dataclass(frozen=True)
class RankCertificate:
    family: str
    point: tuple
    words: tuple
    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    target_rank: int
    passed: bool
    det: object  # float when the effective matrix is square, else None


def rank_certificate(family: str, point, words, model: ShearModel) -> RankCertificate:
    """Column-by-column field matrix with its SVD rank and determinant.

    For the projective family the columns are projected onto the
    orthogonal complement of the fiber direction (0, 0, u1, u2) and the
    determinant is taken in the basis (e_q, e_p, (0, 0, u2, -u1)), so
    rank 3 is full and the sign convention at u = (0, 1) keeps the
    3x3 determinant of the (q, p, u1) rows.
    """
    point = tuple(float(v) for v in point)
    if family not in FAMILIES:
        raise ConfigError("unknown family %r" % family)
    if len(point) != _DIM[family]:
        raise ConfigError("point has dimension %d, expected %d"
                          % (len(point), _DIM[family]))
    cols = [eval_word(family, w, point, model) for w in words]
    mat = np.column_stack(cols)

    det = None
    if family == "projective":
        u1, u2 = point[2], point[3]
        n = np.array([0.0, 0.0, u1, u2])
        n = n / np.linalg.norm(n)
        proj = mat - np.outer(n, n @ mat)
        basis = np.column_stack([np.array([1.0, 0.0, 0.0, 0.0]),
                                 np.array([0.0, 1.0, 0.0, 0.0]),
                                 np.array([0.0, 0.0, u2, -u1])])
        reduced = basis.T @ proj
        sv = np.linalg.svd(reduced, compute_uv=False)
        if reduced.shape[0] == reduced.shape[1]:
            det = float(np.linalg.det(reduced))
    else:
        sv = np.linalg.svd(mat, compute_uv=False)
        if mat.shape[0] == mat.shape[1]:
            det = float(np.linalg.det(mat))

    smax = float(sv[0]) if len(sv) else 0.0
    rank = int(np.sum(sv > _SV_RTOL * max(smax, 1.0)))
    target = _TARGET_RANK[family]
    return RankCertificate(family=family, point=point, words=tuple(words),
                           matrix=mat, singular_values=sv, rank=rank,
                           target_rank=target, passed=rank >= target, det=det)


def projective_det3(model: ShearModel, q: float, p: float) -> float:
    """3x3 determinant of (X1, X2, [X1, X2]) rows (q, p, u1) at direction
    u = (0, 1); closed form f2(q)^2 ([f1'(p)]^2 - f1(p) f1''(p))."""
    cert = rank_certificate("projective", (q, p, 0.0, 1.0),
                            (1, 2, (1, 2)), model)
    return float(cert.det)


@dataclass(frozen=True)
class HypothesisResult:
    family: str
    passed: bool
    witness: tuple
    certificate: RankCertificate
    n_tried: int
    note: str


def check_hypothesis(family: str, model: ShearModel, n_points: int = 10000,
                     seed: int = 20240901, words=None) -> HypothesisResult:
    """Search sampled points for one with a full-rank certificate.

    Full rank at a single point certifies the hypothesis (the determinant
    is real analytic, so one nonzero value gives almost-every-point rank).
    Exhausting the sample budget reports 'not established', not a refutation.
    """
    if words is None:
        words = DEFAULT_WORDS[family]
    rng = np.random.default_rng(seed)
    dim = _DIM[family]
    for k in range(n_points):
        draw = rng.uniform(0.0, 2.0 * math.pi, dim)
        point = list(draw[:2])
        if family in ("lifted", "projective"):
            th = draw[2]
            point += [math.cos(th), math.sin(th)]
        elif family == "two_point":
            point += list(draw[2:4])
        cert = rank_certificate(family, point[:dim] if family != "base" else point[:2],
                                words, model)
        if cert.passed:
            return HypothesisResult(family=family, passed=True,
                                    witness=cert.point, certificate=cert,
                                    n_tried=k + 1, note="")
    return HypothesisResult(family=family, passed=False, witness=None,
                            certificate=None, n_tried=n_points,
                            note="not established at %d sampled points" % n_points)
