import math

import numpy as np
import pytest

from kmrtori.errors import ContinuationError, DomainError
from kmrtori.riemann_surface import (SurfaceParams, Symmetry, TorusPoint, all_symmetries,
                                     apply_symmetry, branch_points, continue_along, curve_poly,
                                     deck, in_domain, points_close, sheet_function, slit_function,
                                     w_at)

P = SurfaceParams(math.pi / 4, 0.0, 0.0)
LAM = P.lam
rng = np.random.default_rng(12345)


def random_points(n=20):
    z = rng.normal(size=n) + 1j * rng.normal(size=n)
    return [w_at(zk, 1.0 if k % 2 else -1.0, P) for k, zk in enumerate(z)]


def test_domain_membership():
    assert in_domain(0.7, 0.3, 0.4) is None
    assert in_domain(0.7, math.pi / 2, 0.0) is None
    for bad in [(0.0, 0, 0), (math.pi / 2, 0, 0), (0.7, math.pi / 2, 0.3), (0.7, -2.0, 0.1),
                (0.7, 0.1, math.pi), (0.7, 0.0, 0.7), (0.7, 0.0, math.pi - 0.7)]:
        assert in_domain(*bad) is not None, bad
    with pytest.raises(DomainError):
        SurfaceParams(0.7, 0.0, 0.7)
    with pytest.raises(DomainError):
        SurfaceParams(float("nan"), 0.0, 0.0)


def test_branch_points_quarter_pi():
    s2 = math.sqrt(2)
    expected = {1j * (1 + s2), -1j * (1 + s2), 1j * (s2 - 1), -1j * (s2 - 1)}
    got = branch_points(P)
    for e in expected:
        assert min(abs(e - g) for g in got) < 1e-14
    for b in got:
        assert abs(curve_poly(b, LAM)) < 1e-13


def test_w_at_examples():
    p0 = w_at(0, 1.0, P)
    assert p0.w == pytest.approx(1.0) and deck(p0).w == pytest.approx(-1.0)
    assert w_at(1j * LAM, 1.0, P).w == 0
    p1 = w_at(1.0, 1.0, P)
    assert p1.w.real > 0 and abs(p1.w.imag) < 1e-15
    assert p1.w ** 2 == pytest.approx((1 + LAM ** 2) * (1 + LAM ** -2))
    for q in random_points():
        assert q.residual(LAM) < 1e-12 * (1 + abs(q.w) ** 2)


def test_sheet_function_branches():
    x = np.linspace(0.1, 5, 50)
    assert np.all(sheet_function(x, LAM).real > 0)
    z = rng.normal(size=500) + 1j * rng.normal(size=500)
    for f in (sheet_function, slit_function):
        w = f(z, LAM)
        assert np.max(np.abs(w * w - curve_poly(z, LAM)) / (1 + np.abs(w) ** 2)) < 1e-12


def test_monodromy():
    # one branch point: sign flip; two branch points: trivial
    t = np.linspace(0, 2 * math.pi, 2001)
    b = 1j * LAM
    one = b + 0.3 * np.exp(1j * t)
    start = w_at(one[0], 1.0, P)
    assert continue_along(one, start, P)[-1].w == pytest.approx(-start.w, abs=1e-12)
    two = 1j * (LAM + 1 / LAM) / 2 + (LAM - 1 / LAM) * 0.75 * np.exp(1j * t)
    start = w_at(two[0], 1.0, P)
    assert continue_along(two, start, P)[-1].w == pytest.approx(start.w, abs=1e-12)
    circle = np.exp(1j * t)
    start = w_at(1.0, 1.0, P)
    assert continue_along(circle, start, P)[-1].w == pytest.approx(start.w, abs=1e-12)


def test_continuation_refinement_stable():
    t = np.linspace(0, 1, 400)
    path = 0.2 + 0.1j + (3.0 - 2.5j - 0.2 - 0.1j) * t
    start = w_at(path[0], 1.0, P)
    coarse = continue_along(path, start, P)[-1].w
    fine = continue_along(np.interp(np.linspace(0, 1, 4000), t, path.real)
                          + 1j * np.interp(np.linspace(0, 1, 4000), t, path.imag), start, P)[-1].w
    assert coarse == pytest.approx(fine)


def test_continuation_refuses_branch_points():
    path = np.linspace(0.0, 1j * LAM, 50)
    with pytest.raises(ContinuationError):
        continue_along(path, w_at(0, 1.0, P), P)


def test_deck():
    p = TorusPoint(0j, 1 + 0j)
    assert deck(p) == TorusPoint(0j, -1 + 0j)
    b = TorusPoint(1j * LAM, 0j)
    assert deck(b) == b
    for q in random_points(5):
        assert deck(deck(q)) == q


def test_group_table():
    syms = all_symmetries()
    assert len(set(syms)) == 16
    pts = random_points(8)
    for s in syms:
        for q in pts:
            assert points_close(apply_symmetry(s, apply_symmetry(s, q)), q, 1e-12)
            assert apply_symmetry(s, q).residual(LAM) < 1e-10 * (1 + abs(q.w) ** 2)
    # abelian: evaluation of products agrees with composition in either order
    for s in syms:
        for t in syms:
            for q in pts[:3]:
                a = apply_symmetry(s, apply_symmetry(t, q))
                b = apply_symmetry(s * t, q)
                c = apply_symmetry(t, apply_symmetry(s, q))
                assert points_close(a, b, 1e-12) and points_close(a, c, 1e-12)


def test_named_elements():
    q = random_points(1)[0]
    sd = apply_symmetry(Symmetry.parse("S1*RD"), q)
    assert points_close(sd, deck(q), 1e-13)
    assert points_close(apply_symmetry("Deck", q), deck(q), 1e-13)
    # CalE: (z, w) -> (-1/conj z, -conj w / conj z^2)
    e = apply_symmetry("CalE", q)
    z, w = q.z, q.w
    assert points_close(e, TorusPoint(-1 / np.conj(z), -np.conj(w) / np.conj(z) ** 2), 1e-12)


def test_fixed_sets():
    # S3 fixes |z| = 1 with w = conj(w)/conj(z)^2 (the horizontal geodesics)
    for phi in np.linspace(0.1, 6.0, 7):
        z = np.exp(1j * phi)
        w = complex(sheet_function(z, LAM))
        if abs(w - np.conj(w) / np.conj(z) ** 2) > 1e-9:
            w = -w
        p = TorusPoint(z, w)
        if abs(w - np.conj(w) / np.conj(z) ** 2) < 1e-9:
            assert points_close(apply_symmetry("S3", p), p, 1e-12)
    # on the imaginary axis: R_D fixes the arcs where w is real (|t| < 1/lam),
    # S1 those where w is imaginary (1/lam < |t| < lam)
    p = w_at(0.2j, 1.0, P)
    assert abs(p.w.imag) < 1e-15
    assert points_close(apply_symmetry("RD", p), p, 1e-13)
    assert not points_close(apply_symmetry("S1", p), p, 1e-6)
    q = w_at(0.5j, 1j, P)
    assert abs(q.w.real) < 1e-15
    assert points_close(apply_symmetry("S1", q), q, 1e-13)
    assert not points_close(apply_symmetry("RD", q), q, 1e-6)
    # CalE has no fixed points
    for q in random_points(50):
        assert not points_close(apply_symmetry("CalE", q), q, 1e-6)
