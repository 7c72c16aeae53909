import math

import numpy as np
import pytest

from kmrtori.errors import DomainError, PoleError
from kmrtori.riemann_surface import SurfaceParams, TorusPoint, branch_points, w_at
from kmrtori.weierstrass import (END_NAMES, conformality_residual, ends, gauss_coeffs,
                                 gauss_value, phi_coeffs, phi_eval, residue_at_end,
                                 residue_numeric)

rng = np.random.default_rng(7)
TRIPLES = [(0.7, 0.3, 0.4), (0.5, -0.6, 1.2), (1.2, 0.9, 2.4), (math.pi / 4, 0.0, 0.0),
           (0.9, 0.0, 1.3), (0.6, 1.1, 0.0), (1.0, math.pi / 2, 0.0)]


def test_gauss_coeffs_examples():
    gm = gauss_coeffs(0.0, 0.0)
    assert gm.sigma == pytest.approx(1 + 1j) and gm.delta == 0
    z = np.array([0.3 + 0.2j, -1.5j, 2.0])
    assert np.allclose(gm("z", z), z)
    gm = gauss_coeffs(math.pi / 2, 0.0)
    assert gm.sigma == pytest.approx((1 + 1j) / math.sqrt(2))
    assert gm.delta == pytest.approx((1 + 1j) / math.sqrt(2))
    assert np.allclose(gm("z", z), (z + 1) / (1 - z))
    for a, b in rng.uniform(-3, 3, size=(20, 2)):
        g = gauss_coeffs(a, b)
        assert abs(g.sigma) ** 2 + abs(g.delta) ** 2 == pytest.approx(2.0, rel=1e-14)


def test_gauss_values():
    P = SurfaceParams(0.7, 0.0, 0.0)
    gm = gauss_coeffs(0.0, 0.0)
    assert gauss_value(TorusPoint(0j, 1 + 0j), gm) == 0
    assert gauss_value(TorusPoint(complex(np.inf), 1 + 0j, True), gm) == complex(np.inf)
    gm = gauss_coeffs(math.pi / 2, 0.0)
    assert abs(gauss_value(w_at(-1.0, 1.0, P), gm)) < 1e-15


def test_ends_base_configuration():
    P = SurfaceParams(0.7, 0.0, 0.0)
    es = ends(P)
    assert es.A.at_infinity and es.A.w == pytest.approx(1.0)
    assert es.Adoubleprime.at_infinity and es.Adoubleprime.w == pytest.approx(-1.0)
    assert {complex(es.Aprime.w), complex(es.Atripleprime.w)} == {1 + 0j, -1 + 0j}
    assert es.Aprime.z == 0 and es.Atripleprime.z == 0


def test_ends_half_line():
    P = SurfaceParams(0.7, math.pi / 2, 0.0)
    es = ends(P)
    for n in END_NAMES:
        kind = es.kinds[n]
        assert es[n].z == pytest.approx(1.0 if kind == "pole" else -1.0)


def test_ends_antipodal_and_on_curve():
    for a, b in rng.uniform([-1.4, 0.05], [1.4, 3.0], size=(10, 2)):
        gm = gauss_coeffs(a, b)
        z0 = gm.zero_z
        zp = 1 / gm.pole_u
        assert -1 / np.conj(z0) == pytest.approx(zp)
        assert zp == pytest.approx(np.conj(gm.sigma) / np.conj(gm.delta))
        P = SurfaceParams(0.8, a, b)
        for n, p in ends(P, gm).items():
            assert p.residual(P.lam) < 1e-10 * (1 + abs(p.w) ** 2)


def test_ends_excluded():
    with pytest.raises(DomainError):
        ends(SurfaceParams.unchecked(0.7, 0.0, 0.7))


def test_conformality_identity():
    for tr in TRIPLES:
        P = SurfaceParams(*tr)
        gm = gauss_coeffs(P.alpha, P.beta)
        z = rng.normal(size=200) + 1j * rng.normal(size=200)
        w = np.array([w_at(zk, 1.0, P).w for zk in z])
        v = phi_coeffs("z", z, w, gm, P.mu)
        assert np.max(conformality_residual(v)) < 1e-12


def test_phi_eval_refuses_ends_and_branch_points():
    P = SurfaceParams(0.7, 0.3, 0.4)
    es = ends(P)
    for n in END_NAMES:
        with pytest.raises(PoleError):
            phi_eval(es[n], P)
    with pytest.raises(PoleError):
        phi_eval(TorusPoint(branch_points(P)[0], 0j), P)


def test_third_component_normalized():
    from kmrtori.special_functions import ParamPath, integrate_path
    from kmrtori.riemann_surface import sheet_function
    for th in (0.3, 1.1):
        P = SurfaceParams(th, 0.4, 0.9)
        gm = gauss_coeffs(P.alpha, P.beta)
        f = lambda z, t: phi_coeffs("z", z, sheet_function(z, P.lam), gm, P.mu)[2]
        v = integrate_path(f, ParamPath.circle(0j, 1.0)).value
        assert abs(v - 2j * math.pi) < 1e-9


def test_s2_equivariance_at_base():
    # alpha = beta = 0: S2 (z, w) -> (conj z, conj w) gives Phi(conj z) = conj(Phi(z)) componentwise
    # up to the sign of the second coordinate (reflection in the x1 x3 plane)
    P = SurfaceParams(0.9, 0.0, 0.0)
    gm = gauss_coeffs(0.0, 0.0)
    for z in (0.3 + 0.4j, -1.2 + 0.1j, 2.0 - 0.7j):
        p = w_at(z, 1.0, P)
        q = TorusPoint(np.conj(p.z), np.conj(p.w))
        a, b = phi_eval(p, P, gm), phi_eval(q, P, gm)
        assert np.allclose(np.conj(a), b * np.array([1, -1, 1]), atol=1e-13)
    x = np.linspace(0.1, 3, 10)
    v = phi_coeffs("z", x, np.array([w_at(t, 1.0, P).w for t in x]), gm, P.mu)
    assert np.max(np.abs(v[0].imag)) < 1e-14 and np.max(np.abs(v[2].imag)) < 1e-14


def test_residues_analytic_vs_numeric():
    for tr in TRIPLES:
        P = SurfaceParams(*tr)
        gm = gauss_coeffs(P.alpha, P.beta)
        es = ends(P, gm)
        total_g, total_1g = 0, 0
        for n in END_NAMES:
            ra = residue_at_end(es[n], P, "Phi", gm)
            rn = residue_numeric(es[n], P, "Phi", gm=gm)
            assert np.max(np.abs(ra - rn)) < 1e-10 * (1 + np.max(np.abs(ra)))
            assert abs(residue_numeric(es[n], P, "dh", gm=gm)) < 1e-10
            total_g += residue_at_end(es[n], P, "g dh", gm)
            total_1g += residue_at_end(es[n], P, "dh/g", gm)
        assert abs(total_g) < 1e-12 and abs(total_1g) < 1e-12


def test_residue_magnitude_at_base():
    for th in (0.3, 0.8, 1.3):
        P = SurfaceParams(th, 0.0, 0.0)
        r = residue_at_end(ends(P).A, P, "g dh")
        assert abs(r) == pytest.approx(P.mu, rel=1e-14)


def test_residue_relations():
    for tr in TRIPLES[:3]:
        P = SurfaceParams(*tr)
        es = ends(P)
        R = {n: residue_at_end(es[n], P, "Phi") for n in END_NAMES}
        assert np.allclose(R["A"], -np.conj(R["Aprime"]), atol=1e-12)
        assert np.allclose(R["A"], -R["Adoubleprime"], atol=1e-12)
        assert np.allclose(R["A"], np.conj(R["Atripleprime"]), atol=1e-12)


def test_branch_values_on_great_circle():
    # g maps the four branch points onto one great circle: after undoing the
    # Moebius rotation they land on the imaginary axis
    for a, b in [(0.3, 0.4), (-0.6, 1.2), (1.1, 2.7)]:
        P = SurfaceParams(0.8, a, b)
        gm = gauss_coeffs(a, b)
        s, d = gm.sigma, gm.delta
        for bp in branch_points(P):
            g = complex(gm("z", bp))
            # inverse of g = (s z + d)/(i (conj s - conj d z))
            z = (1j * np.conj(s) * g - d) / (s + 1j * np.conj(d) * g)
            assert abs(z.real) < 1e-12 * (1 + abs(z))


def test_degree_two_and_unbranched_ends():
    P = SurfaceParams(0.8, 0.3, 0.4)
    gm = gauss_coeffs(0.3, 0.4)
    s, d = gm.sigma, gm.delta
    for c in (0.5 + 0.2j, -3.0j, 10.0):
        z = (1j * np.conj(s) * c - d) / (s + 1j * np.conj(d) * c)
        pts = [w_at(z, 1.0, P), w_at(z, -1.0, P)]
        assert pts[0].w == pytest.approx(-pts[1].w)
        for p in pts:
            assert abs(gauss_value(p, gm) - c) < 1e-12 * (1 + abs(c))
    # dg/dz at the zero: sigma / (i (conj s - conj d z0)) != 0
    z0 = gm.zero_z
    assert abs(s / (1j * (np.conj(s) - np.conj(d) * z0))) > 1e-3
