import math

import numpy as np
import pytest

from kmrtori.errors import DomainError
from kmrtori.invariants import (CYCLE_NAMES, LimitKind, E_factor, all_period_fluxes,
                                canonical_path, check_closing, end_period_flux_closed_form,
                                isometry_group, limit_classify, make_cycle, period_flux,
                                period_lattice, scherk_limit_a, vertical_flux_integral)
from kmrtori.riemann_surface import SurfaceParams
from kmrtori.special_functions import f1_of_theta, mu_of_theta

TRIPLES = [(0.7, 0.3, 0.4), (0.5, -0.6, 1.2), (1.2, 0.9, 2.4), (0.3, 1.0, 2.5),
           (0.9, 0.0, 1.3), (1.1, -1.3, 0.2), (0.6, math.pi / 2, 0.0)]


@pytest.fixture(scope="module")
def tables():
    return {tr: all_period_fluxes(SurfaceParams(*tr)) for tr in TRIPLES}


def test_base_configuration_periods():
    for th in (0.3, math.pi / 4, 1.3):
        P = SurfaceParams(th, 0.0, 0.0)
        pf = all_period_fluxes(P)
        mu = mu_of_theta(th)
        assert np.allclose(pf["gammaA"].P, [0, math.pi * mu, 0], atol=1e-10)
        assert np.allclose(pf["gammaA"].F, [math.pi * mu, 0, 0], atol=1e-10)
        assert np.allclose(pf["gamma2"].P, 0, atol=1e-10)
        assert np.allclose(pf["gamma2"].F, [0, 0, 2 * math.pi], atol=1e-10)


def test_E_factor():
    for th in (0.2, 0.9, 1.4):
        assert E_factor(th, 0.0, 0.0) == pytest.approx(1 / math.sin(th), rel=1e-15)
        P = SurfaceParams(th, 0.0, 0.0)
        cf = end_period_flux_closed_form(P)
        assert np.allclose(cf.P, [0, math.pi * P.mu, 0], atol=1e-13)
    with pytest.raises(DomainError):
        E_factor(0.7, 0.0, 0.7)


def test_E_continuous_sweep():
    # no branch jumps along fine sweeps inside I (alpha != 0 lines avoid the excluded points)
    for a in (-0.8, -0.05, 0.5, 1.4):
        bs = np.linspace(0.0, 3.1, 621)
        E = np.array([E_factor(0.7, a, b) for b in bs])
        rel = np.abs(np.diff(E)) / np.abs(E[1:])
        assert np.max(rel) < 0.25, a
    # and along alpha at beta = 0, through alpha = 0
    E = np.array([E_factor(0.7, a, 0.0) for a in np.linspace(-1.5, 1.5, 301)])
    assert np.max(np.abs(np.diff(E)) / np.abs(E[1:])) < 0.05


def test_canonical_path_endpoints():
    for a, b in [(0.5, 1.0), (0.0, 2.0), (-0.05, 0.7)]:
        pth = canonical_path(0.7, a, b)
        assert np.allclose(pth[0], 0) and np.allclose(pth[-1], [a, b])


def test_end_closed_form_matches_quadrature_and_oracle(golden, tables):
    for row in golden["end_A_integral"]:
        P = SurfaceParams(*row["triple"])
        want = np.array([complex(*c) for c in row["integral"]])
        got = period_flux(make_cycle("gammaA", P), P).integral
        cf = end_period_flux_closed_form(P).integral
        assert np.max(np.abs(got - want)) < 1e-9 * (1 + np.max(np.abs(want)))
        assert np.max(np.abs(cf - want)) < 1e-9 * (1 + np.max(np.abs(want)))


def test_end_relations(tables):
    for tr, pf in tables.items():
        PA, FA = pf["gammaA"].P, pf["gammaA"].F
        assert np.allclose(pf["gammaAprime"].P, PA, atol=1e-9)
        assert np.allclose(pf["gammaAdoubleprime"].P, -PA, atol=1e-9)
        assert np.allclose(pf["gammaAtripleprime"].P, -PA, atol=1e-9)
        assert np.allclose(pf["gammaAprime"].F, -FA, atol=1e-9)
        assert np.allclose(pf["gammaAdoubleprime"].F, -FA, atol=1e-9)
        assert np.allclose(pf["gammaAtripleprime"].F, FA, atol=1e-9)
        assert abs(PA[2]) < 1e-10


def test_homology_cycles(tables):
    for th in (0.4, 1.0):
        pf = all_period_fluxes(SurfaceParams(th, 0.0, 0.0))
        assert np.allclose(pf["gamma1"].P, [0, 0, f1_of_theta(th)], atol=1e-8)
    for tr, pf in tables.items():
        f1 = f1_of_theta(tr[0])
        if tr[1] == 0 and tr[2] == 0:
            assert np.allclose(pf["gamma1"].P[:2], 0, atol=1e-8)
        assert pf["gamma1"].P[2] == pytest.approx(f1, abs=1e-7) and f1 < 0
        assert np.allclose(pf["gamma1"].F, -pf["gammaA"].F, atol=1e-8)
        assert np.allclose(pf["gamma2"].P, 0, atol=1e-8)
        assert pf["gamma2"].F[2] == pytest.approx(2 * math.pi, abs=1e-8)


def test_lattice_rank(tables):
    for tr in TRIPLES:
        pa, p1 = period_lattice(SurfaceParams(*tr))
        assert np.linalg.norm(np.cross(pa, p1)) > 1e-3


def test_cycle_names():
    assert len(CYCLE_NAMES) == 6
    with pytest.raises(DomainError):
        make_cycle("gamma3", SurfaceParams(0.7, 0.3, 0.4))


def test_gamma2_homotopy_invariance_near_half_pi():
    # moving the circle changes which ends it separates; the crossing corrections compensate
    from kmrtori.invariants import Cycle, Leg, cycle_integral, gamma2_class, gamma2_radius
    from kmrtori.riemann_surface import sheet_function
    from kmrtori.special_functions import ParamPath
    from kmrtori.weierstrass import gauss_coeffs
    P = SurfaceParams(0.8, math.pi / 2 - 1e-3, 0.3)
    gm = gauss_coeffs(P.alpha, P.beta)
    ref = cycle_integral(make_cycle("gamma2", P, gm), P, gm)
    r0 = gamma2_radius(P, gm)
    classes = []
    for r in (0.8 * r0, 1.2, 1.6):  # the ends sit at |z| ~ 0.999 and 1.001
        leg = Leg("z", ParamPath.circle(0j, r), lambda x: sheet_function(x, P.lam))
        k = gamma2_class(P, r, n=2400)
        classes.append(k)
        c = Cycle("gamma2", (leg,), corrections=k)
        assert np.max(np.abs(cycle_integral(c, P, gm) - ref)) < 1e-9
    assert classes[0] != classes[1]


def test_closing_conditions():
    for tr in TRIPLES:
        r = check_closing(SurfaceParams(*tr))
        assert r.residual < 1e-8 and r.a > 0
        assert r.a == pytest.approx(r.a_closed_form, rel=1e-9)
    for th in (0.3, 1.2):
        r = check_closing(SurfaceParams(th, 0.0, 0.0))
        assert r.a == pytest.approx(mu_of_theta(th), abs=1e-8)
        assert abs(r.b) < 1e-8


def test_vertical_flux_integral(golden):
    assert abs(vertical_flux_integral(0.9, 0.0, 0.0)) < 1e-12
    assert abs(vertical_flux_integral(0.3, 0.3, 0.0).imag) > 1e-3
    for row in golden["vertical_flux_integral"]:
        assert abs(vertical_flux_integral(*row["triple"]) - complex(*row["value"])) < 1e-10
    # cross-check against the gamma2 b-component: int_{gamma2} g dh = -(I1 + i I2)
    for tr in [(0.7, 0.3, 0.4), (1.2, 0.5, 1.0)]:
        P = SurfaceParams(*tr)
        from kmrtori.invariants import cycle_integral
        I = cycle_integral(make_cycle("gamma2", P), P)
        assert abs(vertical_flux_integral(*tr) - (-(I[0] + 1j * I[1]))) < 1e-9
    with pytest.raises(DomainError):
        vertical_flux_integral(0.7, -0.3, 0.4)


def test_isometry_group_orders():
    r = isometry_group(SurfaceParams(0.7, 0.0, 0.0))
    assert r.order == 16 and set(r.generators) == {"S1", "S2", "S3", "RD"} and r.verified
    r = isometry_group(SurfaceParams(0.7, 0.0, 0.4))
    assert r.order == 8 and set(r.generators) == {"S1", "RD", "S2*S3"} and r.verified
    r = isometry_group(SurfaceParams(0.7, 0.3, 0.4))
    assert r.order == 4 and r.verified
    assert set(r.elements) == {"Identity", "Deck", "CalE", "CalF"}
    for tr in [(0.7, 0.3, 0.0), (0.7, 0.3, math.pi / 2), (0.7, math.pi / 2, 0.0), (0.7, 0.0, math.pi / 2)]:
        r = isometry_group(SurfaceParams(*tr))
        assert r.verified and r.order in (8, 16)


def test_limit_taxonomy():
    assert limit_classify(0, 0, 0).kind is LimitKind.Catenoid
    lim = limit_classify(0, 0.5, 0.5)
    assert lim.kind is LimitKind.SinglyPeriodicScherk
    assert lim.angle == pytest.approx(math.acos(math.cos(0.5) ** 2))
    assert limit_classify(math.pi / 2, 0, math.pi / 2).kind is LimitKind.Helicoid
    lim = limit_classify(math.pi / 2, 0.3, 0.4)
    assert lim.kind is LimitKind.DoublyPeriodicScherk
    assert lim.angle == pytest.approx(math.acos(math.cos(0.3) * math.sin(0.4)))
    assert limit_classify(0.7, 0, 0.7).kind is LimitKind.RiemannExample
    assert limit_classify(0.7, 0, math.pi - 0.7).kind is LimitKind.RiemannExample
    assert limit_classify(0.7, 0.3, 0.4).kind is LimitKind.StandardExample
    with pytest.raises(DomainError):
        limit_classify(2.0, 0, 0)


def test_scherk_limit_a(golden):
    for row in golden["scherk_limit_a"]:
        assert scherk_limit_a(row["alpha0"], row["beta0"]) == pytest.approx(row["a"], rel=1e-14)
