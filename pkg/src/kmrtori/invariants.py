"""Homology cycles, periods and fluxes, closing conditions, symmetries, limits.

Cycle representatives
---------------------
* gamma_X (X an end): a small positive loop around X in its local chart.
* gamma_1: the collapsed loop around the branch points -i lambda, -i/lambda,
  i.e. twice the integral along a curve joining them on the sheet -w_I,
  oriented so that the third period is f1(theta) < 0.
* gamma_2: the circle |z| = r on the sheet w_I (1/lambda < r < lambda) plus
  the end loops picked up while the ends crossed that circle along the
  canonical parameter path from (alpha, beta) = (0, 0).  At the base point it
  is the circle |z| = 1.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ClosingError, DomainError, NumericalError
from .riemann_surface import (SurfaceParams, Symmetry, TorusPoint, all_symmetries, apply_symmetry,
                              continue_along, points_close, sheet_function)
from .special_functions import ParamPath, QuadratureSettings, integrate_complex
from .weierstrass import (END_NAMES, GaussMap, ends, gauss_coeffs, phi_coeffs, residue_at_end,
                          small_loop)

HALF_PI = 0.5 * math.pi
PATH_SETTINGS = QuadratureSettings(abs_tol=1e-12, rel_tol=1e-12, max_subdivisions=4000)
CYCLE_NAMES = ("gammaA", "gammaAprime", "gammaAdoubleprime", "gammaAtripleprime", "gamma1", "gamma2")
_END_OF = dict(zip(CYCLE_NAMES[:4], END_NAMES))
DETOUR_ETA = 0.1


# ---------------------------------------------------------------------------
# canonical parameter path and the E factor
# ---------------------------------------------------------------------------

def canonical_path(theta, alpha, beta, n=400):
    """Samples (alpha_t, beta_t) from (0, 0) to (alpha, beta) inside I.

    Straight when |alpha| >= DETOUR_ETA.  Otherwise the path runs through
    (s DETOUR_ETA, beta), s = sign(alpha) (+1 for alpha = 0), and then
    horizontally to the endpoint.  This is homotopic to the straight path
    in the half-plane of sign s, but keeps clear of the excluded points
    (0, theta), (0, pi - theta); on alpha = 0 the endpoint is reached as
    the limit alpha -> 0+.
    """
    t = np.linspace(0.0, 1.0, n)
    if abs(alpha) >= DETOUR_ETA:
        return np.stack([alpha * t, beta * t], axis=1)
    eta = DETOUR_ETA if alpha >= 0 else -DETOUR_ETA
    leg1 = np.stack([eta * t, beta * t], axis=1)
    leg2 = np.stack([eta + (alpha - eta) * t[1:], np.full(n - 1, beta)], axis=1)
    return np.vstack([leg1, leg2])


def _radicand(theta, a, b):
    return (math.sin(theta) ** 2 * np.cos(a) ** 2
            + (np.sin(a) * np.cos(b) - 1j * np.sin(b)) ** 2)


def E_factor(theta: float, alpha: float, beta: float) -> complex:
    """E = 1/sqrt(sin^2 th cos^2 a + (sin a cos b - i sin b)^2), continued from E(th,0,0) = csc th."""
    if not (0 < theta < HALF_PI):
        raise DomainError("theta must lie in (0, pi/2)")
    n = 256
    for _ in range(8):
        ab = canonical_path(theta, alpha, beta, n)
        R = _radicand(theta, ab[:, 0], ab[:, 1])
        if np.any(np.abs(R) < 1e-14):
            raise DomainError("E radicand vanishes (excluded parameters)")
        roots = np.sqrt(R.astype(complex))
        ok = True
        prev = complex(roots[0])
        if prev.real < 0:
            prev = -prev
        for r in roots[1:]:
            r = complex(r)
            if abs(r - prev) > abs(r + prev):
                r = -r
            if abs(r - prev) > 0.25 * abs(r):
                ok = False
                break
            prev = r
        if ok:
            return 1.0 / prev
        n *= 4
    raise NumericalError("E continuation did not resolve the path")


def rotation_for(params: SurfaceParams):
    """Unimodular factor e^{i phi} with g -> e^{i phi} g making P_A = (0, pi a, 0), a > 0."""
    E = E_factor(*params.triple())
    return np.conj(E) / abs(E), params.mu * math.sin(params.theta) * abs(E), E


# ---------------------------------------------------------------------------
# cycles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Leg:
    """Weighted path in a chart with a single-valued sheet function along it."""

    chart: str
    path: ParamPath
    sheet: object
    weight: float = 1.0
    w_of_t: object = None  # optional sheet value computed from the parameter directly


@dataclass(frozen=True)
class Cycle:
    name: str
    legs: tuple
    corrections: dict = field(default_factory=dict)  # end name -> multiplicity of gamma_end
    start_sheet: complex = 1.0 + 0j
    orientation: int = 1

    @property
    def z_path(self):
        """Sampled z-values of the representative (chart coordinates mapped back to z)."""
        out = []
        for leg in self.legs:
            xs = leg.path.sample(200)
            zs = xs if leg.chart == "z" else 1.0 / xs
            out.append(zs)
            if leg.weight == 2.0:
                out.append(zs[::-1])
        return np.concatenate(out)

    def verify_lift(self, params: SurfaceParams, n=2000, margin=0.02):
        """Max deviation between the sheet function and analytic continuation on each leg."""
        worst = 0.0
        for leg in self.legs:
            t0, t1 = leg.path.t0, leg.path.t1
            span = t1 - t0
            t = np.linspace(t0 + margin * span * (leg.weight == 2.0),
                            t1 - margin * span * (leg.weight == 2.0), n)
            xs = np.array([leg.path.z(tk) for tk in t])
            ys = leg.sheet(xs)
            start = TorusPoint(complex(xs[0]), complex(ys[0]))
            lifted = continue_along(xs, start, params, check_steps=False)
            wl = np.array([p.w for p in lifted])
            worst = max(worst, float(np.max(np.abs(wl - ys) / (1 + np.abs(ys)))))
        return worst


def _end_moduli_log(gm: GaussMap):
    """log|z| of the zeros (the poles sit at minus this value)."""
    z0 = abs(complex(gm.zero_z))
    return -np.inf if z0 == 0 else math.log(z0)


def gamma2_radius(params: SurfaceParams, gm: GaussMap) -> float:
    """Circle radius in (1/lambda, lambda) farthest (in log) from the end moduli."""
    L = math.log(params.lam)
    ell = _end_moduli_log(gm)
    pts = sorted({-L, L} | ({-abs(ell), abs(ell)} if abs(ell) < L else set()))
    best, mid = -1.0, 0.0
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo > best:
            best, mid = hi - lo, 0.5 * (lo + hi)
    return math.exp(mid)


def _end_log_moduli(theta, a, b):
    c = np.cos(a) * np.cos(b)
    with np.errstate(divide="ignore"):
        ell = 0.5 * np.log((1 - c) / (1 + c))
    return ell  # zeros at +ell, poles at -ell


def gamma2_class(params: SurfaceParams, radius: float, n=600):
    """Signed crossings of the labelled ends through the lifted circle |z| = radius.

    Returns {end name: multiplicity}: +1 for every outward crossing of the
    sheet-w_I circle, -1 for every inward crossing.
    """
    th, lam = params.theta, params.lam
    ab = canonical_path(th, params.alpha, params.beta, n)
    logr = math.log(radius)
    ell = _end_log_moduli(th, ab[:, 0], ab[:, 1])
    counts = {k: 0 for k in END_NAMES}
    for kind, f in (("zero", ell - logr), ("pole", -ell - logr)):
        f = np.where(np.isfinite(f), f, np.sign(f) * 1e300)
        idx = np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]
        for k in idx:
            lo, hi = ab[k], ab[k + 1]
            flo = f[k]
            for _ in range(60):  # bisection on the segment
                mid = 0.5 * (lo + hi)
                e = _end_log_moduli(th, mid[0], mid[1])
                fm = (e if kind == "zero" else -e) - logr
                if np.sign(fm) == np.sign(flo):
                    lo, flo = mid, fm
                else:
                    hi = mid
            pc = SurfaceParams.unchecked(th, float(lo[0]), float(lo[1]))
            es = ends(pc)
            direction = 1 if f[k + 1] > f[k] else -1
            names = ("Aprime", "Atripleprime") if kind == "zero" else ("A", "Adoubleprime")
            for nm in names:
                p = es[nm]
                zc = complex(p.z)
                wI = complex(sheet_function(zc, lam))
                if abs(complex(p.w) - wI) < 1e-6 * (1 + abs(wI)):
                    counts[nm] += direction
    return {k: v for k, v in counts.items() if v}


def _gamma1_leg(params: SurfaceParams, gm: GaussMap):
    lam = params.lam
    c, h = 0.5 * (lam + 1 / lam), 0.5 * (lam - 1 / lam)
    cands = [complex(gm.zero_z)]
    if gm.pole_u != 0:
        cands.append(1.0 / complex(gm.pole_u))
    # distance of each end projection to the segment [-i lam, -i/lam]
    best, side = np.inf, 1.0
    for zc in cands:
        t = min(max(-zc.imag, 1 / lam), lam)
        d = abs(zc - (-1j * t))
        if d < best:
            best = d
            side = -1.0 if zc.real > 0 else 1.0
    eps = 0.0 if best > 0.25 * h else 0.5 * h * side

    def z(p):
        return -1j * (c + h * np.sin(p)) + eps * np.cos(p) ** 2

    def dz(p):
        return -1j * h * np.cos(p) - 2 * eps * np.cos(p) * np.sin(p)

    def w(p):
        # z + i/lam and z + i lam vanish quadratically at the ends of the leg;
        # factor them through 1 -+ sin p so they keep relative accuracy there
        q = 0.5 * p + 0.25 * math.pi
        sp, sm = 2.0 * np.sin(q) ** 2, 2.0 * np.cos(q) ** 2   # 1 + sin p, 1 - sin p
        x = z(p)
        rad = ((x - 1j * lam) * (x - 1j / lam) * sp * (-1j * h + eps * sm)
               * sm * (1j * h + eps * sp) / (x * x))
        return -x * np.sqrt(rad)

    return Leg("z", ParamPath(z, dz, -HALF_PI, HALF_PI), lambda x: -sheet_function(x, lam), 2.0, w)


def make_cycle(name: str, params: SurfaceParams, gm: GaussMap | None = None) -> Cycle:
    """Concrete representative of a homology class on Sigma_theta."""
    if name not in CYCLE_NAMES:
        raise DomainError(f"unknown cycle {name!r}; choose from {CYCLE_NAMES}")
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    lam = params.lam
    if name in _END_OF:
        end = ends(params, gm)[_END_OF[name]]
        chart, path, sheet = small_loop(end, params, gm=gm)
        return Cycle(name, (Leg(chart, path, sheet),), start_sheet=complex(end.w))
    if name == "gamma1":
        return Cycle(name, (_gamma1_leg(params, gm),), start_sheet=-1.0 + 0j)
    r = gamma2_radius(params, gm)
    leg = Leg("z", ParamPath.circle(0j, r), lambda x: sheet_function(x, lam))
    return Cycle(name, (leg,), corrections=gamma2_class(params, r))


# ---------------------------------------------------------------------------
# periods and fluxes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PeriodFlux:
    P: np.ndarray
    F: np.ndarray

    @classmethod
    def from_integral(cls, v):
        v = np.asarray(v, dtype=complex)
        return cls(v.real.copy(), v.imag.copy())

    @property
    def integral(self):
        return self.P + 1j * self.F

    def as_dict(self):
        return {"P": [float(x) for x in self.P], "F": [float(x) for x in self.F]}


def cycle_integral(c: Cycle, params: SurfaceParams, gm: GaussMap | None = None, rot=1.0,
                   settings: QuadratureSettings = PATH_SETTINGS):
    """Complex 3-vector  int_c Phi."""
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    mu = params.mu
    total = np.zeros(3, dtype=complex)
    for leg in c.legs:
        def f(t, leg=leg):
            x = leg.path.z(t)
            w = leg.w_of_t(t) if leg.w_of_t is not None else leg.sheet(x)
            return phi_coeffs(leg.chart, x, w, gm, mu, rot) * leg.path.dz(t)
        r = integrate_complex(f, leg.path.t0, leg.path.t1, settings)
        total += leg.weight * np.asarray(r.value)
    if c.corrections:
        es = ends(params, gm)
        for nm, k in c.corrections.items():
            total += k * 2j * math.pi * residue_at_end(es[nm], params, "Phi", gm, rot)
    return c.orientation * total


def period_flux(c: Cycle, params: SurfaceParams, gm: GaussMap | None = None, rot=1.0,
                settings: QuadratureSettings = PATH_SETTINGS) -> PeriodFlux:
    """(P, F) = (Re, Im) of the integral of Phi along the cycle."""
    return PeriodFlux.from_integral(cycle_integral(c, params, gm, rot, settings))


def all_period_fluxes(params: SurfaceParams, rot=1.0):
    gm = gauss_coeffs(params.alpha, params.beta)
    return {n: period_flux(make_cycle(n, params, gm), params, gm, rot) for n in CYCLE_NAMES}


def end_period_flux_closed_form(params: SurfaceParams) -> PeriodFlux:
    """P_A = pi mu sin(theta) (iE, 0) and F_A = pi mu sin(theta) (E, 0) under R^3 = C x R."""
    E = E_factor(*params.triple())
    k = math.pi * params.mu * math.sin(params.theta)
    P = k * 1j * E
    F = k * E
    return PeriodFlux(np.array([P.real, P.imag, 0.0]), np.array([F.real, F.imag, 0.0]))


def period_lattice(params: SurfaceParams):
    """(P_{gamma_A}, P_{gamma_1}) -- generators of the translation lattice."""
    gm = gauss_coeffs(params.alpha, params.beta)
    pa = period_flux(make_cycle("gammaA", params, gm), params, gm).P
    p1 = period_flux(make_cycle("gamma1", params, gm), params, gm).P
    return pa, p1


def vertical_flux_integral(theta: float, alpha: float, beta: float,
                           settings: QuadratureSettings = PATH_SETTINGS) -> complex:
    """Explicit real-variable form of  int_{|z|=1} g dh  (unrotated):

        -2 mu int_{-pi}^{pi} (cos b sin t + i (sin a sin b sin t - cos a cos t))
                 / (|sigma - delta e^{-it}|^2 sqrt(lam^2 + lam^-2 + 2 cos 2t)) dt.
    """
    if not (0 <= alpha < HALF_PI and 0 <= beta < HALF_PI):
        raise DomainError("the explicit formula is stated for alpha, beta in [0, pi/2)")
    p = SurfaceParams.unchecked(theta, alpha, beta)
    gm = gauss_coeffs(alpha, beta)
    s, d, lam = gm.sigma, gm.delta, p.lam
    ca, sa, cb, sb = math.cos(alpha), math.sin(alpha), math.cos(beta), math.sin(beta)

    def f(t):
        num = cb * math.sin(t) + 1j * (sa * sb * math.sin(t) - ca * math.cos(t))
        den = abs(s - d * np.exp(-1j * t)) ** 2 * math.sqrt(lam * lam + lam ** -2 + 2 * math.cos(2 * t))
        return num / den
    r = integrate_complex(f, -math.pi, math.pi, settings)
    return -2.0 * p.mu * complex(r.value)


# ---------------------------------------------------------------------------
# closing conditions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClosingReport:
    L: tuple
    a: float
    b: complex
    residual: float
    a_closed_form: float

    def as_dict(self):
        return {"L": [[float(x.real), float(x.imag)] for x in self.L], "a": float(self.a),
                "b": [float(self.b.real), float(self.b.imag)], "residual": float(self.residual),
                "a_closed_form": float(self.a_closed_form)}


def ligature(params: SurfaceParams, gm: GaussMap | None = None):
    """L(g) = (Res_{p1} dh/g, Res_{q1} g dh, int_{gamma2} dh/g, int_{gamma2} g dh) after rotation.

    p1 = A''' (zero), q1 = A (pole).  Returns (L, a_closed_form, rot, gamma2 integral).
    """
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    rot, a_cf, _ = rotation_for(params)
    es = ends(params, gm)
    r_p1 = residue_at_end(es.Atripleprime, params, "dh/g", gm, rot)
    r_q1 = residue_at_end(es.A, params, "g dh", gm, rot)
    I = cycle_integral(make_cycle("gamma2", params, gm), params, gm)
    dh_over_g = (I[0] - 1j * I[1]) * np.conj(rot)
    g_dh = -(I[0] + 1j * I[1]) * rot
    return (complex(r_p1), complex(r_q1), complex(dh_over_g), complex(g_dh)), a_cf, rot, I


def check_closing(params: SurfaceParams, tol: float = 1e-8, raise_on_failure=False) -> ClosingReport:
    """Deviation of L(g) from the shape (a, -a, conj(b), b) with a > 0."""
    L, a_cf, _, _ = ligature(params)
    a = L[0].real
    b = L[3]
    res = max(abs(L[0].imag), abs(L[1] + a), abs(L[2] - np.conj(L[3])), max(0.0, -a))
    scale = max(1.0, abs(a))
    rep = ClosingReport(L, a, b, res / scale, a_cf)
    if raise_on_failure and rep.residual > tol:
        raise ClosingError(f"closing residual {rep.residual:.3g} exceeds {tol:g}", rep.residual)
    return rep


# ---------------------------------------------------------------------------
# isometry group
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IsometryReport:
    order: int
    generators: tuple
    elements: tuple
    verified: bool

    def as_dict(self):
        return {"order": self.order, "generators": list(self.generators),
                "elements": list(self.elements), "verified": self.verified}


def _preserves_ends(sym: Symmetry, es, tol=1e-10):
    pts = [p for _, p in es.items()]
    for p in pts:
        q = apply_symmetry(sym, p)
        if not any(points_close(q, r, tol) or points_close(r, q, tol) for r in pts):
            return False
    return True


def isometry_group(params: SurfaceParams, tol: float = 1e-10) -> IsometryReport:
    """Case table for Iso(M), each generator checked against the end set."""
    a, b = params.alpha, params.beta
    eq = lambda x, y: abs(x - y) <= 1e-12
    if eq(abs(a), HALF_PI) or (eq(a, 0) and (eq(b, 0) or eq(b, HALF_PI))):
        gens = ("S1", "S2", "S3", "RD")
    elif eq(a, 0):
        gens = ("S1", "RD", "S2*S3")
    elif eq(b, HALF_PI):
        gens = ("S3", "Deck", "S1*S2")
    elif eq(b, 0):
        gens = ("S2", "Deck", "S1*S3")
    else:
        gens = ("Deck", "CalF")
    group = {Symmetry()}
    for g in gens:
        s = Symmetry.parse(g)
        group |= {s * h for h in group}
    es = ends(params)
    verified = all(_preserves_ends(Symmetry.parse(g), es, tol) for g in gens)
    # brute force: nothing outside the claimed group preserves the ends
    others = [s for s in all_symmetries() if s not in group]
    verified = verified and not any(_preserves_ends(s, es, tol) for s in others)
    names = tuple(sorted(s.name for s in group))
    return IsometryReport(len(group), gens, names, verified)


# ---------------------------------------------------------------------------
# limits
# ---------------------------------------------------------------------------

class LimitKind(enum.Enum):
    Catenoid = "catenoid"
    Helicoid = "helicoid"
    SinglyPeriodicScherk = "singly_periodic_scherk"
    DoublyPeriodicScherk = "doubly_periodic_scherk"
    RiemannExample = "riemann_example"
    StandardExample = "standard_example"


@dataclass(frozen=True)
class Limit:
    kind: LimitKind
    angle: float | None = None
    params: tuple | None = None

    def as_dict(self):
        d = {"kind": self.kind.value}
        if self.angle is not None:
            d["angle"] = float(self.angle)
        if self.params is not None:
            d["params"] = [float(x) for x in self.params]
        return d


def limit_classify(theta_inf: float, alpha_inf: float, beta_inf: float, tol: float = 1e-12) -> Limit:
    """Taxonomy of the limits of M_{theta,alpha,beta} at boundary triples."""
    th, a, b = float(theta_inf), float(alpha_inf), float(beta_inf)
    near = lambda x, y: abs(x - y) <= tol
    if not (-tol <= th <= HALF_PI + tol and -HALF_PI - tol <= a <= HALF_PI + tol and -tol <= b <= math.pi + tol):
        raise DomainError(f"({th}, {a}, {b}) is outside the closure of the parameter domain")
    if near(th, 0):
        if near(a, 0) and (near(b, 0) or near(b, math.pi)):
            return Limit(LimitKind.Catenoid)
        ang = math.acos(max(-1.0, min(1.0, math.cos(a) * math.cos(b))))
        return Limit(LimitKind.SinglyPeriodicScherk, ang)
    if near(th, HALF_PI):
        if near(a, 0) and near(b, HALF_PI):
            return Limit(LimitKind.Helicoid)
        ang = math.acos(max(-1.0, min(1.0, math.cos(a) * math.sin(b))))
        return Limit(LimitKind.DoublyPeriodicScherk, ang)
    if near(a, 0) and (near(b, th) or near(b, math.pi - th)):
        return Limit(LimitKind.RiemannExample, params=(th, a, b))
    if near(abs(a), HALF_PI):
        return Limit(LimitKind.StandardExample, params=(th, HALF_PI, 0.0))
    if near(b, math.pi):
        return Limit(LimitKind.StandardExample, params=(th, a, 0.0))
    return Limit(LimitKind.StandardExample, params=(th, a, b))


def scherk_limit_a(alpha0: float, beta0: float) -> float:
    """a of the singly periodic Scherk limit: 2 csc(arccos(cos a0 cos b0))."""
    return 2.0 / math.sin(math.acos(math.cos(alpha0) * math.cos(beta0)))

