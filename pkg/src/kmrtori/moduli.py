"""Classifying map C(M) = (a, b), its inverse, the Scherk arc and conjugation.

a = Res_{A'''}(dh/g) > 0 and b = int_{gamma_2} g dh, both after rotating g
so that P_{gamma_A} = (0, pi a, 0).  ``classify`` reports b reduced into
Lambda = {0 <= Re b < 2 pi a}; the continuous (unreduced) value is kept in
``ClassPoint.b_raw`` and is what the Jacobian and the Newton solver use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DomainError, NoConvergenceError, NumericalError
from .invariants import all_period_fluxes, ligature
from .riemann_surface import HALF_PI, SurfaceParams, in_domain
from .special_functions import elliptic_K

TWO_PI = 2.0 * math.pi
THETA_BOX = (1e-3, HALF_PI - 1e-3)
ZERO_SNAP = 1e-9


@dataclass(frozen=True)
class ClassPoint:
    a: float
    b: complex
    b_raw: complex | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.a > 0:
            raise DomainError("a must be positive")

    def in_lambda(self):
        return in_lambda(self.a, self.b)

    def as_vector(self):
        return np.array([self.a, self.b.real, self.b.imag])

    def as_dict(self):
        d = {"a": float(self.a), "b": [float(self.b.real), float(self.b.imag)]}
        if self.b_raw is not None:
            d["b_unreduced"] = [float(self.b_raw.real), float(self.b_raw.imag)]
        return d


def in_lambda(a, b) -> bool:
    return a > 0 and 0.0 <= complex(b).real < TWO_PI * a


def reduce_to_lambda(a: float, b: complex) -> complex:
    """Subtract the integer multiple of 2 pi a bringing Re(b) into [0, 2 pi a).

    Real parts within ZERO_SNAP (relative) of a multiple of 2 pi a are snapped
    onto it so that quadrature noise around Re(b) = 0 does not wrap.
    """
    b = complex(b)
    p = TWO_PI * a
    k = math.floor(b.real / p)
    re = b.real - k * p
    if abs(re - p) <= ZERO_SNAP * max(1.0, abs(b)):
        re = 0.0
    elif abs(re) <= ZERO_SNAP * max(1.0, abs(b)):
        re = 0.0
    return complex(re, b.imag)


def classify_raw(theta, alpha, beta):
    """(a, Re b, Im b) with the continuous b; accepts the extended parameter range."""
    p = SurfaceParams.unchecked(theta, alpha, beta)
    L, _, _, _ = ligature(p)
    return np.array([L[0].real, L[3].real, L[3].imag])


def classify(params: SurfaceParams) -> ClassPoint:
    """C(M_{theta,alpha,beta}) reduced into Lambda."""
    L, _, _, _ = ligature(params)
    a, b = L[0].real, L[3]
    if abs(b.real) <= ZERO_SNAP * max(1.0, abs(b)):
        b = complex(0.0, b.imag)
    if abs(b) <= ZERO_SNAP * max(1.0, a):
        b = 0j
    return ClassPoint(a, reduce_to_lambda(a, b), b)


# ---------------------------------------------------------------------------
# Scherk boundary arc
# ---------------------------------------------------------------------------

def scherk_boundary(rho: float) -> ClassPoint:
    """C(S_rho) = (2 csc rho, 2 pi i tan(rho/2)) for 0 < rho < pi."""
    rho = float(rho)
    if not (0.0 < rho < math.pi):
        raise DomainError("rho must lie in (0, pi)")
    # tan(rho/2) written so that rho = pi/2 gives exactly 1
    t = math.sin(rho) / (1.0 + math.cos(rho)) if rho <= HALF_PI else (1.0 - math.cos(rho)) / math.sin(rho)
    b = complex(0.0, TWO_PI * t)
    a = 2.0 / math.sin(rho)
    return ClassPoint(a, b, b)


def distance_to_scherk_arc(a: float, b: complex) -> float:
    """Euclidean distance in (a, Re b, Im b) to the arc, Re b taken modulo 2 pi a.

    With t = tan(rho/2) the arc is {(t + 1/t, 2 pi i t) : t > 0}.
    """
    b = complex(b)
    re = b.real % (TWO_PI * a)
    re = min(re, TWO_PI * a - re)

    def comps(logt):
        t = math.exp(logt)
        return a - (t + 1 / t), re, b.imag - TWO_PI * t

    def d2(logt):
        return sum(c * c for c in comps(logt))

    def slope(logt):
        # d(d2)/d(log t) / 2; its root locates the foot point to full precision
        t = math.exp(logt)
        c0, _, c2 = comps(logt)
        return -c0 * (t - 1 / t) - c2 * TWO_PI * t
    grid = np.linspace(-12.0, 12.0, 241)
    x0 = min(grid, key=d2)
    cands = [x0]
    for lo, hi in ((x0 - 0.1, x0), (x0, x0 + 0.1)):
        if slope(lo) * slope(hi) < 0:
            cands.append(brentq(slope, lo, hi, xtol=1e-15, rtol=1e-15))
    r = minimize_scalar(d2, bounds=(x0 - 0.1, x0 + 0.1), method="bounded", options={"xatol": 1e-13})
    cands.append(float(r.x))
    return min(math.hypot(*comps(x)) for x in cands)


# ---------------------------------------------------------------------------
# Jacobian and inversion
# ---------------------------------------------------------------------------

def _on_label_cut(theta, alpha, beta, h):
    return abs(alpha) < 2 * h and theta - 2 * h <= beta <= math.pi - theta + 2 * h


def jacobian_C(params: SurfaceParams, h: float = 1e-5) -> np.ndarray:
    """Finite-difference Jacobian of (a, Re b, Im b) in (theta, alpha, beta).

    Central differences; in alpha a one-sided second-order stencil is used on
    the segment alpha = 0, theta <= beta <= pi - theta, where the end labels
    (and hence b) are defined as limits from alpha > 0.
    """
    th, al, be = params.triple()
    if h < 1e-8:
        raise NumericalError("finite-difference step too small relative to quadrature noise")
    if not (2 * h < th < HALF_PI - 2 * h):
        raise DomainError("theta too close to the boundary for the requested step")
    return _fd_jacobian(np.array([th, al, be]), h, classify_raw)


def _fd_jacobian(x, h, f):
    J = np.zeros((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        if j == 1 and _on_label_cut(x[0], x[1], x[2], h):
            f0, f1, f2 = f(*x), f(*(x + e)), f(*(x + 2 * e))
            J[:, j] = (-3 * f0 + 4 * f1 - f2) / (2 * h)
        else:
            J[:, j] = (f(*(x + e)) - f(*(x - e))) / (2 * h)
    return J


def scaled_det(J: np.ndarray) -> float:
    """Determinant after scaling every row to unit norm."""
    n = np.linalg.norm(J, axis=1)
    n[n == 0] = 1.0
    return float(np.linalg.det(J / n[:, None]))


@dataclass(frozen=True)
class InversionResult:
    params: SurfaceParams
    iterations: int
    residual: float

    def as_dict(self):
        return {"theta": self.params.theta, "alpha": self.params.alpha, "beta": self.params.beta,
                "iterations": self.iterations, "residual": self.residual}


BETA_SNAP = 1e-9


def canonical_representative(theta, alpha, beta):
    """Map an extended triple into I using the identifications (beta mod pi, alpha = +-pi/2)."""
    if abs(abs(alpha) - HALF_PI) <= 1e-12:
        return SurfaceParams(theta, HALF_PI, 0.0)
    beta = beta % math.pi
    if math.pi - beta < BETA_SNAP:
        # an iterate at beta = -0 wraps to just below pi; labels there are continued
        # from the other end of [0, pi), so snap to the boundary value 0
        beta = 0.0
    return SurfaceParams(theta, alpha, beta)


def _residual(f, target):
    a_t, re_t, im_t = target
    p = TWO_PI * a_t
    k = round((f[1] - re_t) / p)
    return np.array([f[0] - a_t, f[1] - (re_t + k * p), f[2] - im_t])


# Newton works on the continuous map; steps are clamped to this trust region and
# beta is kept in a window slightly wider than [0, pi) so that the E-factor
# continuation paths stay short.
MAX_STEP = np.array([0.15, 0.25, 0.4])
BETA_WINDOW = (-0.5, math.pi + 0.5)
ALPHA_MAX = HALF_PI - 1e-6


def _clamp(x):
    x = x.copy()
    x[0] = min(max(x[0], THETA_BOX[0]), THETA_BOX[1])
    x[1] = min(max(x[1], -ALPHA_MAX), ALPHA_MAX)
    x[2] = min(max(x[2], BETA_WINDOW[0]), BETA_WINDOW[1])
    return x


def _safe_eval(x):
    try:
        f = classify_raw(*x)
    except (DomainError, NumericalError):
        return None
    return f if np.all(np.isfinite(f)) else None


def _checked_eval(*x):
    f = _safe_eval(np.array(x))
    if f is None:
        raise NoConvergenceError("classifying map undefined near the iterate")
    return f


def _newton(x, target, tol, max_iter, h):
    fx = _safe_eval(x)
    if fx is None:
        raise NoConvergenceError("classifying map undefined at the starting point", np.inf, x)
    r = _residual(fx, target)
    nr = float(np.linalg.norm(r))
    for it in range(max_iter):
        if nr <= tol:
            return x, nr, it
        try:
            J = _fd_jacobian(x, h, _checked_eval)
        except NoConvergenceError as e:
            raise NoConvergenceError(str(e), nr, x)
        try:
            step = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            raise NoConvergenceError("singular Jacobian during inversion", nr, x)
        shrink = np.max(np.abs(step) / MAX_STEP)
        if shrink > 1:
            step = step / shrink
        t = 1.0
        for _ in range(12):
            xn = _clamp(x + t * step)
            fn = _safe_eval(xn)
            if fn is not None:
                rn = _residual(fn, target)
                nrn = float(np.linalg.norm(rn))
                if nrn < nr:
                    break
            t *= 0.5
        else:
            raise NoConvergenceError("damped Newton stalled (12 step halvings)", nr, x)
        x, r, nr = xn, rn, nrn
    if nr <= tol:
        return x, nr, max_iter
    raise NoConvergenceError("Newton iteration limit reached", nr, x)


_SEEDS = None


def _seed_table():
    """Coarse table of (x, C_raw(x)) over I, computed once per process."""
    global _SEEDS
    if _SEEDS is None:
        xs, fs = [], []
        for th in np.linspace(0.15, HALF_PI - 0.15, 5):
            for al in np.linspace(-1.3, 1.3, 7):
                for be in np.linspace(0.1, math.pi - 0.1, 8):
                    x = np.array([th, al, be])
                    f = _safe_eval(x)
                    if f is not None:
                        xs.append(x)
                        fs.append(f)
        _SEEDS = (np.array(xs), np.array(fs))
    return _SEEDS


def _seeds_for(tv, k):
    xs, fs = _seed_table()
    d = np.array([np.linalg.norm(_residual(f, tv)) for f in fs])
    return [xs[i] for i in np.argsort(d)[:k]]


_PLANE_SEEDS = None


def _plane_eval(th, be):
    if not (THETA_BOX[0] <= th <= THETA_BOX[1] and BETA_WINDOW[0] <= be <= BETA_WINDOW[1]):
        return None
    return _safe_eval(np.array([th, 0.0, be]))


def _solve_on_alpha_zero(tv, atol, h, max_iter=40, n_seeds=4):
    """(theta, beta) with C(theta, 0, beta) = target, or None.

    Gauss-Newton in (theta, beta) on all three components.  Labels on
    theta <= beta <= pi - theta are one-sided limits from alpha > 0, so a 3-D
    iteration converging onto the plane alpha = 0 stalls; here alpha stays 0.
    On parts of the plane Im b - 2 pi a is nearly constant, hence the
    least-squares step rather than a 2x2 solve on (a, Im b).
    """
    global _PLANE_SEEDS
    if _PLANE_SEEDS is None:
        pts = [(th, be) for th in np.linspace(0.1, HALF_PI - 0.1, 8)
               for be in np.linspace(0.05, math.pi - 0.05, 12)]
        _PLANE_SEEDS = [(np.array(x), f) for x in pts if (f := _plane_eval(*x)) is not None]
    order = sorted(_PLANE_SEEDS, key=lambda s: float(np.linalg.norm(_residual(s[1], tv))))
    for x, f in order[:n_seeds]:
        x = x.copy()
        goal = f - _residual(f, tv)   # lattice translate of the target nearest this seed
        for _ in range(max_iter):
            r = f - goal
            nr = float(np.linalg.norm(r))
            if nr <= atol:
                return x
            J = np.zeros((3, 2))
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                fp, fm = _plane_eval(*(x + e)), _plane_eval(*(x - e))
                if fp is None or fm is None:
                    break
                J[:, j] = (fp - fm) / (2 * h)
            else:
                step = np.linalg.lstsq(J, -r, rcond=None)[0]
                shrink = np.max(np.abs(step) / MAX_STEP[[0, 2]])
                if shrink > 1:
                    step = step / shrink
                t = 1.0
                for _ in range(20):
                    fn = _plane_eval(*(x + t * step))
                    if fn is not None and np.linalg.norm(fn - goal) < nr:
                        break
                    t *= 0.5
                else:
                    break
                x, f = x + t * step, fn
                continue
            break
    return None


def _solve_on_half_line(tv, tol):
    """theta with C(theta, pi/2, 0) = target, or None (beta drops out there)."""
    def fa(th):
        return classify_raw(th, HALF_PI, 0.0)[0] - tv[0]
    ths = np.linspace(THETA_BOX[0] + 0.02, THETA_BOX[1] - 0.02, 25)
    vals = [fa(t) for t in ths]
    for t0, t1, v0, v1 in zip(ths[:-1], ths[1:], vals[:-1], vals[1:]):
        if v0 * v1 <= 0:
            th = brentq(fa, t0, t1, xtol=1e-15, rtol=1e-15)
            if np.linalg.norm(_residual(classify_raw(th, HALF_PI, 0.0), tv)) <= max(tol, 1e-9):
                return th
    return None


def _plane_result(x, tv, its):
    p = canonical_representative(x[0], 0.0, x[1])
    return InversionResult(p, its, float(np.linalg.norm(_residual(classify_raw(*p.triple()), tv))))


def invert_classify(target: ClassPoint, guess: SurfaceParams | None = None, tol: float = 1e-10,
                    max_iter: int = 40, h: float = 1e-6, n_seeds: int = 4) -> InversionResult:
    """Solve C(theta, alpha, beta) = target by damped, trust-region Newton.

    Starts from ``guess`` if given, then from the ``n_seeds`` entries of a
    coarse seed table whose images lie closest to the target.
    """
    tv = np.array([target.a, target.b.real, target.b.imag], dtype=float)
    scale = 1.0 + float(np.linalg.norm(tv))
    if distance_to_scherk_arc(target.a, target.b) <= 1e-8 * scale:
        raise NoConvergenceError("target lies on the Scherk arc C(S) = {(2 csc rho, 2 pi i tan(rho/2))}, "
                                 "which is not in the image of the classifying map",
                                 near_scherk_arc=True)
    seeds = _seeds_for(tv, n_seeds)
    starts = ([np.array(guess.triple())] if guess is not None else []) + seeds
    atol = tol * scale
    best, total = None, 0
    re_b = reduce_to_lambda(target.a, target.b).real
    plane_tried = min(re_b, TWO_PI * target.a - re_b) <= 1e-9 * scale
    if plane_tried:
        # Re b = 0, as for surfaces with alpha = 0: try that plane first
        x = _solve_on_alpha_zero(tv, atol, h)
        if x is not None:
            return _plane_result(x, tv, 0)
    if guess is None and abs(seeds[0][1]) > 1.2:
        # close to the half-line alpha = pi/2, where beta drops out
        x = _solve_on_half_line(tv, atol)
        if x is not None:
            return InversionResult(SurfaceParams(x, HALF_PI, 0.0), 0, float(
                np.linalg.norm(_residual(classify_raw(x, HALF_PI, 0.0), tv))))
    for x0 in starts:
        try:
            x, res, it = _newton(_clamp(x0), tv, atol, max_iter, h)
        except NoConvergenceError as e:
            total += max_iter
            if best is None or e.residual < best.residual:
                best = e
            continue
        total += it
        if x[0] <= THETA_BOX[0] + 1e-12 or x[0] >= THETA_BOX[1] - 1e-12:
            best = NoConvergenceError("solution requires theta outside the clamped box "
                                      f"[{THETA_BOX[0]}, {THETA_BOX[1]}]", res, x)
            continue
        try:
            p = canonical_representative(*x)
        except DomainError as e:
            best = NoConvergenceError(f"converged to an excluded triple: {e}", res, x)
            continue
        return InversionResult(p, total, float(res))
    if not plane_tried:
        x = _solve_on_alpha_zero(tv, atol, h)
        if x is not None:
            return _plane_result(x, tv, total)
    x = _solve_on_half_line(tv, atol)
    if x is not None:
        return InversionResult(SurfaceParams(x, HALF_PI, 0.0), total, float(
            np.linalg.norm(_residual(classify_raw(x, HALF_PI, 0.0), tv))))
    near = distance_to_scherk_arc(target.a, target.b) < 1e-2 * scale
    raise NoConvergenceError(str(best) + (" (target near the Scherk arc)" if near else ""),
                             best.residual, best.best, near)


# ---------------------------------------------------------------------------
# conjugation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConjugationReport:
    source: tuple
    target: tuple
    scale: float
    mismatches: dict = field(default_factory=dict)

    @property
    def max_mismatch(self):
        return max(self.mismatches.values()) if self.mismatches else 0.0

    def as_dict(self):
        return {"source": list(self.source), "target": list(self.target), "scale": self.scale,
                "mismatches": {k: float(v) for k, v in self.mismatches.items()},
                "max_mismatch": float(self.max_mismatch)}


def conjugate_params(params: SurfaceParams) -> ConjugationReport:
    """(theta, alpha, beta) -> (pi/2 - theta, alpha, beta + pi/2 mod pi), scale K(sin^2)/K(cos^2)."""
    th, al, be = params.triple()
    s2, c2 = math.sin(th) ** 2, math.cos(th) ** 2
    scale = elliptic_K(s2) / elliptic_K(c2)
    tth = HALF_PI - th
    if abs(al - HALF_PI) <= 1e-12:
        target = (tth, HALF_PI, 0.0)
    else:
        tb = (be + HALF_PI) % math.pi
        why = in_domain(tth, al, tb)
        if why:
            raise DomainError(f"conjugate triple {(tth, al, tb)} not in I via beta -> beta + pi/2 "
                              f"(mod pi): {why}")
        target = (tth, al, tb)
    return ConjugationReport(params.triple(), target, scale)


def _lattice_invariants(H, V):
    """Invariants of the lattice Z H + Z V under rotations about x3 and basis changes V -> +-V + kH."""
    V = -V if V[2] < 0 else V
    h = float(np.linalg.norm(H))
    u = H / h
    par = float(np.dot(V, u)) / h
    fold = abs(par - round(par))
    perp = abs(u[0] * V[1] - u[1] * V[0])
    return {"horizontal_period": h, "vertical_period": abs(V[2]), "fold": fold, "perp": perp,
            "area": float(np.linalg.norm(np.cross(H, V)))}


def check_self_conjugate(params: SurfaceParams, tol: float = 1e-6) -> ConjugationReport:
    """Compare the conjugate data (g, i dh) of M with the surface at the conjugate parameters.

    The conjugate M* has lattice {-F_A, -F_gamma2}, end fluxes P_A and flux
    along gamma_1 + gamma_A; scaled by K(sin^2)/K(cos^2) these must agree,
    up to a rotation about the vertical axis, with the lattice {P_A, P_gamma1},
    end fluxes F_A and flux along gamma_2 of the target surface.
    """
    rep = conjugate_params(params)
    s = rep.scale
    pf = all_period_fluxes(params)
    pt = all_period_fluxes(SurfaceParams(*rep.target))
    H1, V1 = -s * pf["gammaA"].F, -s * pf["gamma2"].F
    H2, V2 = pt["gammaA"].P, pt["gamma1"].P
    li1, li2 = _lattice_invariants(H1, V1), _lattice_invariants(H2, V2)
    mm = {}
    for k in li1:
        d = abs(li1[k] - li2[k])
        if k == "fold":
            d = min(d, 1 - d)
            mm[k] = d
        else:
            mm[k] = d / max(1.0, abs(li2[k]))
    F1 = s * (pf["gamma1"].P + pf["gammaA"].P)
    F2 = pt["gamma2"].F
    mm["flux_along_lattice"] = abs(abs(np.dot(F1, H1)) / np.linalg.norm(H1)
                                   - abs(np.dot(F2, H2)) / np.linalg.norm(H2)) / max(1.0, np.linalg.norm(F2))
    mm["vertical_flux"] = abs(abs(F1[2]) - abs(F2[2])) / (2 * math.pi)
    mm["end_flux"] = abs(s * np.linalg.norm(pf["gammaA"].P) - np.linalg.norm(pt["gammaA"].F)) / max(
        1.0, np.linalg.norm(pt["gammaA"].F))
    out = ConjugationReport(rep.source, rep.target, s, mm)
    return out


def self_conjugate_ok(report: ConjugationReport, tol: float = 1e-6) -> bool:
    return report.max_mismatch < tol
