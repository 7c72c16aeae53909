"""Weierstrass data (g, dh) of M_{theta,alpha,beta}.

g(z, w) = (sigma z + delta) / (i (conj(sigma) - conj(delta) z)),  dh = mu dz / w,
Phi = (1/2 (1/g - g), i/2 (1/g + g), 1) dh.

A unimodular factor ``rot`` may be applied to g (rotation about the vertical
axis); it defaults to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PoleError
from .riemann_surface import (SurfaceParams, TorusPoint, apply_symmetry, branch_points, deck,
                              slit_function, w_at_chart)
from .special_functions import ParamPath, QuadratureSettings, integrate_path

END_NAMES = ("A", "Aprime", "Adoubleprime", "Atripleprime")
FORMS = ("dh/g", "g dh", "dh", "Phi")


@dataclass(frozen=True)
class GaussMap:
    sigma: complex
    delta: complex

    def __call__(self, chart, x, rot=1.0):
        """g in the given chart (vectorised); returns inf at poles."""
        s, d = self.sigma, self.delta
        x = np.asarray(x, dtype=complex)
        if chart == "z":
            num, den = s * x + d, 1j * (np.conj(s) - np.conj(d) * x)
        else:
            num, den = s + d * x, 1j * (np.conj(s) * x - np.conj(d))
        with np.errstate(divide="ignore", invalid="ignore"):
            return rot * num / den

    @property
    def zero_z(self):
        """z-value of the zeros, -delta/sigma."""
        return -self.delta / self.sigma

    @property
    def pole_u(self):
        """u = 1/z value of the poles, conj(delta)/conj(sigma)."""
        return np.conj(self.delta) / np.conj(self.sigma)


def gauss_coeffs(alpha: float, beta: float) -> GaussMap:
    """Moebius coefficients sigma, delta of the Gauss map."""
    a, b = float(alpha), float(beta)
    sigma = complex(math.cos(0.5 * (a + b)), math.cos(0.5 * (a - b)))
    delta = complex(math.sin(0.5 * (a - b)), math.sin(0.5 * (a + b)))
    return GaussMap(sigma, delta)


def gauss_value(p: TorusPoint, gm: GaussMap, rot=1.0):
    """g(p); complex infinity at poles."""
    chart, x, _ = p.chart()
    c = gm(chart, x, rot)
    v = complex(c)
    if not np.isfinite(v):
        return complex(np.inf)
    return v


@dataclass(frozen=True)
class EndSet:
    """The four ends: poles A, A'' over one z-value, zeros A', A''' over another."""

    A: TorusPoint
    Aprime: TorusPoint
    Adoubleprime: TorusPoint
    Atripleprime: TorusPoint
    kinds: dict = field(default_factory=lambda: {"A": "pole", "Aprime": "zero",
                                                 "Adoubleprime": "pole", "Atripleprime": "zero"})

    def __getitem__(self, name):
        return getattr(self, name)

    def items(self):
        return [(n, getattr(self, n)) for n in END_NAMES]


def _end_collision(params, gm):
    bps = np.array(branch_points(params))
    z0 = gm.zero_z
    return np.min(np.abs(bps - z0)) <= 1e-12 * (1 + abs(z0))


def ends(params: SurfaceParams, gm: GaussMap | None = None) -> EndSet:
    """Labelled ends, continued from (alpha, beta) = (0, 0).

    At the base configuration A = (inf, w/z^2 -> +1), A'' = Deck(A),
    A' = CalE(A), A''' = Deck(A').  Off the line alpha = 0 the continued sheet
    of A equals the slit branch w_1 evaluated at u_A = conj(delta)/conj(sigma);
    on alpha = 0 the one-sided limit from alpha > 0 is taken.
    """
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    if _end_collision(params, gm):
        raise DomainError(f"excluded parameters {params.triple()}: ends meet the branch points")
    u = complex(gm.pole_u)
    hint = complex(slit_function(u + 1e-12 * (1.0 + abs(u)), params.lam))
    A = w_at_chart("u", u, hint, params)
    Ap = apply_symmetry("CalE", A)
    return EndSet(A, Ap, deck(A), deck(Ap))


def end_kind(p: TorusPoint, gm: GaussMap) -> str:
    """'zero' or 'pole' according to which end projection p lies over."""
    chart, x, _ = p.chart()
    z0, up = complex(gm.zero_z), complex(gm.pole_u)
    if chart == "z":
        zero_x, pole_x = z0, (1.0 / up if up != 0 else complex(np.inf))
    else:
        zero_x, pole_x = (1.0 / z0 if z0 != 0 else complex(np.inf)), up
    return "zero" if abs(x - zero_x) < abs(x - pole_x) else "pole"


# ---------------------------------------------------------------------------
# the Weierstrass form
# ---------------------------------------------------------------------------

def phi_coeffs(chart, x, y, gm: GaussMap, mu: float, rot=1.0):
    """Phi / dx in the chart ``chart`` at (x, y); shape (3,) + x.shape."""
    g = gm(chart, x, rot)
    dh = (mu / np.asarray(y, dtype=complex)) * (1.0 if chart == "z" else -1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ig = 1.0 / g
    return np.array([0.5 * (ig - g) * dh, 0.5j * (ig + g) * dh, dh + 0 * g])


def g_dh_coeff(chart, x, y, gm, mu, rot=1.0):
    dh = (mu / np.asarray(y, dtype=complex)) * (1.0 if chart == "z" else -1.0)
    return gm(chart, x, rot) * dh


def dh_over_g_coeff(chart, x, y, gm, mu, rot=1.0):
    dh = (mu / np.asarray(y, dtype=complex)) * (1.0 if chart == "z" else -1.0)
    return dh / gm(chart, x, rot)


def phi_eval(p: TorusPoint, params: SurfaceParams, gm: GaussMap | None = None, rot=1.0):
    """Phi/dz at a finite point (Phi/du at z = infinity)."""
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    if p.at_infinity:
        chart, x, y = "u", 0j, complex(p.w)
    else:
        chart, x, y = "z", complex(p.z), complex(p.w)
    if abs(y) < 1e-14:
        raise PoleError("Phi/dz is singular at a branch point; use a local coordinate")
    g = complex(gm(chart, x, rot))
    # the zero / pole of g in this chart, compared relative to the point's size
    zero = gm.zero_z if chart == "z" else (1.0 / gm.zero_z if gm.zero_z != 0 else np.inf)
    pole = (1.0 / gm.pole_u if gm.pole_u != 0 else np.inf) if chart == "z" else gm.pole_u
    near = [abs(x - e) <= 1e-12 * (1.0 + abs(x)) for e in (zero, pole) if np.isfinite(e)]
    if not np.isfinite(g) or abs(g) < 1e-300 or any(near):
        raise PoleError("Phi has a pole at an end of the surface")
    return phi_coeffs(chart, x, y, gm, params.mu, rot)


def conformality_residual(v):
    """|phi_1^2 + phi_2^2 + phi_3^2| / |phi|^2."""
    v = np.asarray(v)
    return abs(np.sum(v * v, axis=0)) / np.sum(np.abs(v) ** 2, axis=0)


# ---------------------------------------------------------------------------
# residues
# ---------------------------------------------------------------------------

def _residue_scalar(end: TorusPoint, params, gm, kind, which, rot):
    """Analytic residue of g dh (at poles) or dh/g (at zeros) in end's chart."""
    s, d, mu = gm.sigma, gm.delta, params.mu
    chart, x, y = end.chart()
    if kind == "pole" and which == "g dh":
        if chart == "z":
            return rot * 1j * (s * x + d) / np.conj(d) * mu / y
        return rot * (s + d * x) / (1j * np.conj(s)) * (-mu / y)
    if kind == "zero" and which == "dh/g":
        if chart == "z":
            return 1j * (np.conj(s) - np.conj(d) * x) / s * mu / y / rot
        return 1j * (np.conj(s) * x - np.conj(d)) / d * (-mu / y) / rot
    return 0j


def residue_at_end(end: TorusPoint, params: SurfaceParams, which: str = "Phi",
                   gm: GaussMap | None = None, rot=1.0):
    """Residue of dh/g, g dh, dh or Phi (3-vector) at an end.

    Uses the Moebius derivative and the value of w at the end:
    Res g dh = G mu / w with G = i (sigma z_p + delta)/conj(delta) (z-chart),
    Res dh/g = H mu / w with H = i (conj(sigma) - conj(delta) z_0)/sigma,
    and Phi_1 - i Phi_2 = dh/g,  Phi_1 + i Phi_2 = -g dh.
    """
    if which not in FORMS:
        raise DomainError(f"unknown form {which!r}; choose from {FORMS}")
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    kind = end_kind(end, gm)
    if which == "dh":
        return 0j
    if which != "Phi":
        return complex(_residue_scalar(end, params, gm, kind, which, rot))
    if kind == "pole":
        r = _residue_scalar(end, params, gm, kind, "g dh", rot)
        return np.array([-0.5 * r, 0.5j * r, 0j])
    r = _residue_scalar(end, params, gm, kind, "dh/g", rot)
    return np.array([0.5 * r, 0.5j * r, 0j])


def special_points_in_chart(chart, params: SurfaceParams, gm: GaussMap):
    """Branch points and end projections in chart coordinates (finite ones)."""
    pts = list(branch_points(params))  # the set is invariant under u = 1/z
    z0 = complex(gm.zero_z)
    up = complex(gm.pole_u)
    if chart == "z":
        pts.append(z0)
        if up != 0:
            pts.append(1.0 / up)
    else:
        pts.append(up)
        if z0 != 0:
            pts.append(1.0 / z0)
    return np.array(pts, dtype=complex)


def end_loop_radius(end: TorusPoint, params, gm) -> float:
    """0.1 x distance (in the end's chart) to the nearest other special point."""
    chart, x, _ = end.chart()
    pts = special_points_in_chart(chart, params, gm)
    d = np.abs(pts - x)
    d = d[d > 1e-12 * (1 + abs(x))]
    return 0.1 * float(np.min(d))


def small_loop(end: TorusPoint, params, radius=None, gm=None):
    """(chart, ParamPath, sheet evaluator) for a positive loop around an end."""
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    chart, x, y = end.chart()
    r = radius or end_loop_radius(end, params, gm)
    path = ParamPath.circle(x, r)
    lam = params.lam

    def sheet(xx):
        from .riemann_surface import curve_poly
        root = np.sqrt(np.asarray(curve_poly(xx, lam), dtype=complex))
        return np.where((root * np.conj(y)).real >= 0, root, -root)
    return chart, path, sheet


def residue_numeric(end: TorusPoint, params: SurfaceParams, which: str = "Phi", radius=None,
                    gm=None, rot=1.0, settings: QuadratureSettings | None = None):
    """Residue via the contour integral over a small loop, divided by 2 pi i."""
    gm = gm or gauss_coeffs(params.alpha, params.beta)
    chart, path, sheet = small_loop(end, params, radius, gm)
    mu = params.mu
    funcs = {
        "Phi": lambda x, t: phi_coeffs(chart, x, sheet(x), gm, mu, rot),
        "g dh": lambda x, t: g_dh_coeff(chart, x, sheet(x), gm, mu, rot),
        "dh/g": lambda x, t: dh_over_g_coeff(chart, x, sheet(x), gm, mu, rot),
        "dh": lambda x, t: (mu / sheet(x)) * (1.0 if chart == "z" else -1.0),
    }
    settings = settings or QuadratureSettings(abs_tol=1e-12, rel_tol=1e-12)
    res = integrate_path(funcs[which], path, settings)
    return res.value / (2j * math.pi)
