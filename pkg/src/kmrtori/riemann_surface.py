"""The torus  Sigma_theta : w^2 = (z^2 + lambda^2)(z^2 + lambda^-2).

Points are stored in the z-chart; the point(s) over z = infinity use the
chart u = 1/z with w~ = w u^2 (the curve has the same equation in (u, w~)).
The sheet of w is carried by analytic continuation; ``sheet_function`` is a
closed-form single-valued branch on the plane minus the two imaginary-axis
cuts {it : |t| >= lambda} and {it : |t| <= 1/lambda}.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .errors import ContinuationError, DomainError
from .special_functions import lambda_of_theta, mu_of_theta

HALF_PI = 0.5 * math.pi
EXCLUSION_TOL = 1e-12


def in_domain(theta, alpha, beta, tol=EXCLUSION_TOL):
    """Membership in the parameter domain I (reason string or None)."""
    if not (0.0 < theta < HALF_PI):
        return "theta must lie in (0, pi/2)"
    if abs(alpha - HALF_PI) <= tol and abs(beta) <= tol:
        return None
    if not (-HALF_PI < alpha < HALF_PI):
        return "alpha must lie in (-pi/2, pi/2) (or the half-line alpha=pi/2, beta=0)"
    if not (0.0 <= beta < math.pi):
        return "beta must lie in [0, pi)"
    if abs(alpha) <= tol and (abs(beta - theta) <= tol or abs(beta - (math.pi - theta)) <= tol):
        return "(alpha, beta) = (0, theta) and (0, pi - theta) are excluded (end meets a branch point)"
    return None


@dataclass(frozen=True)
class SurfaceParams:
    theta: float
    alpha: float
    beta: float
    lam: float = field(init=False)
    mu: float = field(init=False)
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        for name in ("theta", "alpha", "beta"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if self.check:
            why = in_domain(self.theta, self.alpha, self.beta)
            if why:
                raise DomainError(f"({self.theta}, {self.alpha}, {self.beta}) not in I: {why}")
        elif not (0.0 < self.theta < HALF_PI):
            raise DomainError("theta must lie in (0, pi/2)")
        object.__setattr__(self, "lam", lambda_of_theta(self.theta))
        object.__setattr__(self, "mu", mu_of_theta(self.theta))

    @classmethod
    def unchecked(cls, theta, alpha, beta):
        """Parameters outside I (e.g. the extended range used by identifications)."""
        return cls(theta, alpha, beta, check=False)

    def triple(self):
        return (self.theta, self.alpha, self.beta)


# ---------------------------------------------------------------------------
# points and the curve
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TorusPoint:
    """(z, w) on Sigma_theta.  At z = infinity ``w`` holds lim w/z^2 = w~(u=0)."""

    z: complex
    w: complex
    at_infinity: bool = False

    def chart(self):
        """('z', z, w) if |z| <= 1, else ('u', 1/z, w/z^2)."""
        if self.at_infinity:
            return "u", 0j, complex(self.w)
        z = complex(self.z)
        if abs(z) <= 1.0:
            return "z", z, complex(self.w)
        u = 1.0 / z
        return "u", u, complex(self.w) * u * u

    @classmethod
    def from_chart(cls, chart, x, y):
        x, y = complex(x), complex(y)
        if chart == "z":
            return cls(x, y)
        if x == 0:
            return cls(complex(np.inf), y, True)
        return cls(1.0 / x, y / (x * x))

    def residual(self, lam):
        _, x, y = self.chart()
        return abs(y * y - curve_poly(x, lam))


def curve_poly(x, lam):
    """x^4 + (lambda^2 + lambda^-2) x^2 + 1 -- the curve in either chart."""
    x2 = x * x
    return (x2 + lam * lam) * (x2 + 1.0 / (lam * lam))


def sheet_function(z, lam):
    """Branch w_I(z) = z sqrt(L^2 + (z - 1/z)^2), L = lambda + 1/lambda.

    Continuous off the cuts {it : |t| >= lambda} and {it : |t| <= 1/lambda};
    on the annulus 1/lambda < |z| < lambda it is analytic, and w_I(x) > 0
    for x > 0.
    """
    z = np.asarray(z, dtype=complex)
    # L^2 + (z - 1/z)^2 in factored form keeps relative accuracy near the branch points
    il = 1.0 / lam
    rad = (z - 1j * lam) * (z + 1j * lam) * (z - 1j * il) * (z + 1j * il) / (z * z)
    return z * np.sqrt(rad)


def slit_function(z, lam):
    """Branch w_1 analytic off the slits [i/lambda, i lambda] and [-i lambda, -i/lambda]."""
    z = np.asarray(z, dtype=complex)
    a, b = 1j * lam, 1j / lam
    return (z - a) * np.sqrt((z - b) / (z - a)) * (z + a) * np.sqrt((z + b) / (z + a))


def branch_points(params: SurfaceParams):
    """The four roots of (z^2 + lambda^2)(z^2 + lambda^-2)."""
    lam = params.lam
    return (1j * lam, -1j * lam, 1j / lam, -1j / lam)


def _lam_of(params_or_lam):
    return params_or_lam.lam if isinstance(params_or_lam, SurfaceParams) else float(params_or_lam)


def w_at(z, sheet_hint, params) -> TorusPoint:
    """Point over z whose w is the root closest to ``sheet_hint``.

    For z = infinity (or |z| > 1 with ``chart='u'`` semantics) the hint
    refers to w~ = w/z^2 in the u-chart.
    """
    lam = _lam_of(params)
    z = complex(z)
    if not np.isfinite(z):
        r = complex(np.sqrt(complex(curve_poly(0j, lam))))
        return TorusPoint(complex(np.inf), r if abs(r - sheet_hint) <= abs(r + sheet_hint) else -r, True)
    r = complex(np.sqrt(complex(curve_poly(z, lam))))
    if r == 0:
        return TorusPoint(z, 0j)
    return TorusPoint(z, r if abs(r - sheet_hint) <= abs(r + sheet_hint) else -r)


def w_at_chart(chart, x, sheet_hint, params) -> TorusPoint:
    """Like ``w_at`` but with the point and hint given in a chart."""
    lam = _lam_of(params)
    x = complex(x)
    r = complex(np.sqrt(complex(curve_poly(x, lam))))
    y = r if abs(r - sheet_hint) <= abs(r + sheet_hint) else -r
    return TorusPoint.from_chart(chart, x, y)


def exclusion_radius(params) -> float:
    """10^-3 times the minimal gap between branch points."""
    lam = _lam_of(params)
    return 1e-3 * min(2.0 / lam, lam - 1.0 / lam)


def continue_along(path, start: TorusPoint, params, check_steps=True):
    """Analytic continuation of w along sampled z-values ``path``.

    Each step picks the root closest to the previous value.  Raises
    ``ContinuationError`` if the path enters the branch-point exclusion
    disc, or (``check_steps``) if a step is too long for the sign rule to
    be reliable.
    """
    lam = _lam_of(params)
    zs = np.asarray(path, dtype=complex)
    bps = np.array([1j * lam, -1j * lam, 1j / lam, -1j / lam])
    d = np.min(np.abs(zs[:, None] - bps[None, :]), axis=1)
    excl = exclusion_radius(lam)
    if np.any(d < excl):
        k = int(np.argmin(d))
        raise ContinuationError(f"path passes within {d[k]:.3g} of a branch point at sample {k}; "
                                "reroute or refine")
    if check_steps and len(zs) > 1:
        steps = np.abs(np.diff(zs))
        if np.any(steps > 0.5 * d[:-1]):
            raise ContinuationError("path sampling too coarse near a branch point; refine the path")
    roots = np.sqrt(curve_poly(zs, lam).astype(complex))
    out = []
    prev = complex(start.w) if not start.at_infinity else None
    if prev is None:
        raise ContinuationError("continuation must start at a finite point")
    for zk, rk in zip(zs, roots):
        rk = complex(rk)
        wk = rk if abs(rk - prev) <= abs(rk + prev) else -rk
        out.append(TorusPoint(complex(zk), wk))
        prev = wk
    return out


# ---------------------------------------------------------------------------
# symmetries
# ---------------------------------------------------------------------------

class SymmetryName(enum.Enum):
    Identity = (0, 0, 0, 0)
    S1 = (1, 0, 0, 0)
    S2 = (0, 1, 0, 0)
    S3 = (0, 0, 1, 0)
    RD = (0, 0, 0, 1)
    Deck = (1, 0, 0, 1)
    CalE = (1, 1, 1, 0)
    CalF = (0, 1, 1, 1)


GENERATORS = ("S1", "S2", "S3", "RD")


@dataclass(frozen=True)
class Symmetry:
    """Element of the group (Z/2)^4 generated by S1, S2, S3, R_D."""

    bits: tuple = (0, 0, 0, 0)

    def __mul__(self, other):
        return Symmetry(tuple(a ^ b for a, b in zip(self.bits, other.bits)))

    @property
    def name(self):
        for s in SymmetryName:
            if s.value == self.bits:
                return s.name
        return "*".join(g for g, b in zip(GENERATORS, self.bits) if b)

    @property
    def holomorphic(self):
        return sum(self.bits) % 2 == 0

    @classmethod
    def parse(cls, s):
        if isinstance(s, Symmetry):
            return s
        if isinstance(s, SymmetryName):
            return cls(s.value)
        parts = [p.strip() for p in str(s).replace("∘", "*").split("*") if p.strip()]
        return reduce(lambda a, b: a * b, (cls(SymmetryName[p].value) for p in parts), cls())


def all_symmetries():
    return [Symmetry(((k >> 3) & 1, (k >> 2) & 1, (k >> 1) & 1, k & 1)) for k in range(16)]


def _apply_generator(name, chart, x, y):
    # chart-level formulas; S1, S2, R_D, Deck keep the chart, S3 swaps it
    if name == "S1":
        return chart, -np.conj(x), -np.conj(y)
    if name == "S2":
        return chart, np.conj(x), np.conj(y)
    if name == "RD":
        return chart, -np.conj(x), np.conj(y)
    if name == "S3":
        return ("u" if chart == "z" else "z"), np.conj(x), np.conj(y)
    raise KeyError(name)


def apply_symmetry(s, p: TorusPoint) -> TorusPoint:
    """Apply an element of the symmetry group.

    S1:(z,w)->(-zb,-wb)   S2:(z,w)->(zb,wb)   S3:(z,w)->(1/zb, wb/zb^2)
    R_D:(z,w)->(-zb,wb)   Deck = S1 R_D = (z,-w)
    CalE = S1 S2 S3 : (z,w)->(-1/zb, -wb/zb^2),   CalF = CalE Deck.
    """
    sym = Symmetry.parse(s)
    chart, x, y = p.chart()
    # generators commute, apply right-most first: RD, S3, S2, S1
    for name, bit in reversed(list(zip(GENERATORS, sym.bits))):
        if bit:
            chart, x, y = _apply_generator(name, chart, x, y)
    return TorusPoint.from_chart(chart, x, y)


def deck(p: TorusPoint) -> TorusPoint:
    """Sheet swap (z, w) -> (z, -w)."""
    return TorusPoint(p.z, -p.w, p.at_infinity)


def _in_chart(p: TorusPoint, chart):
    if chart == "z":
        return None if p.at_infinity else (complex(p.z), complex(p.w))
    if p.at_infinity:
        return 0j, complex(p.w)
    z = complex(p.z)
    if z == 0:
        return None
    return 1.0 / z, complex(p.w) / (z * z)


def points_close(p: TorusPoint, q: TorusPoint, tol=1e-10) -> bool:
    """Equality of points on Sigma_theta, compared in p's chart."""
    chart, xp, yp = p.chart()
    cq = _in_chart(q, chart)
    if cq is None:
        return False
    xq, yq = cq
    return abs(xp - xq) <= tol * (1 + abs(xp)) and abs(yp - yq) <= tol * (1 + abs(yp))
