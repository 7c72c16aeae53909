"""Elliptic integrals, the scalar functions of theta, and quadrature engines.

Two engines are exposed:

* adaptive Gauss-Kronrod (``scipy.integrate.quad_vec``) for smooth real or
  complex, scalar or vector integrands along parametrised paths;
* double-exponential (tanh-sinh, ``scipy.integrate.tanhsinh``) for real
  integrals with integrable endpoint singularities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad_vec, tanhsinh

from .errors import DomainError, NumericalError

HALF_PI = 0.5 * math.pi


@dataclass(frozen=True)
class QuadratureSettings:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000
    endpoint_singular: bool = False

    def __post_init__(self):
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise DomainError("quadrature tolerances must be strictly positive")
        if int(self.max_subdivisions) < 1:
            raise DomainError("max_subdivisions must be >= 1")


DEFAULT_SETTINGS = QuadratureSettings()


@dataclass(frozen=True)
class QuadResult:
    """Integral estimate with its achieved error bound."""

    value: complex | float | np.ndarray
    error: float
    neval: int


@dataclass(frozen=True)
class ParamPath:
    """A parametrised curve z(t), t in [t0, t1], with derivative dz(t)."""

    z: Callable[[float], complex]
    dz: Callable[[float], complex]
    t0: float
    t1: float

    @classmethod
    def circle(cls, center=0j, radius=1.0, turns=1):
        c = complex(center)
        return cls(lambda t: c + radius * np.exp(1j * t),
                   lambda t: 1j * radius * np.exp(1j * t),
                   -math.pi, -math.pi + 2 * math.pi * turns)

    @classmethod
    def segment(cls, a, b):
        a, b = complex(a), complex(b)
        return cls(lambda t: a + (b - a) * t, lambda t: (b - a) + 0 * t, 0.0, 1.0)

    def sample(self, n=400):
        t = np.linspace(self.t0, self.t1, n)
        return np.array([self.z(tk) for tk in t])


# ---------------------------------------------------------------------------
# elliptic integral and functions of theta
# ---------------------------------------------------------------------------

def _agm(a, b):
    for _ in range(64):
        an, b = 0.5 * (a + b), math.sqrt(a * b)
        if abs(an - b) <= 1e-16 * an:
            return an
        a = an
    return 0.5 * (a + b)


def elliptic_K(m: float) -> float:
    """Complete elliptic integral of the first kind, parameter convention.

    K(m) = int_0^{pi/2} du / sqrt(1 - m sin^2 u), evaluated as
    pi / (2 AGM(1, sqrt(1-m))).
    """
    m = float(m)
    if not (0.0 <= m < 1.0) or math.isnan(m):
        raise DomainError(f"elliptic_K requires 0 <= m < 1, got {m!r}")
    k = math.pi / (2.0 * _agm(1.0, math.sqrt(1.0 - m)))
    if not math.isfinite(k):
        raise OverflowError(f"elliptic_K overflow at m={m!r}")
    return k


def elliptic_K_quadrature(m: float, settings: QuadratureSettings = DEFAULT_SETTINGS) -> float:
    """Independent evaluation of K(m) by quadrature of its defining integral."""
    m = float(m)
    if not (0.0 <= m < 1.0):
        raise DomainError(f"elliptic_K requires 0 <= m < 1, got {m!r}")
    r = integrate_real(lambda u: 1.0 / np.sqrt(1.0 - m * np.sin(u) ** 2), 0.0, HALF_PI, settings)
    return float(r.value)


def _check_theta(theta):
    theta = float(theta)
    if not (0.0 < theta < HALF_PI):
        raise DomainError(f"theta must lie in (0, pi/2), got {theta!r}")
    return theta


def lambda_of_theta(theta: float) -> float:
    """lambda = cot(theta/2) > 1."""
    theta = _check_theta(theta)
    return 1.0 / math.tan(0.5 * theta)


def mu_of_theta(theta: float) -> float:
    """Height-differential scale mu = pi csc(theta) / K(sin^2 theta)."""
    theta = _check_theta(theta)
    # K(sin^2) = pi / (2 AGM(1, cos)): the complementary modulus avoids sin^2 rounding to 1
    return 2.0 * _agm(1.0, math.cos(theta)) / math.sin(theta)


def _f1_integrand(lam):
    """Integrand in s = lambda - t, so that lambda^2 - t^2 = s (2 lambda - s) keeps full precision."""
    il = 1.0 / lam

    def f(s):
        t = lam - s
        return 1.0 / np.sqrt((t * t - il * il) * s * (2.0 * lam - s))
    return f


def f1_of_theta(theta: float, settings: QuadratureSettings | None = None) -> float:
    """Vertical period along gamma_1,

        f1 = -4 mu int_1^lambda dt / sqrt((t^2 - lambda^-2)(lambda^2 - t^2)),

    computed with the tanh-sinh engine (1/sqrt singularity at t = lambda).
    """
    theta = _check_theta(theta)
    lam = lambda_of_theta(theta)
    s = settings or QuadratureSettings(abs_tol=1e-14, rel_tol=1e-13, endpoint_singular=True)
    if not s.endpoint_singular:
        s = QuadratureSettings(s.abs_tol, s.rel_tol, s.max_subdivisions, True)
    r = integrate_real(_f1_integrand(lam), 0.0, lam - 1.0, s)
    return -4.0 * mu_of_theta(theta) * float(r.value)


# ---------------------------------------------------------------------------
# quadrature engines
# ---------------------------------------------------------------------------

def integrate_real(f: Callable, a: float, b: float,
                   settings: QuadratureSettings = DEFAULT_SETTINGS) -> QuadResult:
    """Integrate a real function over [a, b].

    With ``settings.endpoint_singular`` the tanh-sinh rule is used (f must
    accept numpy arrays and is never evaluated at the endpoints); otherwise
    adaptive Gauss-Kronrod.
    """
    if settings.endpoint_singular:
        levels = max(2, min(14, int(math.log2(settings.max_subdivisions)) + 4))
        res = tanhsinh(f, a, b, atol=settings.abs_tol, rtol=settings.rel_tol, maxlevel=levels)
        if not bool(res.success):
            raise NumericalError("tanh-sinh quadrature did not converge", residual=float(res.error))
        return QuadResult(float(res.integral), float(res.error), int(res.nfev))
    val, err, info = quad_vec(lambda x: np.atleast_1d(f(x)), a, b, epsabs=settings.abs_tol,
                              epsrel=settings.rel_tol, limit=settings.max_subdivisions,
                              full_output=True)
    if not info.success:
        raise NumericalError(f"Gauss-Kronrod quadrature failed: {info.message}", residual=float(err))
    return QuadResult(float(val[0]), float(err), int(info.neval))


def integrate_complex(f: Callable[[float], np.ndarray], t0: float, t1: float,
                      settings: QuadratureSettings = DEFAULT_SETTINGS) -> QuadResult:
    """Adaptive Gauss-Kronrod for complex scalar or vector valued f(t)."""
    probe = np.asarray(f(0.5 * (t0 + t1)), dtype=complex)
    shape = probe.shape

    def g(t):
        v = np.asarray(f(t), dtype=complex).ravel()
        return np.concatenate([v.real, v.imag])

    val, err, info = quad_vec(g, t0, t1, epsabs=settings.abs_tol, epsrel=settings.rel_tol,
                              limit=settings.max_subdivisions, full_output=True)
    if not info.success:
        raise NumericalError(f"Gauss-Kronrod quadrature failed: {info.message}", residual=float(err))
    n = val.size // 2
    out = (val[:n] + 1j * val[n:]).reshape(shape)
    if out.shape == ():
        out = complex(out)
    return QuadResult(out, float(err), int(info.neval))


def integrate_path(f: Callable, path: ParamPath,
                   settings: QuadratureSettings = DEFAULT_SETTINGS) -> QuadResult:
    """Contour integral  int_path f(z, t) dz  along a parametrised curve.

    ``f`` receives the point z(t) and the parameter t (so that callers can
    carry sheet information along the parameter).
    """
    return integrate_complex(lambda t: np.asarray(f(path.z(t), t)) * path.dz(t),
                             path.t0, path.t1, settings)
