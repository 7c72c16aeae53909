"""Numerical toolkit for the KMR family of doubly periodic minimal tori.

Modules: ``special_functions`` (elliptic integrals, quadrature),
``riemann_surface`` (the torus, sheets, symmetries), ``weierstrass``
(Gauss map, height differential, ends, residues), ``invariants`` (cycles,
periods, fluxes, closing conditions, isometries, limits), ``moduli``
(classifying map, inversion, conjugation) and ``meshcli`` (immersion,
meshes, command line).
"""

from .errors import (ClosingError, ContinuationError, DomainError, KMRError, NoConvergenceError,
                     NumericalError, PoleError)
from .riemann_surface import SurfaceParams, TorusPoint

__version__ = "0.1.0"

__all__ = ["SurfaceParams", "TorusPoint", "KMRError", "DomainError", "NumericalError",
           "ContinuationError", "PoleError", "NoConvergenceError", "ClosingError"]
