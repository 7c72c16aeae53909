"""Exception hierarchy shared by all modules.

Validation problems (bad parameters, excluded points) raise ``DomainError``;
numerical trouble (quadrature, continuation, Newton) raises subclasses of
``NumericalError``.  The CLI maps the two families to exit codes 1 and 2.
"""


class KMRError(Exception):
    """Base class for toolkit errors."""

    kind = "error"

    def to_dict(self):
        return {"error": self.kind, "message": str(self)}


class DomainError(KMRError, ValueError):
    """Input outside the admissible domain."""

    kind = "domain_error"


class NumericalError(KMRError, RuntimeError):
    """A numerical procedure failed to reach its tolerance."""

    kind = "numerical_error"

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual

    def to_dict(self):
        d = super().to_dict()
        if self.residual is not None:
            d["residual"] = float(self.residual)
        return d


class ContinuationError(NumericalError):
    """Analytic continuation of w came too close to a branch point."""

    kind = "refinement_required"


class PoleError(NumericalError):
    """A form was evaluated at (or integrated through) one of its poles."""

    kind = "pole"


class NoConvergenceError(NumericalError):
    """Newton inversion did not converge."""

    kind = "no_convergence"

    def __init__(self, message, residual=None, best=None, near_scherk_arc=False):
        super().__init__(message, residual)
        self.best = best
        self.near_scherk_arc = near_scherk_arc

    def to_dict(self):
        d = super().to_dict()
        if self.best is not None:
            d["best_iterate"] = [float(x) for x in self.best]
        d["near_scherk_arc"] = bool(self.near_scherk_arc)
        return d


class ClosingError(NumericalError):
    """Period closing conditions violated beyond tolerance."""

    kind = "closing_failure"
