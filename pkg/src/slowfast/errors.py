"""Exception hierarchy shared by all modules."""


class SlowFastError(Exception):
    """Base class for every error raised by this package."""


class PreconditionError(SlowFastError, ValueError):
    """An input violates the documented precondition of an operation."""


class JetError(SlowFastError, ValueError):
    """Invalid jet construction or arithmetic (dimension mismatch, domain)."""


class ParseError(SlowFastError, ValueError):
    """Malformed Hamiltonian expression. ``position`` is a 0-based offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} at offset {position}")
        self.position = position


class UnboundParameter(SlowFastError, KeyError):
    def __init__(self, names):
        names = sorted(names)
        super().__init__(f"unbound parameter(s): {', '.join(names)}")
        self.names = names

    def __str__(self):
        return self.args[0]


class NewtonDivergence(SlowFastError):
    """Newton iteration failed to reduce the residual."""


class SingularJacobian(SlowFastError):
    """Newton hit a (numerically) singular Jacobian."""


class ChartInvalid(SlowFastError):
    """No slow-manifold chart with acceptable conditioning at the point."""


class NotOnSM(SlowFastError):
    """Point does not satisfy H_x = H_y = 0 within tolerance."""


class ContinuationStall(SlowFastError):
    """Pseudo-arclength corrector failed after all step halvings."""


class BranchInvalid(SlowFastError):
    """Pivot derivative of an isoenergetic reduction vanishes."""


class TransversalityFailure(SlowFastError):
    """Singular curve is not transverse to the energy level."""


class NotAFold(SlowFastError):
    pass


class NotACusp(SlowFastError):
    pass


class DegenerateCoefficients(SlowFastError):
    pass


class MismatchedEpsilon(SlowFastError):
    pass


class PoleInWindow(SlowFastError):
    """The limit solution blows up inside the comparison window."""


class ClassificationMismatch(SlowFastError):
    """The singular point is not of the kind requested by the study."""
