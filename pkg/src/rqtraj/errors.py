"""Exception hierarchy shared by all modules."""


class RQTrajError(Exception):
    """Base class for every error raised by :mod:`rqtraj`."""


class DegenerateEnergy(RQTrajError, ValueError):
    """(E - V)^2 sits on the band around m0^2 c^4 where the momentum-velocity
    relation and the f-function are singular."""


class WrongRegime(RQTrajError, ValueError):
    """Energy belongs to the other regime (allowed vs. forbidden)."""


class InvalidConstants(RQTrajError, ValueError):
    """Microstate constants are not admissible (a == 0 or non-finite)."""


class BasisDegenerate(RQTrajError, ValueError):
    """Both basis solutions vanish at the evaluation point."""


class DomainError(RQTrajError, ValueError):
    """Point lies outside the domain a sampled basis was built on."""


class IntegrationFailure(RQTrajError, ArithmeticError):
    """A numerical integration produced non-finite values or missed its tolerance."""


class WronskianDrift(IntegrationFailure):
    """Wronskian of a numeric basis is not constant to tolerance."""


class DegeneratePath(RQTrajError, ValueError):
    """Integration path touches the degenerate band."""


class SignChange(RQTrajError, ValueError):
    """Velocity changes sign inside a time-of-flight interval."""


class RootBracketFailure(RQTrajError, ArithmeticError):
    """A root could not be bracketed or refined."""


class ZeroMomentum(RQTrajError, ValueError):
    """Conjugate momentum is zero where it must not vanish."""


class ZeroVelocity(RQTrajError, ValueError):
    """Velocity is zero where the kinematic form divides by it."""


class SingularTime(RQTrajError, ValueError):
    """Forbidden-region closed form evaluated at a logarithmic or pole singularity.

    ``nearest`` holds the singular time closest to the requested one.
    """

    def __init__(self, message, nearest=None):
        super().__init__(message)
        self.nearest = nearest
