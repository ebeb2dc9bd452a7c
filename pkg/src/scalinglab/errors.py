"""Exception hierarchy for the laboratory.

Every failure mode that callers are expected to handle gets its own class;
all inherit from ScalingLabError so a driver can catch the lot.
"""


class ScalingLabError(Exception):
    pass


# linear algebra
class DegenerateInput(ScalingLabError):
    """Input vectors are not numerically linearly independent."""


class SingularOperator(ScalingLabError):
    """Operator is singular or too ill-conditioned to factor."""


class NotComparable(ScalingLabError):
    """Operator difference is not Hermitian within tolerance."""


# domains
class OutsideNeighborhood(ScalingLabError):
    """Point lies outside the validity neighborhood of the defining function."""


class NotBoundaryPoint(ScalingLabError):
    pass


class NoBoundaryHit(ScalingLabError):
    """Axis ray exits the validity neighborhood before crossing the boundary."""


class NotStronglyPseudoconvex(ScalingLabError):
    pass


# kobayashi
class OutOfRange(ScalingLabError):
    pass


class NoAdmissibleDisc(ScalingLabError):
    pass


class NoEnclosingBall(ScalingLabError):
    """Domain has no known enclosing ball (e.g. it is unbounded)."""


class PreconditionViolated(ScalingLabError):
    pass


# automorphisms
class OutOfBall(ScalingLabError):
    pass


class PoleHit(ScalingLabError):
    """Linear fractional map evaluated at its pole."""


class UnsupportedDomain(ScalingLabError):
    pass


# scaling
class DegenerateTangent(ScalingLabError):
    """Boundary gradient has no usable first-axis component."""


class NonpositiveRadius(ScalingLabError):
    pass


class DomainEscape(ScalingLabError):
    """A sampled point left the validity region of the normalization map."""


class SingularDifferential(ScalingLabError):
    pass


# iteration
class ContractionFailure(ScalingLabError):
    """Measured contraction ratio exceeded the admissible bound."""


class NonConvergence(ScalingLabError):
    pass


# configuration
class ConfigError(ScalingLabError):
    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
