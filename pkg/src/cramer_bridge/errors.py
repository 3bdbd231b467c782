"""Exception hierarchy.

Every error raised on purpose by the package derives from ``CramerBridgeError``
so callers (the CLI in particular) can separate numerical/domain failures from
programming errors.
"""


class CramerBridgeError(Exception):
    pass


class DomainViolation(CramerBridgeError, ValueError):
    """Dual variable outside the interior of the partition-function domain."""


class QuadratureUnsupported(CramerBridgeError):
    pass


class LimitUnsupported(CramerBridgeError):
    pass


class NotConverged(CramerBridgeError):
    pass


class RankDeficient(CramerBridgeError, ValueError):
    pass


class CodimUnsupported(CramerBridgeError):
    pass


class DegenerateFiber(CramerBridgeError):
    pass


class UnboundedFiber(CodimUnsupported):
    """Two-dimensional fiber polygon with a nontrivial recession cone."""


class SamplingUnsupported(CramerBridgeError):
    pass


class NoInteriorDual(CramerBridgeError):
    pass


class Unbounded(CramerBridgeError):
    pass


class Infeasible(CramerBridgeError):
    pass


class TooLarge(CramerBridgeError):
    pass


class DegenerateVertex(CramerBridgeError):
    pass


class NearPole(CramerBridgeError):
    pass


class UnsupportedDimension(CramerBridgeError):
    pass


class PoleViolation(CramerBridgeError, ValueError):
    pass


class NotPositiveDefinite(CramerBridgeError, ValueError):
    pass


class DependentConstraints(CramerBridgeError, ValueError):
    pass


class DimensionUnsupported(CramerBridgeError):
    pass


class InvalidRate(CramerBridgeError, ValueError):
    pass


class StepTooLarge(CramerBridgeError):
    pass
