class FptError(Exception):
    """Base class for library errors."""


class UnresolvedComparison(FptError, ArithmeticError):
    """Bracket width hit the floating-point floor before the comparison resolved."""


class DegenerateDifference(FptError, ArithmeticError):
    """A partial-sum difference vanished, so an oscillation ratio is undefined."""


class CalibrationFailure(FptError):
    """The envelope constant could not be computed as a finite number."""


class UnsupportedBoundary(FptError, ValueError):
    """Boundary parameters the sampler cannot handle."""


class ProposalExhaustion(FptError, RuntimeError):
    """Acceptance-rejection exceeded its proposal cap without accepting."""


class EmptySample(FptError, ValueError):
    pass
