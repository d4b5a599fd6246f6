"""Exception types shared across the package."""


class EpmError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(EpmError, ValueError):
    """An input parameter is outside its allowed range."""


class SingularFixedPoint(EpmError):
    """A rank-deficient state was supplied where a full-rank one is required."""


class NonUniqueFixedPoint(EpmError):
    """The one-cycle map has a degenerate unit eigenvalue; no unique steady state."""


class NotCompletelyPositive(EpmError):
    """The Choi matrix has a negative eigenvalue beyond numerical tolerance."""


class NotTracePreserving(EpmError):
    """A map that should preserve the trace does not."""


class NotAFixedPoint(EpmError):
    """The supplied state is not left invariant by the forward channel."""


class InfiniteBeta(EpmError):
    """A diagonal population is zero, so the inverse temperature is undefined."""


class DivergentEntropyTerm(EpmError):
    """A probability entering a logarithm is (numerically) zero."""


class NonPhysicalCoherenceRatio(EpmError):
    """1 + p_f(chi)/p_f(thermal) <= 0; the inputs are inconsistent."""


class DivergentRatio(EpmError):
    """A backward joint probability in a ratio is zero."""


class IncompleteData(EpmError):
    """A measurement table is missing rows required by the requested operation."""


class ParseError(EpmError):
    """A config or measurement file is malformed."""
