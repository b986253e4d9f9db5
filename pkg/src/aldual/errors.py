"""Exception hierarchy shared across the package.

Errors that represent *data* (validation violations, infeasible statuses,
unbounded sentinels) are not exceptions; only contract breaches and
unusable inputs raise.
"""


class AldualError(Exception):
    """Base class for all package errors."""


class DimMismatchError(AldualError, ValueError):
    """Operands have incompatible dimensions."""


class NotSquareError(AldualError, ValueError):
    """A square matrix was required."""


class NotSymmetricError(AldualError, ValueError):
    """A symmetric matrix was required."""


class NotPsdError(AldualError, ValueError):
    """A positive semidefinite matrix was required; carries a witness."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class RationalParseError(AldualError, ValueError):
    """A string is not a valid base-10 ``p/q`` rational."""


class ParseError(AldualError):
    """An instance file failed to parse; carries field/position detail."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class SchemaViolationError(AldualError):
    """An instance file parsed but does not match the schema."""

    def __init__(self, field):
        super().__init__(f"schema violation: {field}")
        self.field = field


class NegativeDeltaError(AldualError, ValueError):
    """A nonnegative level was required."""


class UnsupportedKindError(AldualError, ValueError):
    """The penalty kind does not support the requested operation."""


class UnboundedIntegerVarError(AldualError):
    """An integer variable has no finite implied bound; enumeration refused."""

    def __init__(self, index):
        super().__init__(f"integer variable {index} is unbounded under the linear set")
        self.index = index


class NlpInfeasibleError(AldualError):
    """The continuous relaxation is infeasible."""


class NlpUnboundedError(AldualError):
    """The continuous relaxation is unbounded; multipliers do not exist."""


class InfeasibleDomainError(AldualError):
    """The mixed integer linear set is empty."""


class DeltaZeroError(AldualError):
    """The infimum of the violation over infeasible points is zero."""


class BisectionCapError(AldualError):
    """No certifying weight found below the search cap (indicates a bug)."""


class InternalInvariantError(AldualError):
    """A mathematically mandated identity failed; never expected at runtime."""
