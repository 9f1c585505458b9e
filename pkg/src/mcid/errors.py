"""Exception hierarchy shared across the package.

Data-contract violations derive from :class:`DataError` (CLI exit code 2),
numerical failures from :class:`NumericError` (CLI exit code 1).
"""


class McidError(Exception):
    """Base class for all package-specific errors."""


class DataError(McidError):
    """Invalid input data or parameters."""


class NumericError(McidError):
    """A numerical routine failed to meet its accuracy contract."""


class EmptyDataset(DataError):
    pass


class MixedCovariateDim(DataError):
    pass


class NonBinaryLabel(DataError):
    pass


class NonFiniteValue(DataError):
    pass


class BadSplitSize(DataError):
    pass


class BadWeight(DataError):
    pass


class EmptyNegativeClass(DataError):
    pass


class Infeasible(DataError):
    """Type-I error constraint cannot be met.

    Unreachable by construction: the sentinel threshold above every score
    always achieves an empirical type-I error of zero.
    """


class DegenerateCovariates(DataError):
    pass


class DimensionMismatch(DataError):
    pass


class DegenerateFold(DataError):
    pass


class QuadratureFailure(NumericError):
    pass


class NoBracketFound(NumericError):
    pass


class RootNotBracketed(NumericError):
    pass


class InnerSolverFailure(NumericError):
    pass


class NonDecreasingObjective(NumericError):
    """Internal invariant breach: an outer iteration increased the objective."""
