"""Exception types shared across the package."""


class GgmDiffError(Exception):
    """Base class for all package-specific errors."""


class NonFiniteInput(GgmDiffError):
    """Input array contains NaN or infinite entries."""


class ConstantColumn(GgmDiffError):
    """A data column has zero variance and cannot be standardized."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} is constant (zero variance)")


class DimensionMismatch(GgmDiffError):
    """Operand shapes are incompatible."""


class NotConverged(GgmDiffError):
    """Iterative solver exhausted max_iter without meeting tolerances.

    The partially converged fit is attached as ``.fit`` for diagnostics.
    """

    def __init__(self, message: str, fit=None):
        self.fit = fit
        super().__init__(message)


class NonPsdCost(GgmDiffError):
    """Quadratic cost matrix is not symmetric positive semidefinite."""


class NonPositiveVariance(GgmDiffError):
    """A variance that must be strictly positive came out <= 0."""


class DegenerateResidual(GgmDiffError):
    """Too few residual degrees of freedom to estimate noise."""


class InfeasibleTargets(GgmDiffError):
    """Requested sparsity/difference targets cannot be realized."""


class EmptyInput(GgmDiffError):
    """An operation received an empty collection where data is required."""


class NodeFailure(GgmDiffError):
    """A nodewise pipeline failed at a specific node; chains the cause."""

    def __init__(self, node: int, cause: Exception):
        self.node = node
        super().__init__(f"node {node}: {cause}")


class DataFormatError(GgmDiffError):
    """A data file could not be parsed."""

    def __init__(self, message: str, path=None, line=None):
        self.path = path
        self.line = line
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(message + loc)
