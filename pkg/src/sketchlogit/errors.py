"""Exception hierarchy.

Errors fall into three families that the CLI maps to exit codes:
bad input (2), a full-data baseline whose MLE does not exist (3), and
numerical breakdown inside a factorization or solve (4).
"""


class SketchLogitError(Exception):
    """Base class for all package errors."""


class InputError(SketchLogitError, ValueError):
    """Invalid arguments, shapes, or data files."""


class DimensionMismatch(InputError):
    pass


class InvalidRange(InputError):
    pass


class MissingScores(InputError):
    pass


class DistributionMismatch(InputError):
    pass


class EmptyPlan(InputError):
    pass


class ZeroProbabilityConflict(InputError):
    pass


class ParseError(InputError):
    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class LabelError(InputError):
    pass


class EmptyDataset(InputError):
    pass


class ConstantColumn(InputError):
    pass


class NumericalError(SketchLogitError, ArithmeticError):
    """A factorization or linear solve broke down."""


class RankDeficient(NumericalError):
    pass


class SingularHessian(NumericalError):
    pass


class BaselineDiverged(SketchLogitError):
    """The full-data MLE does not exist or the solver failed to reach it."""


# Name used by the Monte Carlo verifiers.
FullFitDiverged = BaselineDiverged
