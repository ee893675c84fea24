"""
Error types raised by the kernel library.

Every error carries a short ``code`` that the management commands map onto
exit statuses. Refutations of a decision procedure are not errors: they are
returned as :class:`Refuted` values.
"""
from dataclasses import dataclass, field


class DibiError(Exception):
    """Base class for all library errors."""
    code = 'error'


class VariableError(DibiError):
    code = 'variable'


class InvalidVariable(VariableError):
    code = 'invalid-variable'


class DuplicateVariable(VariableError):
    code = 'duplicate-variable'


class NotAPermutation(VariableError):
    code = 'not-a-permutation'


class NotASubset(VariableError):
    code = 'not-a-subset'


class EndpointMismatch(DibiError):
    code = 'endpoint-mismatch'


class DimensionMismatch(DibiError):
    code = 'dimension-mismatch'


class AssignmentError(DibiError):
    """A value or dimension does not fit the assignment θ."""
    code = 'assignment'


class DefinednessError(DibiError):
    code = 'undefined'


class SeqUndefined(DefinednessError):
    code = 'seq-undefined'


class ParUndefined(DefinednessError):
    code = 'par-undefined'


class OverlapViolation(DefinednessError):
    code = 'overlap-violation'


class EmptyImage(DibiError):
    code = 'empty-image'


class InvalidDistribution(DibiError):
    """Weights are negative or do not sum to one."""
    code = 'invalid-distribution'


class ReassemblyFailed(DibiError):
    code = 'reassembly-failed'


class SingularBlock(DibiError):
    code = 'singular-block'


class DiagramTypeError(DibiError):
    """
    A diagram term is ill-typed.

    Attributes:
        term: The offending subterm.
    """
    code = 'diagram-type'

    def __init__(self, message, term=None):
        super().__init__(message)
        self.term = term


class Unsupported(DibiError):
    """The instance lacks a capability the procedure needs."""
    code = 'unsupported'


class UnsupportedShape(Unsupported):
    code = 'unsupported-shape'


class ShapeError(DibiError):
    code = 'shape'


class BudgetExceeded(DibiError):
    """
    A bounded search ran out of budget.

    Attributes:
        budget: The configured cap.
        spent: Work done before giving up.
    """
    code = 'budget'

    def __init__(self, message, budget=None, spent=None):
        super().__init__(message)
        self.budget = budget
        self.spent = spent


class ParseError(DibiError):
    """
    Concrete syntax could not be parsed.

    Attributes:
        line: 1-based line of the offending token.
        column: 1-based column of the offending token.
        expected: Token kinds that would have been accepted.
    """
    code = 'parse'

    def __init__(self, message, line=1, column=1, expected=()):
        self.line = line
        self.column = column
        self.expected = tuple(sorted(set(expected)))
        where = f"line {line}, column {column}"
        if self.expected:
            message = f"{message} at {where}; expected one of: {', '.join(self.expected)}"
        else:
            message = f"{message} at {where}"
        super().__init__(message)


class KernelFileError(DibiError):
    """
    A kernel file is malformed.

    Attributes:
        path: Location inside the document, e.g. ``/kernels/f/rows/2``.
    """
    code = 'kernel-file'

    def __init__(self, message, path=''):
        super().__init__(f"{path or '/'}: {message}")
        self.path = path


@dataclass(frozen=True)
class Refuted:
    """
    Negative outcome of a decision procedure.

    Attributes:
        reason: Which check failed (e.g. ``completion-dependence``).
        detail: Free-form context for reports.
    """
    reason: str
    detail: dict = field(default_factory=dict, compare=False)

    def __bool__(self):
        return False
