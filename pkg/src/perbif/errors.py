"""Exception hierarchy shared by every module of the package."""


class PerbifError(Exception):
    """Base class for all errors raised by perbif."""


class NumericError(PerbifError, ArithmeticError):
    """Arithmetic failure inside the scalar/jet tower.

    ``context`` accumulates human readable hints (which map, which derivative
    order) as the error propagates outwards.
    """

    def __init__(self, message, context=None):
        super().__init__(message)
        self.message = message
        self.context = list(context or [])

    def with_context(self, note):
        self.context.append(note)
        return self

    def __str__(self):
        if not self.context:
            return self.message
        return f"{self.message} ({'; '.join(self.context)})"


class DivisionByNearZero(NumericError):
    pass


class TanPole(NumericError):
    pass


class UnsupportedInRationalMode(NumericError):
    pass


class ExpansionPointMismatch(NumericError):
    pass


class InsufficientOrder(PerbifError, ValueError):
    pass


# expression layer

class ExprError(PerbifError, ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message, position=None, expected=None):
        self.position = position
        self.expected = expected
        detail = message
        if position is not None:
            detail += f" at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnknownIdentifier(ExprError):
    pass


class ParamIndexOutOfRange(ExprError):
    pass


# systems and solvers

class IndexOutOfRange(PerbifError, IndexError):
    pass


class ClosureDefectExceeded(PerbifError):
    def __init__(self, defect, tol):
        super().__init__(f"orbit does not close: defect {defect} exceeds tolerance {tol}")
        self.defect = defect
        self.tol = tol


class NotAFixedPoint(PerbifError):
    pass


class NoConvergence(PerbifError):
    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


class SingularJacobian(PerbifError):
    pass


class AmbiguousClassification(PerbifError):
    pass


class CriticalPoint(NumericError):
    pass


class WrongArity(PerbifError, ValueError):
    pass


class WrongClass(PerbifError, ValueError):
    pass


class EmptyRegion(PerbifError, ValueError):
    pass
