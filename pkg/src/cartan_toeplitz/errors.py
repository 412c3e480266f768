"""Exception types raised across the package."""


class CartanError(Exception):
    """Base class for all package errors."""


class SingularMatrix(CartanError, ValueError):
    pass


class NotHermitianPSD(CartanError, ValueError):
    pass


class NotUnitary(CartanError, ValueError):
    pass


class RejectionBudgetExceeded(CartanError, RuntimeError):
    pass


class MultiplicityViolation(CartanError, ArithmeticError):
    """A joint highest-weight kernel did not have dimension one."""


class DimensionMismatch(CartanError, ArithmeticError):
    """A generated component did not reach its predicted dimension."""


class SymbolSyntaxError(CartanError, ValueError):
    def __init__(self, position, expected, text=""):
        self.position = position
        self.expected = expected
        self.text = text
        super().__init__(f"syntax error at position {position}: expected {expected}")


class IndexOutOfRange(CartanError, ValueError):
    def __init__(self, var, index, n):
        self.var = var
        self.index = index
        self.n = n
        super().__init__(f"index {index} of {var} out of range 1..{n}")


class DivisorBelowBound(CartanError, ArithmeticError):
    pass


class BoundExceeded(CartanError, ArithmeticError):
    pass


class GramNotPD(CartanError, ArithmeticError):
    def __init__(self, message, min_eig=None, max_eig=None):
        self.min_eig = min_eig
        self.max_eig = max_eig
        super().__init__(message)


class BasisMismatch(CartanError, ValueError):
    pass
