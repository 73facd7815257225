"""Exception types shared across the kernel."""


class PrismalError(Exception):
    pass


class DenominatorBudgetExceeded(PrismalError):
    def __init__(self, shift, budget):
        super().__init__(f"denominator shift {shift} exceeds budget V={budget}")
        self.shift = shift
        self.budget = budget


class InsufficientPrecision(PrismalError):
    """Raised when a decision cannot be certified at the working precision.

    `needed_N` / `needed_V` carry the smallest settings known to suffice,
    when the caller can compute them.
    """

    def __init__(self, message, needed_N=None, needed_V=None):
        super().__init__(message)
        self.needed_N = needed_N
        self.needed_V = needed_V


class TermBudgetExceeded(PrismalError):
    pass


class NonInvertibleImage(PrismalError):
    pass


class DepthExceeded(PrismalError):
    pass


class IncompatibleDeltas(PrismalError):
    pass


class IntegralityFailed(PrismalError):
    pass


class NotIntegrable(PrismalError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class NotNilpotent(PrismalError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class CocycleFailed(PrismalError):
    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class WindowTooSmall(PrismalError):
    def __init__(self, message, minimal=None):
        super().__init__(message)
        self.minimal = minimal


class BasisExpansionFailed(PrismalError):
    pass


class ParseError(PrismalError):
    def __init__(self, message, line, column):
        super().__init__(f"{message} at line {line}, column {column}")
        self.line = line
        self.column = column


class UnknownVariable(PrismalError):
    pass
