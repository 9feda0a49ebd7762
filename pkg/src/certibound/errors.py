"""Exception hierarchy shared across the toolkit."""


class CertiboundError(Exception):
    """Base class for all toolkit errors."""


class UnknownVariable(CertiboundError):
    pass


class ParseError(CertiboundError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NonConfluentRules(CertiboundError):
    pass


class OrderTooLow(CertiboundError):
    pass


class UncoveredMonomial(CertiboundError):
    pass


class NotChordal(CertiboundError):
    pass


class DimensionMismatch(CertiboundError):
    pass


class MaxIterations(CertiboundError):
    pass


class NumericalFailure(CertiboundError):
    pass


class NonFinite(CertiboundError):
    pass


class SingularXi(CertiboundError):
    def __init__(self, message, words=()):
        super().__init__(message)
        self.words = tuple(words)


class IrrationalBasisChange(CertiboundError):
    pass


class NotHermitian(CertiboundError):
    pass


class UnsupportedConstraintFamily(CertiboundError):
    pass


class NotUnipotent(CertiboundError):
    pass


class NotInterior(CertiboundError):
    pass


class SingularSolve(CertiboundError):
    pass


class BasisMismatch(CertiboundError):
    pass


class TooLarge(CertiboundError):
    pass


class InvalidSpec(CertiboundError):
    pass
