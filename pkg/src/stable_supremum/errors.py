"""Exception hierarchy. Every class carries a short machine-readable ``code``."""


class SupremumError(Exception):
    code = "E_INTERNAL"


class ValidationError(SupremumError, ValueError):
    code = "E_VALIDATION"


class DomainError(ValidationError):
    code = "E_DOMAIN"


class ParseError(ValidationError):
    code = "E_PARSE"


class HypothesisError(SupremumError):
    """Convergent representation requested for a parameter it does not cover."""

    code = "E_HYPOTHESIS"


class PoleProximityError(SupremumError, ArithmeticError):
    code = "E_POLE"

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NearRationalError(PoleProximityError):
    """A sine denominator of the coefficient products vanished numerically."""

    code = "E_NEAR_RATIONAL"


class SingularityError(SupremumError, ArithmeticError):
    code = "E_SINGULAR"

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class DepthError(SupremumError, IndexError):
    code = "E_DEPTH"


class ResourceError(SupremumError):
    code = "E_RESOURCE"


class StripError(DomainError):
    code = "E_STRIP"
