"""custom errors module"""


class OperatorMeansError(Exception):
    """Base class for opmeans exceptions"""

    category = "error"
    """
    Machine-parsable category token, printed first on CLI error lines
    """


class ParseError(OperatorMeansError):
    """Malformed matrix / measure / ensemble JSON or named mean spec"""

    category = "parse-error"


class DomainError(OperatorMeansError):
    """A precondition on the mathematical input was violated"""

    category = "domain-error"


class NotPositiveDefiniteError(DomainError):
    """Exception for matrices rejected by the positive-definiteness test.
    Will hold two variables:

    - `min_eigenvalue`: Smallest eigenvalue of the rejected matrix.

    - `max_eigenvalue`: Largest eigenvalue of the rejected matrix."""

    def __init__(self, min_eigenvalue: float, max_eigenvalue: float, *args: object) -> None:
        super().__init__(*args)
        self.min_eigenvalue: float = min_eigenvalue
        self.max_eigenvalue: float = max_eigenvalue


class AsymmetryError(DomainError):
    """Exception for inputs too far from Hermitian to be repaired by symmetrization"""

    def __init__(self, asymmetry: float, *args: object) -> None:
        super().__init__(*args)
        self.asymmetry: float = asymmetry
        """
        Norm of (X - X*) / 2 relative to the norm of X
        """


class SingularMatrixError(DomainError):
    """Exception for a congruence factor that is not invertible"""


class MeasureError(DomainError):
    """Exception for invalid generator measures (mass, locations, normalization)"""


class DegenerateMeasureError(DomainError):
    """Exception for measures whose Hellinger objective is flat or undefined.

    - `reason`: short tag, one of "zero-barycenter", "endpoint-supported"."""

    category = "degenerate"

    def __init__(self, reason: str, *args: object) -> None:
        super().__init__(*args)
        self.reason: str = reason


class RangeRestrictionError(DomainError):
    """Exception for symmetric means whose generator is not onto (0, inf).

    - `value_range`: the declared (low, high) range of the generator."""

    def __init__(self, value_range: tuple, *args: object) -> None:
        super().__init__(*args)
        self.value_range: tuple = value_range


class EigenSolverError(OperatorMeansError):
    """Exception wrapping a LinAlgError raised by the dense eigensolver"""

    category = "numerical-error"


class NumericalError(OperatorMeansError):
    """Internal consistency failure beyond roundoff"""

    category = "numerical-error"


class VerificationFailure(OperatorMeansError):
    """Exception for a verify suite counterexample.

    - `suite`: suite name.

    - `counterexample`: JSON-serializable dump of the failing inputs."""

    category = "verify-failed"

    def __init__(self, suite: str, counterexample: dict, *args: object) -> None:
        super().__init__(*args)
        self.suite: str = suite
        self.counterexample: dict = counterexample


class QuadratureWarning(UserWarning):
    """Warning for quadrature rules whose node-doubling check failed"""
