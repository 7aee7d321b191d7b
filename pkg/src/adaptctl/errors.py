"""Exception hierarchy shared by every adaptctl module.

The CLI maps these onto exit codes: ValidationError -> 2,
InfeasibleError -> 3, NumericalError -> 4.
"""


class AdaptctlError(Exception):
    pass


class ValidationError(AdaptctlError, ValueError):
    """Inputs violate a documented precondition."""


class NotHurwitzError(ValidationError):
    def __init__(self, eigenvalue):
        self.eigenvalue = eigenvalue
        super().__init__(
            f"matrix is not Hurwitz: eigenvalue {eigenvalue:.6g} has real part >= 0"
        )


class UnsupportedFamily(ValidationError):
    pass


class InfeasibleError(AdaptctlError):
    """A certificate search or frequency criterion has no solution."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class NumericalError(AdaptctlError, ArithmeticError):
    pass


class IndeterminateLimitError(NumericalError):
    pass


class SimulationDiverged(NumericalError):
    def __init__(self, time):
        self.time = time
        super().__init__(f"simulation diverged (|e| > 1e9 or non-finite) at t = {time:.6g}")
