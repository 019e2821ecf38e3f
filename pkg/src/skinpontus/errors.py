"""Exception hierarchy shared by all modules."""


class SkinPontusError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(SkinPontusError, ValueError):
    """Operands have incompatible or invalid shapes."""


class ContractError(SkinPontusError, ValueError):
    """An input violates a documented precondition (hermiticity, normalization, ...)."""


class ConvergenceError(SkinPontusError, RuntimeError):
    """An iterative eigensolver failed to converge."""

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class StiffnessError(SkinPontusError, RuntimeError):
    """The adaptive integrator needed a step below its minimum step size."""

    def __init__(self, message, time=None, step=None):
        super().__init__(message)
        self.time = time
        self.step = step


class ExceptionalPointError(SkinPontusError, RuntimeError):
    """The spectrum has near-degenerate eigenvalues; spectral propagation is unsafe."""


class NonUniqueSteadyStateError(SkinPontusError, RuntimeError):
    """The zero eigenvalue of the generator is not simple."""


class PositivityError(SkinPontusError, RuntimeError):
    """A state that must be positive semidefinite has a negative eigenvalue."""


class HorizonError(SkinPontusError, RuntimeError):
    """The distance to equilibrium did not drop below threshold before the horizon."""

    def __init__(self, message, final_distance=None):
        super().__init__(message)
        self.final_distance = final_distance


class NotRelaxedError(SkinPontusError, ValueError):
    """A distance series never settles below the threshold."""


class UndefinedWeightError(SkinPontusError, ValueError):
    """Edge weight requested for an all-zero mode."""
