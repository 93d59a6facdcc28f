"""Exception types raised across the package."""


class FbstabError(Exception):
    """Base class for all domain errors."""


class NonPositiveProfile(FbstabError):
    pass


class NotPeriodic(FbstabError):
    pass


class EndpointConditionViolated(FbstabError):
    def __init__(self, endpoint: str, derivative: int, value: float):
        self.endpoint = endpoint
        self.derivative = derivative
        self.value = value
        super().__init__(
            f"derivative {derivative} at {endpoint} is {value:.3e}, expected 0"
        )


class SolverDiverged(FbstabError):
    pass


class GridTooSmall(FbstabError):
    pass


class StepCountTooSmall(FbstabError):
    pass


class NoHitDetected(FbstabError):
    pass


class UndefinedAtZero(FbstabError):
    pass


class NotAZero(FbstabError):
    pass


class CutoffInfeasible(FbstabError):
    pass


class NotInjective(FbstabError):
    def __init__(self, value: float):
        self.value = value
        super().__init__(f"|DPhi_s - I| reached {value:.4f} >= 1")


class NotCritical(FbstabError):
    def __init__(self, residual: float, threshold: float):
        self.residual = residual
        self.threshold = threshold
        super().__init__(
            f"criticality residual {residual:.3e} exceeds threshold {threshold:.3e}"
        )


class QminViolated(FbstabError):
    pass


class EpsilonTooLarge(FbstabError):
    pass


class TooFewSamples(FbstabError):
    pass


class NotCoercive(FbstabError):
    pass


class ConfigInvalid(FbstabError):
    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason
        super().__init__(f"{field}: {reason}")
