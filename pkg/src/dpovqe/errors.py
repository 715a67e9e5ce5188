"""Exception hierarchy shared across the package."""


class DpoError(Exception):
    """Base class for every error raised by dpovqe."""


class MalformedCsv(DpoError, ValueError):
    pass


class NonPositivePrice(DpoError, ValueError):
    pass


class MissingCell(DpoError, ValueError):
    pass


class DuplicateCell(DpoError, ValueError):
    pass


class InsufficientHistory(DpoError, ValueError):
    pass


class DimensionMismatch(DpoError, ValueError):
    pass


class IndexOutOfRange(DpoError, IndexError):
    pass


class LengthMismatch(DpoError, ValueError):
    pass


class ZeroRisk(DpoError, ArithmeticError):
    """The trajectory carries no risk, so its Sharpe ratio is undefined."""


class DegenerateBlock(DpoError, ValueError):
    pass


class TooFewTimeSteps(DpoError, ValueError):
    pass


class DisconnectedMap(DpoError, ValueError):
    pass


class ParamCountMismatch(DpoError, ValueError):
    pass


class QubitCapExceeded(DpoError, ValueError):
    def __init__(self, n_qubits, cap):
        super().__init__(f"qubit cap exceeded: {n_qubits} qubits requested, simulator cap is {cap}")
        self.n_qubits = n_qubits
        self.cap = cap


class PopulationTooSmall(DpoError, ValueError):
    pass


class TooLarge(DpoError, ValueError):
    pass


class ConfigError(DpoError, ValueError):
    """Invalid experiment configuration."""
