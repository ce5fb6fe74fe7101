"""Exception types raised by the solver, simulator and CLI."""


class MFLQRError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(MFLQRError, ValueError):
    pass


class NotPSD(MFLQRError, ValueError):
    pass


class SingularInnerMatrix(MFLQRError, ArithmeticError):
    """B^T M B + R is numerically singular (R not positive definite)."""


class NotConverged(MFLQRError, ArithmeticError):
    def __init__(self, iterations, residual):
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"Riccati iteration did not converge after {iterations} iterations "
            f"(last residual {residual:.3e})"
        )


class SingularGain(MFLQRError, ArithmeticError):
    def __init__(self, which, t, rcond):
        self.which = which
        self.t = t
        self.rcond = rcond
        super().__init__(f"gain {which} at t={t} is not invertible (rcond={rcond:.3e})")


class LeaderlessMode(MFLQRError, RuntimeError):
    """The leader control channel does not exist for a leaderless model."""


class Diverged(MFLQRError, ArithmeticError):
    def __init__(self, t, magnitude):
        self.t = t
        self.magnitude = magnitude
        super().__init__(f"simulation diverged at t={t} (|state|={magnitude:.3e})")


class TooLarge(MFLQRError, ValueError):
    pass


class ConfigError(MFLQRError, ValueError):
    def __init__(self, pointer, message):
        self.pointer = pointer
        self.message = message
        super().__init__(f"{pointer or '/'}: {message}")
