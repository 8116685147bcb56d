"""Exception and warning classes shared across the package."""


class TwpaError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(TwpaError, ValueError):
    """Input values violate a documented invariant."""


class NumericalError(TwpaError):
    """A numerical procedure failed (root finding, integration, fitting)."""


# device model
class NoRoot(NumericalError):
    pass


class NonpositiveAlpha(NumericalError):
    pass


class AbovePlasmaFrequency(ValidationError):
    pass


class EmptyTable(ValidationError):
    pass


# coupled-mode engine
class StepSizeUnderflow(NumericalError):
    pass


class NonFiniteState(NumericalError):
    pass


class DegenerateFrequency(ValidationError):
    pass


class SweepCellError(NumericalError):
    """Wraps the failure of one sweep cell together with its coordinates."""

    def __init__(self, frequency, power_dbm, cause):
        self.frequency = frequency
        self.power_dbm = power_dbm
        self.cause = cause
        super().__init__(
            f"cell f_sig={frequency:.6g} Hz, P_sig={power_dbm:.6g} dBm failed: {cause!r}"
        )

    def __reduce__(self):
        return (type(self), (self.frequency, self.power_dbm, self.cause))


# compression
class NoCrossing(NumericalError):
    pass


# calibration
class SingularJacobian(NumericalError):
    pass


class NoConvergence(NumericalError):
    pass


class NegativeGain(NumericalError):
    pass


class DegenerateAbscissa(ValidationError):
    pass


class GridMismatch(ValidationError):
    pass


# reduction
class EmptyOverlap(ValidationError):
    pass


class BadWindow(ValidationError):
    pass


# configuration
class ConfigError(ValidationError):
    pass


class ParseError(ConfigError):
    def __init__(self, message, line=None, column=None):
        self.message = message
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + where)

    def __reduce__(self):
        return (type(self), (self.message, self.line, self.column))


class UnknownKey(ConfigError):
    pass


class UnitError(ConfigError):
    pass


class ContinuumLimitWarning(UserWarning):
    """Phase advance per cell is large enough to question the continuum model."""


class NonMonotonicWarning(UserWarning):
    """Smoothed gain curve crosses the compression threshold more than once."""


class UnphysicalWavevectorWarning(UserWarning):
    pass
