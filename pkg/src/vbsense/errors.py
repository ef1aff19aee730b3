"""Exception types shared across the toolkit."""


class VBSenseError(Exception):
    """Base class for all toolkit errors."""


# spin model
class DegenerateLevels(VBSenseError):
    pass


class BelowZeroFieldSplitting(VBSenseError, ValueError):
    pass


# spectra
class ContrastOverflow(VBSenseError, ValueError):
    pass


# fitting
class FitError(VBSenseError):
    pass


class SingularJacobian(FitError):
    pass


class NotConverged(FitError):
    """Iteration cap reached. The last iterate is kept on ``.result``."""

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class DimensionMismatch(FitError, ValueError):
    pass


class TooFewDips(FitError):
    pass


# pulsed dynamics
class StepTooLarge(VBSenseError, ValueError):
    pass


class NoPolarization(VBSenseError):
    pass


class MalformedSequence(VBSenseError, ValueError):
    pass


class SequenceSyntaxError(VBSenseError, SyntaxError):
    """Parse failure in a pulse-sequence text, with 1-based line/column."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class UnknownUnit(SequenceSyntaxError):
    pass


class MultipleSweepPlaceholders(SequenceSyntaxError):
    pass


# ion range
class EnergyOutOfRange(VBSenseError, ValueError):
    pass


class EmptyHistogram(VBSenseError, ValueError):
    pass


# plasmonics
class QuadratureNotConverged(VBSenseError):
    pass


# cli / io
class ConfigError(VBSenseError, ValueError):
    pass


class TraceFormatError(VBSenseError, ValueError):
    pass
