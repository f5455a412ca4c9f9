"""Exception and warning types shared across the package."""


class SemiclassicalError(Exception):
    """Base class for all package errors."""


class GridTooCoarse(SemiclassicalError):
    pass


class NonNormalizedSymbol(SemiclassicalError):
    pass


class NotCoprime(SemiclassicalError):
    pass


class PhasePrecisionLoss(SemiclassicalError):
    pass


class RegimeMismatch(SemiclassicalError):
    pass


class OverflowGuard(SemiclassicalError):
    pass


class EnergyDriftExceeded(SemiclassicalError):
    pass


class NotHyperbolic(SemiclassicalError):
    pass


class NoConvergence(SemiclassicalError):
    pass


class NotSymplectic(SemiclassicalError):
    pass


class DegenerateDecomposition(SemiclassicalError):
    pass


class StepUnconverged(SemiclassicalError):
    pass


class BoundaryMassLeak(SemiclassicalError):
    pass


class DimensionTooLarge(SemiclassicalError):
    pass


class UnsupportedSymbolForm(SemiclassicalError):
    pass


class PeakNotFound(SemiclassicalError):
    pass


class TooManyPaths(SemiclassicalError):
    pass


class SupportTruncated(SemiclassicalError):
    pass


class ConfigError(SemiclassicalError):
    pass


class TruncationWarning(UserWarning):
    """Emitted when a finite expansion drops non-negligible weight."""


class AdmissibilityWarning(UserWarning):
    """Emitted when an iteration count exceeds the admissible bound."""
