"""Exception types shared across the package."""


class TorsionLabError(Exception):
    """Base class for all package errors."""


class InvalidComplexError(TorsionLabError):
    """Malformed graded complex: bad shapes, non-SPD gram, or d*d != 0."""


class DegreeError(TorsionLabError, IndexError):
    """Requested degree outside [0, n]."""


class AmbiguousSpectrumError(TorsionLabError):
    """An eigenvalue fell inside the kernel-cutoff ambiguity band.

    Carries the offending spectrum for diagnosis.
    """

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class DegenerateReferenceError(TorsionLabError):
    """Reference classes not independent in cohomology."""


class MorseComplexError(TorsionLabError):
    """Morse data does not assemble to a complex (d*d != 0)."""


class ResolutionError(TorsionLabError):
    """Requested deformation exceeds the precision guard for the resolution.

    Carries ``suggested_n``, the smallest grid size adequate for the
    requested deformation parameter (when one exists).
    """

    def __init__(self, message, suggested_n=None):
        super().__init__(message)
        self.suggested_n = suggested_n


class RegularizationError(TorsionLabError):
    """The two zeta-determinant estimators disagree beyond tolerance."""


class DegenerateMapError(TorsionLabError):
    """Comparison map to the Morse complex is numerically singular."""


class FitError(TorsionLabError):
    """Least-squares design is unusable (too narrow, duplicates, too few rows)."""


class InputError(TorsionLabError):
    """Bad user-supplied file or parameter (CLI exit code 4)."""
