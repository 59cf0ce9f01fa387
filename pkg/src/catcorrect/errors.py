"""Exception hierarchy shared by every module."""


class CatCorrectError(Exception):
    """Base class for all library errors."""


class CutoffError(CatCorrectError):
    """Fock truncation too small for the requested state."""

    def __init__(self, message, required_cutoff=None):
        super().__init__(message)
        self.required_cutoff = required_cutoff


class DegenerateStateError(CatCorrectError):
    """A construction or operation produced a zero vector."""


class ParameterError(CatCorrectError):
    """Invalid argument combination (odd K, bad rail index, ...)."""


class CoverageError(CatCorrectError):
    """Heterodyne outcome region misses too much probability."""

    def __init__(self, message, required_radius=None):
        super().__init__(message)
        self.required_radius = required_radius


class ImpossibleOutcomeError(CatCorrectError):
    """Projection onto a subspace with zero probability."""


class UndefinedPhaseError(CatCorrectError):
    """Phase of the origin requested."""


class ConfigError(CatCorrectError):
    """Experiment configuration failed to parse or validate."""
