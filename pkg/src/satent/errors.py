"""Exception types shared across the package."""


class UndefinedFidelityError(ValueError):
    """Fidelity requested for a state with zero heralding probability."""


class DivergenceError(ValueError):
    """A mean diverges for the supplied parameters (e.g. success probability 0)."""


class ResourceLimitError(RuntimeError):
    """A truncated summation would need more terms than the configured budget."""


class InvalidCutoffError(ValueError):
    """Cutoff window too short (or otherwise unusable) for the protocol."""


class StationarySolveError(RuntimeError):
    """The stationary-distribution solve failed; message carries diagnostics."""


class ConfigError(ValueError):
    """Configuration rejected; ``errors`` lists every violation found."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class CutoffConsistencyWarning(UserWarning):
    """Cycle success probability and two-pair probability disagree by >1%."""
