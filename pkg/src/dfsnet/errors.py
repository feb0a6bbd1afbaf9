"""Exception types shared across the package."""


class DfsnetError(Exception):
    """Base class for all package-specific errors."""


class CoincidentSourceSensor(DfsnetError):
    """A field source sits (numerically) on top of a sensor, where the
    inverse-power amplitude diverges."""


class InvalidPresetParams(DfsnetError):
    """Parameters passed to an array preset are out of range or inconsistent."""


class NoiseSpansFullSpace(DfsnetError):
    """The noise vectors span all of sampling space; no protected probe exists."""


class SignalInNoiseSpace(DfsnetError):
    """The signal vector lies (numerically) inside the insensitive subspace,
    so every protected probe is blind to it."""


class InvalidRatio(DfsnetError):
    """Distance ratio for the two-sensor sphere construction must satisfy
    0 < c <= 1."""


class RejectionStall(DfsnetError):
    """Rejection sampling accepted almost nothing; the truncation region is
    pathological."""


class DimensionTooLarge(DfsnetError):
    """Brute-force Hilbert-space evaluation requested for more qubits than the
    oracle supports."""


class ConfigError(DfsnetError):
    """Scenario configuration failed validation.

    Carries the path of the offending field so CLI diagnostics can point at it.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
