"""Exception hierarchy shared by the rnads modules."""


class RNAdSError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(RNAdSError, ValueError):
    """Argument outside the domain of a background function (e.g. s <= s0)."""


class NoHorizon(RNAdSError):
    """The metric potential has no positive root."""


class MeshError(RNAdSError, ValueError):
    """Unsupported mesh kind, resolution or field/mesh mismatch."""


class PoleRegularityError(MeshError):
    """An axisymmetric field has nonzero slope at a pole of the sphere."""


class GeometryError(RNAdSError):
    """The hypersurface geometry cannot be evaluated (horizon crossing, NaN)."""


class FlowError(RNAdSError):
    """Base class for flow aborts; carries the last good state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class MeanCurvatureCollapse(FlowError):
    """min H <= 0 somewhere on the evolving surface."""


class StarShapeLoss(FlowError):
    """The support function became nonpositive."""


class StiffnessError(FlowError):
    """The admissible time step dropped below dt_min."""


class ExtrapolationError(RNAdSError):
    """Richardson extrapolation of a limit at infinity did not converge."""


class ProfileError(RNAdSError, ValueError):
    """Invalid graph profile (nonpositive metric coefficient, bad samples)."""


class ConfigError(RNAdSError, ValueError):
    """Malformed or inconsistent run configuration."""
