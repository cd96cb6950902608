"""Exception and warning types shared across the package."""


class DyncalError(Exception):
    """Base class for all computational errors raised by dyncal."""


class InputError(DyncalError):
    """Base class for malformed user input (files, configs). CLI exit code 2."""


class DegenerateDesign(DyncalError):
    """Reference design is rank deficient or contains duplicate points."""


class InsufficientReferences(DyncalError):
    """Fewer reference points than the model requires."""


class InvalidCovariance(DyncalError):
    """A covariance matrix is not symmetric positive semidefinite."""


class SingularForecastCovariance(DyncalError):
    """One-step forecast covariance is numerically singular."""


class ShapeError(DyncalError):
    """Array dimensions are inconsistent with the model."""


class NoRealRoot(DyncalError):
    """The observed response lies beyond the parabola's extremum.

    Carries ``vertex`` (the extremum abscissa, scaled units) so callers can
    substitute a censored estimate.
    """

    def __init__(self, message: str, vertex: float | None = None):
        super().__init__(message)
        self.vertex = vertex


class VerticalTangent(DyncalError):
    """Interval denominator vanishes: the estimate sits at the curve's vertex."""


class NoVertex(DyncalError):
    """Quadratic coefficient is zero; the curve has no vertex."""


class VarianceUnavailable(DyncalError):
    """Residual variance cannot be estimated (no residual degrees of freedom)."""


class DegenerateWeights(DyncalError):
    """Every importance-sampling candidate has zero likelihood."""


class InvalidShockSpec(InputError):
    """Shock windows overlap or fall outside the simulated horizon."""


class EmptyCampaign(DyncalError):
    """A campaign summary was requested for zero replications."""


class InputOrderError(InputError):
    """Time indices in an input file are not strictly increasing."""


class ConfigError(InputError):
    """A run configuration file is malformed or fails schema validation."""


class RootOutsideDomain(UserWarning):
    """Both quadratic roots fall outside the calibration domain.

    A warning, not an error: the branch-selected root is still returned and
    the caller may clamp or flag it.
    """
