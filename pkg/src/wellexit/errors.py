"""Exception types shared across the package."""


class WellexitError(Exception):
    """Base class for all package-specific errors."""


class NotOnBoundary(WellexitError):
    """Queried point is farther than boundary_eps from the domain boundary."""


class NotTangentiallyCritical(WellexitError):
    """Tangential Hessian requested at a point that is not a critical point
    of the boundary restriction of the potential."""


class GridTooCoarse(WellexitError):
    """Grid has fewer than 3 interior nodes along some axis."""


class SeedAboveLevel(WellexitError):
    """Flood-fill seed does not satisfy f(seed) < level."""


class SeedEscapedDomain(WellexitError):
    """A saddle descent seed left the domain; separation is indeterminate."""


class MaxStepsExceeded(WellexitError):
    """Gradient-flow integration hit its step cap without converging or exiting."""


class RegimeUnsupported(WellexitError):
    """No exit-law theorem's hypotheses hold for the requested configuration.

    Carries the per-regime diagnostics explaining what failed.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class StartOutsideDomain(WellexitError):
    """Simulation start point is not inside the domain."""


class OverlappingRegions(WellexitError):
    """Histogram boundary regions are not pairwise disjoint."""


class AllCensored(WellexitError):
    """Every Monte Carlo path was censored; no exit statistics exist."""


class ZeroCount(WellexitError):
    """An empirical probability is exactly zero; only a one-sided bound exists."""


class SolverDiverged(WellexitError):
    """Linear solve failed to reach the residual target within the iteration cap."""


class ConvergenceFailure(WellexitError):
    """Eigenvalue iteration failed to converge within the iteration cap."""


class EmptySet(WellexitError):
    """An operation received an empty node set."""


class LineSearchStalled(WellexitError):
    """Backtracking line search could not find a decreasing step."""


class MisalignedRegions(WellexitError):
    """Histogram regions cannot be matched one-to-one with theory support points."""


class ConfigError(WellexitError):
    """Experiment configuration is invalid; message carries field diagnostics."""
