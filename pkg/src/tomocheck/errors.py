"""Exception types shared across the package."""


class TomocheckError(Exception):
    """Base class for all package-specific errors."""


class StateSpecError(TomocheckError):
    """A state specification violates its family invariants."""


class NegativePhotonNumber(StateSpecError):
    """Fock index must be a non-negative integer."""


class WeightSumMismatch(StateSpecError):
    """Mixture weights must be positive and sum to one."""


class EmptySuperposition(StateSpecError):
    """A Fock superposition needs at least one non-zero coefficient."""


class NoClosedForm(TomocheckError):
    """The state family has no attached analytic moments."""


class UnnormalizedState(TomocheckError):
    """Wavefunction norm differs from one beyond tolerance."""


class GridError(TomocheckError):
    """Invalid grid or grid-dependent request."""


class GridTooCoarse(GridError):
    """A tomogram row missed unit mass badly enough to signal aliasing."""


class GridMismatch(GridError):
    """Two gridded objects disagree on axes or angle availability."""


class ThetaNotOnGrid(GridError):
    """Requested angle is not a stored row and interpolation is disabled."""


class TailMass(TomocheckError):
    """Estimated second-moment mass outside the grid exceeds tolerance."""


class UnsupportedTwoModeFamily(TomocheckError):
    """Two-mode specification outside product / separable-mixture / TMSV."""


class TruncationLoss(TomocheckError):
    """Represented state loses trace under the requested truncation."""


class InsufficientAngles(TomocheckError):
    """Density reconstruction needs at least 32 angle rows on [0, pi)."""


class NonConvergentEta(TomocheckError):
    """Kernel tail estimate beyond the eta cutoff is above tolerance."""


class EmptyBatch(TomocheckError):
    """Sampling requires at least one draw."""


class InsufficientSamples(TomocheckError):
    """Moment estimation requires at least two samples."""


class NotStochastic(TomocheckError):
    """Probability vector or stochastic-matrix column fails its sum rule."""


class DimensionMismatch(TomocheckError):
    """Incompatible shapes between probability vector and map."""


class NonFactorizedKernel(TomocheckError):
    """Two-mode portraits require a factorized pair of single-mode kernels."""
