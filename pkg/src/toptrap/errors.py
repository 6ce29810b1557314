"""Exception types shared across the toolkit."""


class ToptrapError(Exception):
    """Base class for all toolkit errors."""


class ConfigParseError(ToptrapError):
    """Configuration document is missing, malformed, or has bad values."""


class SchemaError(ToptrapError):
    """A dataset file does not match its documented column schema."""


class QuadratureNotConverged(ToptrapError):
    """Successive phase-grid refinements did not reach the requested tolerance."""


class FitDidNotConverge(ToptrapError):
    """Iterative least-squares did not converge within the iteration budget."""


class SingularNormalMatrix(ToptrapError):
    """The (damped) normal matrix of a fit is singular."""


class IllConditioned(ToptrapError):
    """Linear design matrix condition number exceeds the safe threshold."""


class FlatSpectrum(ToptrapError):
    """Spectrum shows no dip above the noise; nothing to fit."""


class InsufficientPhaseCoverage(ToptrapError):
    """Oscillation samples do not constrain the sin/cos amplitudes."""


class DegenerateConfinement(ToptrapError):
    """Both gradients vanish; the transverse potential has no minimum."""


class DisturbanceTooLarge(ToptrapError):
    """Polarization disturbance outside the first-order compensation range."""


class NonlinearRegime(ToptrapError):
    """Loss is not linear in impurity at the probed points."""


class StepUnderflow(ToptrapError):
    """Adaptive integrator step size shrank below the representable minimum."""


class IntegratorStepFailure(ToptrapError):
    """Pulse integration failed to meet tolerance at the minimum step size."""
