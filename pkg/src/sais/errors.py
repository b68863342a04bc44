"""Exception and warning types shared across the package."""


class SamplerError(Exception):
    """Base class for every error this package raises deliberately."""


class ConfigError(SamplerError):
    """Experiment configuration is malformed or inconsistent."""


class ProposalZeroAtSample(SamplerError):
    """Proposal density vanished at a draw where the target is positive."""


class NonfiniteWeight(SamplerError):
    """Importance weight overflowed or is otherwise not finite."""


class NonfiniteParameter(SamplerError):
    """A proposed parameter update contains nan or inf."""


class IterationDiverged(SamplerError):
    """An adaptation run (or too many replications) left the finite domain."""


class NonpositiveScale(SamplerError):
    """Squared scale parameter must be strictly positive."""


class NonnegativeCurvature(SamplerError):
    """Quadratic surrogate needs strictly negative curvature."""


class InvalidMixtureWeights(SamplerError):
    """Mixture weights must be strictly positive with free weights summing below 1."""


class MissingComponentIndex(SamplerError):
    """Batch sample lacks the component index this update requires."""


class ZeroWeights(SamplerError):
    """All importance weights in the batch are zero."""


class UnboundedDivergenceWarning(RuntimeWarning):
    """Proposal tails look lighter than the target's; the divergence integral may not exist."""
