"""Exception types shared across the package."""


class LossCancelError(Exception):
    """Base class for all package-specific errors."""


class DimensionOverflowError(LossCancelError):
    """Requested truncated space exceeds the configured memory bound."""


class LeakageError(LossCancelError):
    """Too much probability mass sits in the top Fock levels.

    Raised instead of silently renormalising, because amplification pushes
    weight towards the truncation boundary and silent clipping corrupts
    exactly the quantities under study.
    """


class DegenerateNormalizationError(LossCancelError):
    """A state's normalisation constant is numerically zero."""


class SpaceMismatchError(LossCancelError):
    """Operands live on different truncated Fock spaces."""


class GainOverflowError(LossCancelError):
    """g**N_max is not representable in double precision."""


class UnphysicalAmplificationError(LossCancelError):
    """Parametric amplification of a squeezed state does not converge."""


class DivergenceError(LossCancelError):
    """A closed-form series does not converge for these parameters."""


class EmptyDecompositionError(LossCancelError):
    """All channel normalisations vanished; nothing to decompose."""


class MissingChannelError(LossCancelError):
    """Estimation requested for channels that were never observed."""


class ConfigError(LossCancelError):
    """Invalid experiment configuration; message carries the field path."""
