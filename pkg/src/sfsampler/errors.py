"""Exception types shared across the package."""


class ConfigError(Exception):
    """A config file is missing, malformed, or incomplete."""


class UnknownTargetError(Exception):
    """A config names a target kind the registry does not know."""


class UnsupportedTargetError(ValueError):
    """An operation needs structure the target does not carry.

    Typical cases: closed-form drift on a non-mixture target, regularizing
    a relative (potential-form) density ratio, or ground-truth sampling
    when no sampler is attached.
    """


class DriftSingularityError(RuntimeError):
    """The drift denominator vanished.

    Every Monte-Carlo probe landed where f is zero, so the ratio estimate
    is undefined. Carries the evaluation point and stream coordinates so
    the failing particle and step can be identified.
    """

    def __init__(self, message, *, x=None, t=None, step_index=None, particle_index=None):
        super().__init__(message)
        self.x = x
        self.t = t
        self.step_index = step_index
        self.particle_index = particle_index


class NonFiniteStateError(RuntimeError):
    """A particle's state stopped being finite mid-run."""

    def __init__(self, message, *, particle_index=None, step_index=None):
        super().__init__(message)
        self.particle_index = particle_index
        self.step_index = step_index
