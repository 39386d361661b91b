"""Exception taxonomy shared across the package."""


class LentParticleError(Exception):
    """Base class for everything raised deliberately by this package."""


class InvalidInput(LentParticleError, ValueError):
    """Arguments outside an operation's stated domain."""


class PreconditionError(InvalidInput):
    """A structural precondition was violated (duplicate atom time, wrong dimension, ...)."""


class NumericError(LentParticleError, RuntimeError):
    """A numeric computation could not be completed reliably."""


class QuadratureError(NumericError):
    """Adaptive quadrature failed to converge; carries the integrator's diagnostic."""


class SizeError(LentParticleError):
    """A combinatorial enumeration would exceed the configured term budget."""


class ConfigError(LentParticleError):
    """Config file rejected; `errors` lists every problem with its line number."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
