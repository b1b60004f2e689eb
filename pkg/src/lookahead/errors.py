"""Exception hierarchy shared by the library and the CLI."""


class LookaheadError(Exception):
    """Base class for all library errors."""


class ConfigurationError(LookaheadError, ValueError):
    """Invalid grid, model or experiment configuration."""


class ContractViolation(LookaheadError, ValueError):
    """An operation was called with inputs outside its contract."""


class DomainError(LookaheadError, ValueError):
    """A model parameter lies outside the model's domain."""


class ImpossibleObservationError(LookaheadError, RuntimeError):
    """An observed response has zero predictive probability under the prior."""


class ResourceLimitError(LookaheadError, RuntimeError):
    """An exact computation would exceed its configured size budget."""
