"""Exception taxonomy shared by all modules.

Each class maps to one CLI exit code (see cli.EXIT_CODES).
"""


class ValidationError(ValueError):
    """A parameter or input object violates a documented precondition."""


class ResolutionError(ValidationError):
    """A set or path grid is too coarse for the requested scale."""


class NumericDomainError(ValueError):
    """An evaluation left the numeric domain (NaN input, non-finite envelope)."""


class ResourceError(RuntimeError):
    """A computation would exceed its step/memory budget."""


class InconclusiveError(RuntimeError):
    """A convergence verdict could not be resolved at either bracket.

    Carries the offending diagnostics in ``self.diagnostics``.
    """

    def __init__(self, message, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


class HardAssertionError(AssertionError):
    """A hard statistical assertion inside an experiment failed."""
