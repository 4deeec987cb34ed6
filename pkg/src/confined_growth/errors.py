"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: InputError -> 3, ResourceError -> 4,
HypothesisNotMet -> 2.
"""


class ConfinedGrowthError(Exception):
    """Base class for all package errors."""


class InputError(ConfinedGrowthError, ValueError):
    """Malformed or out-of-contract input."""


class ValidationError(InputError):
    """A graph description violates a structural invariant."""


class CompletionError(InputError):
    """A graph description leaves (vertex, letter) pairs unresolved."""

    def __init__(self, message, missing=()):
        super().__init__(message)
        self.missing = list(missing)


class UnsupportedBackendError(InputError):
    """Operation requires a finite backend."""


class ResourceError(ConfinedGrowthError, RuntimeError):
    """An enumeration or materialization budget was exceeded."""

    def __init__(self, message, budget=None):
        super().__init__(message)
        self.budget = budget


class SelectionFailure(ConfinedGrowthError):
    """No admissible insertion block exists at some position."""

    def __init__(self, message, position):
        super().__init__(message)
        self.position = position


class StateError(ConfinedGrowthError, RuntimeError):
    """An operation was called before its prerequisites ran."""


class HypothesisNotMet(ConfinedGrowthError):
    """A theorem hypothesis (confinement, tree-ball bound) failed."""
