"""Exception hierarchy shared by every subpackage."""


class PandoraError(Exception):
    """Base class for library errors."""


class ValidationError(PandoraError, ValueError):
    """Malformed instance, constraint, matroid or parameter."""


class InfeasibleInstanceError(PandoraError):
    """No feasible selection exists for some positive-probability scenario."""


class BudgetError(PandoraError):
    """A size cap of an exhaustive procedure would be exceeded."""


class SolverStalledError(PandoraError):
    """The simplex solver hit its pivot cap or the cutting-plane loop did not converge."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class LPIntegrityError(PandoraError):
    """An LP solution violates a property a rounding step relies on."""
