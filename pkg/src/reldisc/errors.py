class InvalidInputError(ValueError):
    """Arguments violate an operation's preconditions."""


class GuardError(InvalidInputError):
    """An exact computation was refused because its cost exceeds a guard."""

    def __init__(self, message: str, cost: float | None = None):
        super().__init__(message)
        self.cost = cost


class CertifierError(RuntimeError):
    """Internal inconsistency inside the constructive pipeline."""


class DegenerateStage(CertifierError):
    """A pipeline stage produced nothing usable; the fallback may take over."""
