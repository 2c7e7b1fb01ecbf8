"""Exception types shared across the package."""


class ParameterLoadError(KeyError):
    """A required key or block is missing from a parameter document."""


class ParameterValidationError(ValueError):
    """A parameter value violates the model invariants."""


class NumericalError(RuntimeError):
    """A quadrature or 1-D search failed to reach its tolerance.

    Carries whatever partial state is useful for diagnosis (achieved
    estimate, error bound, bracket) in ``state``.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = dict(state or {})


class BudgetError(RuntimeError):
    """A rejection-sampling loop exhausted its attempt budget."""

    def __init__(self, message, acceptance_rate=0.0, attempts=0):
        super().__init__(message)
        self.acceptance_rate = acceptance_rate
        self.attempts = attempts
