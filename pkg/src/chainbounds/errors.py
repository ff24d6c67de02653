"""Exception types shared across the package."""


class InvalidConfigError(ValueError):
    """A parameter or configuration value violates a documented constraint."""


class BudgetExceededError(RuntimeError):
    """An exhaustive operation was asked to cover more items than its budget allows."""
