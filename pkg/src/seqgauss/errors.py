"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates a documented precondition."""


class NotPSDError(ValueError):
    """A matrix required to be positive semidefinite is not, beyond tolerance."""
