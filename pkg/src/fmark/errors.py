"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input violates a documented precondition of an operation."""


class SchemaError(ValueError):
    """A file does not conform to one of the documented CSV schemas."""
