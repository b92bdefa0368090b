"""Exception types shared across the toolkit."""


class AddcombError(Exception):
    """Base class for all toolkit errors."""


class InvalidArgument(AddcombError, ValueError):
    pass


class GroupMismatch(InvalidArgument):
    pass


class PreconditionViolation(AddcombError, ValueError):
    pass


class ResourceLimit(AddcombError, RuntimeError):
    """A configured cost cap would be exceeded."""


class NumericalAnomaly(AddcombError, RuntimeError):
    """Something a proven statement guarantees did not happen."""
