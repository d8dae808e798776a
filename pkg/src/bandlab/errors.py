"""Exception types raised across the package."""


class BandlabError(Exception):
    """Base class for all package errors."""


class InputError(BandlabError, ValueError):
    """Invalid argument, dimension mismatch or malformed file."""


class CapacityError(BandlabError):
    """A requested computation exceeds a hard size guard."""


class ConditioningError(BandlabError):
    """A linear solve failed even after ridge escalation."""
