"""Exception hierarchy shared by every module."""


class QPurifyError(Exception):
    """Base class for all library errors."""


class ShapeError(QPurifyError, ValueError):
    pass


class DomainError(QPurifyError, ValueError):
    pass


class SizeLimitError(QPurifyError):
    pass


class ValidationError(QPurifyError, ValueError):
    pass


class DegenerateSupportError(QPurifyError):
    pass


class UnsupportedDegeneracyError(QPurifyError):
    pass


class UnattainableError(QPurifyError):
    pass


class ParseError(QPurifyError, ValueError):
    pass
