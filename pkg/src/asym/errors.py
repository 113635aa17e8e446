"""Exception hierarchy shared by every module."""


class AsymError(Exception):
    """Base class for all errors raised by this package."""


class InvalidShape(AsymError):
    pass


class DegenerateShape(AsymError):
    """A shape collapsed to a single point (zero scale)."""


class ShapeMismatch(AsymError):
    pass


class NotAReflection(AsymError):
    """An orthogonal transform with determinant +1 was given where a reflection is required."""


class InvalidParameter(AsymError):
    pass


class UnbalancedSplit(AsymError):
    """The median split did not put the same number of points on each side."""


class UndefinedCorrelation(AsymError):
    pass


class ImageMismatch(AsymError):
    pass


class EmptyRegion(AsymError):
    pass


class DecodeError(AsymError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class TooFewPoints(AsymError):
    pass


class DegenerateConfiguration(AsymError):
    pass


class SingularHomography(AsymError):
    pass


class InvalidInput(AsymError):
    pass


class ParseError(AsymError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DegenerateAlignment(UserWarning):
    """Cross-covariance of the two shapes vanished; identity was used instead."""
