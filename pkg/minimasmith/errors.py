class MinimaSmithError(Exception):
    """Base exception for all errors raised by minimasmith"""


class ConfigError(MinimaSmithError):
    """Raised when an option or input value is outside its documented range"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.option = kwargs.get("option")


class ShapeError(MinimaSmithError):
    """Raised when array dimensions do not match the network spec or each other"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.expected = kwargs.get("expected")
        self.actual = kwargs.get("actual")


class NumericError(MinimaSmithError):
    """Raised when a computation produces non-finite values or fails to converge"""


class SizeError(MinimaSmithError):
    """Raised when a dense exact computation would exceed its size guard"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.size = kwargs.get("size")
        self.limit = kwargs.get("limit")


class EmptyBatch(MinimaSmithError):
    """Raised when an operation that averages over samples gets no samples"""
