from minimasmith.errors import MinimaSmithError


class PremiseError(MinimaSmithError):
    """Raised when the parameters are not at the label-smoothed entropy floor"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.residual_kl = kwargs.get("residual_kl")


class InterlacingViolation(MinimaSmithError):
    """Raised when a principal sub-matrix spectrum fails to interlace the full spectrum"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.index = kwargs.get("index")


class OrderError(MinimaSmithError):
    """Raised when the surrogate residual does not shrink at first order in alpha"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.index = kwargs.get("index")
        self.ratio = kwargs.get("ratio")
