from minimasmith.errors import MinimaSmithError


class SingularGram(MinimaSmithError):
    """
    Raised when a sampled Gram matrix has an eigenvalue at or below the floor,
    i.e. duplicated or vanishing per-sample gradients.
    """

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.eigenvalue = kwargs.get("eigenvalue")
        self.floor = kwargs.get("floor")
        self.trial = kwargs.get("trial")


class SingularFisher(MinimaSmithError):
    """Raised when the exact Fisher matrix is not full rank above the eigenvalue floor"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.eigenvalue = kwargs.get("eigenvalue")
        self.floor = kwargs.get("floor")


class CalibrationError(MinimaSmithError):
    """Raised when no temperature brings the mean peak probability to the target"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.target = kwargs.get("target")
        self.attainable = kwargs.get("attainable")
