from minimasmith.errors import MinimaSmithError


class FormatError(MinimaSmithError):
    """Raised when an IDX file has a wrong magic number or is truncated"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.offset = kwargs.get("offset")
        self.path = kwargs.get("path")


class ScenarioError(MinimaSmithError):
    """Raised when every run at a scenario level failed to converge"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.level = kwargs.get("level")
