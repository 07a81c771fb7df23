from minimasmith.errors import MinimaSmithError


class IndivisibleBatch(MinimaSmithError):
    """Raised when a batch cannot be split into M equal sub-batches"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.batch_size = kwargs.get("batch_size")
        self.m = kwargs.get("m")


class DivergenceError(MinimaSmithError):
    """Raised when the training loss blows up or stops being finite"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args)
        self.epoch = kwargs.get("epoch")
        self.loss = kwargs.get("loss")
