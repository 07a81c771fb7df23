from typing import List, Optional, TypedDict

from minimasmith.errors import ConfigError


class RegOptions(TypedDict):
    """
    Options of the trace-norm surrogate regularizer.

    * ``alpha`` - lookahead step of the shifted evaluation, > 0.
    * ``beta`` - regularization weight, >= 0; 0 disables the regularizer.
    * ``m`` - number of sub-batches each mini-batch is split into.
    * ``activate_after_epoch`` - first epoch with regularized updates;
      ``None`` means the first learning-rate milestone.
    """

    alpha: float
    beta: float
    m: int
    activate_after_epoch: Optional[int]


class TrainSchedule(TypedDict):
    """
    SGD schedule. ``milestones`` defaults to 50% and 75% of ``epochs``; the
    learning rate is multiplied by ``lr_decay`` at each milestone.
    """

    epochs: int
    lr: float
    batch_size: int
    momentum: float
    nesterov: bool
    milestones: Optional[List[int]]
    lr_decay: float
    weight_decay: float
    label_smoothing: float
    input_jitter: float


default_reg_options: RegOptions = RegOptions(
    alpha=1e-4, beta=0.0, m=8, activate_after_epoch=None
)

default_schedule: TrainSchedule = TrainSchedule(
    epochs=40,
    lr=0.1,
    batch_size=64,
    momentum=0.9,
    nesterov=True,
    milestones=None,
    lr_decay=0.1,
    weight_decay=0.0,
    label_smoothing=0.1,
    input_jitter=0.0,
)

_MAX_LABEL_SMOOTHING = 0.5


def _train_schedule_dict(schedule: Optional[TrainSchedule]) -> dict:
    opt = {
        attr: (schedule or {}).get(attr, default_schedule[attr])
        for attr in TrainSchedule.__annotations__
    }

    if opt["epochs"] < 1:
        raise ConfigError("epochs must be at least 1", option="epochs")
    if not opt["lr"] > 0.0:
        raise ConfigError("lr must be positive", option="lr")
    if opt["batch_size"] < 1:
        raise ConfigError("batch_size must be at least 1", option="batch_size")
    if not 0.0 <= opt["momentum"] < 1.0:
        raise ConfigError("momentum must be in [0, 1)", option="momentum")
    if not 0.0 < opt["lr_decay"] <= 1.0:
        raise ConfigError("lr_decay must be in (0, 1]", option="lr_decay")
    if opt["weight_decay"] < 0.0:
        raise ConfigError("weight_decay must be non-negative", option="weight_decay")
    if not 0.0 <= opt["label_smoothing"] <= _MAX_LABEL_SMOOTHING:
        raise ConfigError(
            f"label_smoothing must be in [0, {_MAX_LABEL_SMOOTHING}]",
            option="label_smoothing",
        )
    if opt["input_jitter"] < 0.0:
        raise ConfigError("input_jitter must be non-negative", option="input_jitter")

    if opt["milestones"] is None:
        opt["milestones"] = sorted({opt["epochs"] // 2, (3 * opt["epochs"]) // 4} - {0})
    else:
        opt["milestones"] = sorted(int(m) for m in opt["milestones"])

    return opt


def _reg_options_dict(options: Optional[RegOptions], schedule: Optional[dict] = None) -> dict:
    opt = {
        attr: (options or {}).get(attr, default_reg_options[attr])
        for attr in RegOptions.__annotations__
    }

    if opt["alpha"] < 0.0:
        raise ConfigError("alpha must be non-negative", option="alpha")
    if opt["beta"] < 0.0:
        raise ConfigError("beta must be non-negative", option="beta")
    if opt["m"] < 1:
        raise ConfigError("m must be at least 1", option="m")

    if opt["activate_after_epoch"] is None:
        milestones = (schedule or {}).get("milestones") or [0]
        opt["activate_after_epoch"] = milestones[0]

    return opt
