from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np


@dataclass(frozen=True)
class OptState:
    """
    SGD optimizer state. :func:`minimasmith.regularizer.optimizer.sgd_step`
    returns a new state instead of mutating this one.
    """

    params: np.ndarray
    velocity: np.ndarray
    lr: float
    momentum: float = 0.9
    nesterov: bool = True
    weight_decay: float = 0.0
    epoch: int = 0
    step: int = 0

    @classmethod
    def initial(
        cls,
        params: np.ndarray,
        lr: float,
        momentum: float = 0.9,
        nesterov: bool = True,
        weight_decay: float = 0.0,
    ) -> "OptState":
        params = np.asarray(params, dtype=np.float64)
        return cls(
            params=params.copy(),
            velocity=np.zeros_like(params),
            lr=lr,
            momentum=momentum,
            nesterov=nesterov,
            weight_decay=weight_decay,
        )


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    train_acc: float
    test_err: float
    lr: float
    reg_active: bool
    # wall-clock per step is not reproducible
    step_ms: float = field(default=0.0, compare=False)


@dataclass
class RunRecord:
    """Per-epoch history of one training run."""

    seed: int
    epochs: List[EpochRecord] = field(default_factory=list)

    @property
    def final(self) -> Optional[EpochRecord]:
        return self.epochs[-1] if self.epochs else None

    @property
    def final_train_loss(self) -> float:
        return self.final.train_loss if self.final else float("nan")

    @property
    def final_train_acc(self) -> float:
        return self.final.train_acc if self.final else float("nan")

    @property
    def final_test_err(self) -> float:
        return self.final.test_err if self.final else float("nan")

    @property
    def mean_step_ms(self) -> float:
        return float(np.mean([e.step_ms for e in self.epochs])) if self.epochs else 0.0

    def rows(self) -> List[dict]:
        return [asdict(e) for e in self.epochs]

    def summary(self) -> dict:
        return {
            "seed": self.seed,
            "epochs": len(self.epochs),
            "final_train_loss": self.final_train_loss,
            "final_train_acc": self.final_train_acc,
            "final_test_err": self.final_test_err,
            "mean_step_ms": self.mean_step_ms,
        }


@dataclass(frozen=True)
class SurrogateReport:
    """Trace-surrogate diagnostics of one Gram matrix."""

    geometric_mean: float
    arithmetic_mean: float
    eigen_std: float
    am_gm_slack: float
    spread_slack: float

    def to_dict(self) -> dict:
        return asdict(self)
