from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from minimasmith.errors import ConfigError, ShapeError


@dataclass(frozen=True)
class BoundInputs:
    """
    Inputs of the PAC-Bayes generalization bound.

    :param n: training set size N, at least 2.
    :param w: parameter count W.
    :param volume: basin volume V > 0.
    :param delta: confidence parameter in (0, 1].
    :param l0: training loss at the minimum, >= 0.
    :param gamma: log-determinant of the Fisher, or its rescaled estimate.
    :param expected_train_loss: plug-in for the posterior-expected training
        loss; defaults to ``l0``.
    """

    n: int
    w: int
    volume: float = 1.0
    delta: float = 0.05
    l0: float = 0.0
    gamma: float = 0.0
    expected_train_loss: Optional[float] = None

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ConfigError(f"the bound needs N >= 2, got {self.n}", option="n")
        if self.w < 1:
            raise ConfigError(f"W must be positive, got {self.w}", option="w")
        if not self.volume > 0.0:
            raise ConfigError(f"V must be positive, got {self.volume}", option="volume")
        if not 0.0 < self.delta <= 1.0:
            raise ConfigError(f"delta must be in (0, 1], got {self.delta}", option="delta")
        if not self.l0 >= 0.0:
            raise ConfigError(f"L0 must be non-negative, got {self.l0}", option="l0")
        if not np.isfinite(self.gamma):
            raise ConfigError("gamma must be finite", option="gamma")

    @property
    def train_loss_plugin(self) -> float:
        return self.l0 if self.expected_train_loss is None else self.expected_train_loss


@dataclass(frozen=True)
class BoundResult:
    """
    Right-hand side of the bound together with its pieces.

    ``a`` and ``rhs`` are ``inf`` when they exceed the float range; ``log_a``
    and ``log_gap`` (the log of the square-root term) stay finite.
    """

    a: float
    log_a: float
    h: float
    rhs: float
    log_gap: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class QuadraticModel:
    """A loss ``L(w) = l0 + 0.5 (w - w0)^T H (w - w0)`` around a minimum, with basin volume V."""

    hessian: np.ndarray
    l0: float
    volume: float

    def __post_init__(self) -> None:
        hessian = np.atleast_2d(np.asarray(self.hessian, dtype=np.float64))
        if hessian.shape[0] != hessian.shape[1]:
            raise ShapeError("the Hessian must be square", actual=hessian.shape)
        if not np.allclose(hessian, hessian.T):
            raise ConfigError("the Hessian must be symmetric", option="hessian")
        if np.linalg.eigvalsh(hessian)[0] <= 0.0:
            raise ConfigError("the Hessian must be positive definite", option="hessian")
        if not self.volume > 0.0:
            raise ConfigError("V must be positive", option="volume")
        object.__setattr__(self, "hessian", hessian)

    @property
    def dim(self) -> int:
        return self.hessian.shape[0]

    @property
    def logdet(self) -> float:
        return float(np.linalg.slogdet(self.hessian)[1])


@dataclass(frozen=True)
class KLCheckReport:
    """Outcome of comparing the posterior-to-prior KL divergence with the basin height."""

    kl: float
    h: float
    l0: float
    volume: float
    holds: bool

    def to_dict(self) -> dict:
        return asdict(self)
