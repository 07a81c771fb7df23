from dataclasses import asdict, dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True, eq=False)
class HessianMatrix:
    """Dense Hessian estimate, exactly symmetric."""

    entries: np.ndarray
    method: str = "central_fd"
    step: float = 1e-4


@dataclass
class IdentityReport:
    """Relative Frobenius residual between the finite-difference Hessian and the weighted Fisher."""

    residual: float
    residual_kl: float
    tol: float
    passed: bool

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class InterlacingReport:
    full_spectrum: List[float]
    sub_spectrum: List[float]
    max_violation: float
    passed: bool = True

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class OrderReport:
    """Surrogate residuals ``|R/alpha - mean ||g_i||^2|`` along a descending alpha grid."""

    alphas: List[float]
    residuals: List[float]
    ratios: List[float] = field(default_factory=list)
    passed: bool = True

    def to_dict(self) -> dict:
        return asdict(self)
