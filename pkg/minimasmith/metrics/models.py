import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional

import numpy as np


@dataclass(frozen=True, eq=False)
class GramMatrix:
    """
    Gram matrix ``J J^T`` of the one-hot per-sample gradients on a subset S'.

    ``entries[i, j]`` is the inner product of the gradients of the samples
    ``subset_indices[i]`` and ``subset_indices[j]``.
    """

    entries: np.ndarray
    subset_indices: np.ndarray
    seed: Optional[int] = None

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True, eq=False)
class FisherMatrix:
    """Dense W x W observed Fisher information, symmetric positive semi-definite."""

    entries: np.ndarray

    @property
    def size(self) -> int:
        return self.entries.shape[0]


@dataclass
class MetricReport:
    """
    Result of a metric computation at one parameter vector.

    Competitor fields stay ``None`` when they were not requested.
    """

    gamma_hat: Optional[float] = None
    per_trial_logdets: List[float] = field(default_factory=list)
    robustness: Optional[float] = None
    frobenius: Optional[float] = None
    spectral_radius: Optional[float] = None
    n_prime: int = 0
    t: int = 0
    seed: int = 0
    temperature: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)
