from typing import List, Protocol, Sequence, Tuple, Union, runtime_checkable

import numpy as np

from minimasmith.net.models import Dataset, NetworkSpec
from minimasmith.net.network import batch_loss_and_grad, grouped_loss_and_grad


@runtime_checkable
class Objective(Protocol):
    """
    A differentiable training loss over batches.

    ``group_loss_and_grad`` evaluates M equally sized sub-batches, stacked as
    features of shape (M, b, d), at one shared parameter vector (shape (W,))
    or at one parameter row each (shape (M, W)). It takes one or more target
    stacks of shape (M, b, K) and returns ``(losses, grads)`` with shapes (M,)
    and (M, W) per target stack.
    """

    def loss_and_grad(
        self, params: np.ndarray, batch: Dataset, use_onehot: bool = False
    ) -> Tuple[float, np.ndarray]:
        ...

    def group_loss_and_grad(
        self,
        params: np.ndarray,
        features: np.ndarray,
        targets: Sequence[np.ndarray],
    ) -> List[Tuple[np.ndarray, np.ndarray]]:
        ...


class NetworkObjective:
    """Mean cross-entropy of a feed-forward network at a fixed logit temperature."""

    def __init__(self, spec: NetworkSpec, temperature: float = 1.0) -> None:
        self._spec = spec
        self._temperature = temperature

    @property
    def spec(self) -> NetworkSpec:
        return self._spec

    def loss_and_grad(
        self, params: np.ndarray, batch: Dataset, use_onehot: bool = False
    ) -> Tuple[float, np.ndarray]:
        return batch_loss_and_grad(
            self._spec, params, batch, use_onehot, self._temperature
        )

    def group_loss_and_grad(
        self,
        params: np.ndarray,
        features: np.ndarray,
        targets: Sequence[np.ndarray],
    ) -> List[Tuple[np.ndarray, np.ndarray]]:
        return grouped_loss_and_grad(
            self._spec, params, features, targets, self._temperature
        )


class QuadraticObjective:
    """``L(w) = 0.5 w^T A w``, independent of the batch contents."""

    def __init__(self, matrix: np.ndarray) -> None:
        self._matrix = np.asarray(matrix, dtype=np.float64)

    def loss_and_grad(
        self, params: np.ndarray, batch: Dataset, use_onehot: bool = False
    ) -> Tuple[float, np.ndarray]:
        grad = self._matrix @ params
        return float(0.5 * params @ grad), grad

    def group_loss_and_grad(
        self,
        params: np.ndarray,
        features: np.ndarray,
        targets: Sequence[np.ndarray],
    ) -> List[Tuple[np.ndarray, np.ndarray]]:
        rows = np.broadcast_to(
            np.atleast_2d(params), (len(features), self._matrix.shape[0])
        )
        grads = rows @ self._matrix.T
        losses = 0.5 * np.sum(rows * grads, axis=1)
        return [(losses, grads) for _ in targets]


def as_objective(objective: Union[NetworkSpec, Objective]) -> Objective:
    """Wraps a :class:`NetworkSpec` into a :class:`NetworkObjective`; passes objectives through."""
    if isinstance(objective, NetworkSpec):
        return NetworkObjective(objective)
    return objective
