import logging
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from minimasmith.errors import NumericError
from minimasmith.metrics.linalg import sorted_eigenvalues
from minimasmith.metrics.models import GramMatrix
from minimasmith.net.models import Dataset, NetworkSpec
from minimasmith.regularizer.errors import IndivisibleBatch
from minimasmith.regularizer.models import SurrogateReport
from minimasmith.regularizer.objective import Objective, as_objective
from minimasmith.regularizer.options import RegOptions, _reg_options_dict


log = logging.getLogger(__name__)


def _split_indices(n_samples: int, m: int, rng: np.random.Generator) -> np.ndarray:
    if m < 1 or n_samples % m != 0:
        raise IndivisibleBatch(
            f"a batch of {n_samples} cannot be split into {m} equal parts",
            batch_size=n_samples,
            m=m,
        )
    return rng.permutation(n_samples).reshape(m, -1)


def split_batch(batch: Dataset, m: int, rng: np.random.Generator) -> List[Dataset]:
    """
    Shuffles a mini-batch and partitions it into ``m`` equal sub-batches.

    :param batch: the mini-batch B.
    :type batch: :class:`minimasmith.net.models.Dataset`
    :param m: number of sub-batches M.
    :type m: int
    :param rng: generator driving the shuffle.
    :type rng: numpy.random.Generator
    :raises IndivisibleBatch: if ``len(batch)`` is not a multiple of ``m``.
    :rtype: List[:class:`minimasmith.net.models.Dataset`]
    """
    return [batch.subset(part) for part in _split_indices(len(batch), m, rng)]


def stack_sub_batches(
    sub_batches: Sequence[Dataset], use_onehot: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Stacks equal-size sub-batches into features (M, b, d) and targets (M, b, K)."""
    features = np.stack([b.features for b in sub_batches])
    targets = np.stack([b.targets(use_onehot) for b in sub_batches])
    return features, targets


def _shifted_eval(
    objective: Objective,
    params: np.ndarray,
    features: np.ndarray,
    onehot: np.ndarray,
    alpha: float,
    grads: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    shifted = params[None, :] - alpha * grads
    ((losses, shifted_grads),) = objective.group_loss_and_grad(
        shifted, features, [onehot]
    )
    if not (np.all(np.isfinite(losses)) and np.all(np.isfinite(shifted_grads))):
        log.error(f"non-finite loss at the shifted points, alpha={alpha}")
        raise NumericError(f"shifted evaluation overflowed, alpha={alpha} is too large")
    return losses, shifted_grads


def reg_loss(
    objective: Union[NetworkSpec, Objective],
    params: np.ndarray,
    sub_batches: List[Dataset],
    alpha: float,
) -> Tuple[float, np.ndarray]:
    """
    First-order trace-norm surrogate
    ``R = L(B, w) - (1/M) sum_i L(B_i, w - alpha g_i)`` with ``g_i`` the
    sub-batch gradients at w, held constant. Sub-batch losses use one-hot targets.

    :param objective: network spec or any :class:`Objective`.
    :param params: parameters w.
    :type params: numpy.ndarray
    :param sub_batches: the equal-size sub-batches of B.
    :type sub_batches: List[:class:`minimasmith.net.models.Dataset`]
    :param alpha: lookahead step.
    :type alpha: float
    :raises NumericError: if a shifted loss or gradient is not finite.
    :returns: ``(R, shifted_grads)`` with the (M, W) gradients at the shifted points.
    :rtype: Tuple[float, numpy.ndarray]
    """
    objective = as_objective(objective)
    features, onehot = stack_sub_batches(sub_batches)
    ((losses, grads),) = objective.group_loss_and_grad(params, features, [onehot])
    if alpha == 0.0:
        return 0.0, grads

    shifted_losses, shifted_grads = _shifted_eval(
        objective, params, features, onehot, alpha, grads
    )

    return float(np.mean(losses) - np.mean(shifted_losses)), shifted_grads


def regularized_grad(
    objective: Union[NetworkSpec, Objective],
    params: np.ndarray,
    batch: Dataset,
    options: Optional[RegOptions],
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Gradient of ``L(B, w) + beta R(w)`` without second-order terms:
    ``grad L(B, w) + beta * ((1/M) sum_i g_i - (1/M) sum_i grad L(B_i, .)|_{w - alpha g_i})``.

    With ``beta == 0`` this is the plain batch gradient and ``rng`` is not used.
    The split matches :func:`split_batch` for the same generator state.

    :param objective: network spec or any :class:`Objective`.
    :param params: parameters w.
    :type params: numpy.ndarray
    :param batch: the mini-batch B.
    :type batch: :class:`minimasmith.net.models.Dataset`
    :param options: regularizer options.
    :type options: :class:`minimasmith.regularizer.options.RegOptions`
    :param rng: generator for the sub-batch split.
    :type rng: numpy.random.Generator
    :raises IndivisibleBatch: if B does not split into M parts.
    :rtype: numpy.ndarray
    """
    objective = as_objective(objective)
    opt = _reg_options_dict(options)
    if opt["beta"] == 0.0:
        _, plain = objective.loss_and_grad(params, batch)
        return plain

    parts = _split_indices(len(batch), opt["m"], rng)
    features = batch.features[parts]
    onehot = batch.onehot_labels()[parts]

    # equal sub-batch sizes: the batch gradient is the mean of the sub-batch gradients
    (_, soft_grads), (_, grads) = objective.group_loss_and_grad(
        params, features, [batch.labels[parts], onehot]
    )
    plain = soft_grads.mean(axis=0)
    if opt["alpha"] == 0.0:
        shifted_grads = grads
    else:
        _, shifted_grads = _shifted_eval(
            objective, params, features, onehot, opt["alpha"], grads
        )

    return plain + opt["beta"] * (grads.mean(axis=0) - shifted_grads.mean(axis=0))


def trace_surrogate_report(gram: Union[GramMatrix, np.ndarray]) -> SurrogateReport:
    """
    Compares the determinant-based quantity with its trace surrogate for one
    Gram matrix: the geometric mean of the eigenvalues is at most their
    arithmetic mean, and the gap is at most ``sqrt(n - 1)`` eigenvalue
    standard deviations. Both slacks are non-negative when the inequalities hold.

    :rtype: :class:`minimasmith.regularizer.models.SurrogateReport`
    """
    entries = gram.entries if isinstance(gram, GramMatrix) else gram
    eigenvalues = np.clip(sorted_eigenvalues(entries), 0.0, None)
    n = eigenvalues.shape[0]

    arithmetic = float(np.mean(eigenvalues))
    if eigenvalues[0] > 0.0:
        geometric = float(np.exp(np.mean(np.log(eigenvalues))))
    else:
        geometric = 0.0
    std = float(np.std(eigenvalues))

    return SurrogateReport(
        geometric_mean=geometric,
        arithmetic_mean=arithmetic,
        eigen_std=std,
        am_gm_slack=arithmetic - geometric,
        spread_slack=np.sqrt(n - 1.0) * std - (arithmetic - geometric),
    )
