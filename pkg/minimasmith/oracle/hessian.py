import logging
from typing import Callable

import numpy as np

from minimasmith.errors import NumericError, ShapeError, SizeError
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import forward
from minimasmith.oracle.models import HessianMatrix


log = logging.getLogger(__name__)

# Largest W handled by the O(W^2) finite-difference Hessian.
HESSIAN_SIZE_LIMIT = 200


def training_loss(spec: NetworkSpec, params: ParamVector, dataset: Dataset) -> float:
    """Mean cross-entropy against the stored labels, from a plain forward pass."""
    log_probs = forward(spec, params, dataset.features).log_probs
    return float(-np.mean(np.sum(dataset.labels * log_probs, axis=1)))


def finite_diff_gradient(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-5
) -> np.ndarray:
    """Central-difference gradient, ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    x = np.asarray(x, dtype=np.float64)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        e = np.zeros_like(x)
        e[i] = step
        grad[i] = (func(x + e) - func(x - e)) / (2.0 * step)
    return grad


def max_relative_error(
    analytic: np.ndarray, numeric: np.ndarray, magnitude_floor: float = 1e-8
) -> float:
    """
    Largest ``|analytic - numeric| / |numeric|`` over the coordinates with
    ``|numeric| > magnitude_floor``. Coordinates at or below the floor are skipped.

    :raises ShapeError: if the two arrays differ in shape.
    :rtype: float
    """
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    if analytic.shape != numeric.shape:
        raise ShapeError(
            "gradients must have the same shape", expected=numeric.shape, actual=analytic.shape
        )

    mask = np.abs(numeric) > magnitude_floor
    if not mask.any():
        return 0.0
    return float(np.max(np.abs(analytic[mask] - numeric[mask]) / np.abs(numeric[mask])))


def finite_diff_hessian_fn(
    func: Callable[[np.ndarray], float], x: np.ndarray, step: float = 1e-4
) -> HessianMatrix:
    """
    Central second differences of ``func`` at ``x``.

    Diagonal entries use ``(f(x+h) - 2 f(x) + f(x-h)) / h^2``; off-diagonal
    entries use the four-point stencil ``(f(++) - f(+-) - f(-+) + f(--)) / 4h^2``.
    Only the upper triangle is evaluated and mirrored.

    :raises SizeError: if x has more than 200 entries.
    :raises NumericError: if any evaluation is not finite.
    :rtype: :class:`minimasmith.oracle.models.HessianMatrix`
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    if n > HESSIAN_SIZE_LIMIT:
        raise SizeError(
            f"finite-difference Hessian needs W <= {HESSIAN_SIZE_LIMIT}, got {n}",
            size=n,
            limit=HESSIAN_SIZE_LIMIT,
        )

    center = func(x)
    basis = np.eye(n) * step
    entries = np.empty((n, n))
    for i in range(n):
        entries[i, i] = (func(x + basis[i]) - 2.0 * center + func(x - basis[i])) / step**2
        for j in range(i + 1, n):
            value = (
                func(x + basis[i] + basis[j])
                - func(x + basis[i] - basis[j])
                - func(x - basis[i] + basis[j])
                + func(x - basis[i] - basis[j])
            ) / (4.0 * step**2)
            entries[i, j] = entries[j, i] = value

    if not np.all(np.isfinite(entries)):
        raise NumericError("finite-difference Hessian has non-finite entries")

    return HessianMatrix(entries=entries, method="central_fd", step=step)


def finite_diff_hessian(
    spec: NetworkSpec, params: ParamVector, dataset: Dataset, step: float = 1e-4
) -> HessianMatrix:
    """
    Finite-difference Hessian of the mean training loss, using forward
    evaluations only.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameters, W <= 200.
    :type params: numpy.ndarray
    :param dataset: training set with the labels of the loss.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param step: difference step.
    :type step: float
    :raises SizeError: if W exceeds 200.
    :raises NumericError: if a loss evaluation is not finite.
    :rtype: :class:`minimasmith.oracle.models.HessianMatrix`
    """
    if spec.param_count > HESSIAN_SIZE_LIMIT:
        raise SizeError(
            f"finite-difference Hessian needs W <= {HESSIAN_SIZE_LIMIT}, got {spec.param_count}",
            size=spec.param_count,
            limit=HESSIAN_SIZE_LIMIT,
        )
    log.debug(f"finite-difference Hessian, W={spec.param_count}, step={step}")

    return finite_diff_hessian_fn(
        lambda w: training_loss(spec, w, dataset), spec.check_params(params), step
    )
