import logging
from typing import Tuple

import numpy as np
from scipy.linalg import eigvalsh

from minimasmith.errors import NumericError, ShapeError


log = logging.getLogger(__name__)


def symmetrize(matrix: np.ndarray) -> np.ndarray:
    """Averages a square matrix with its transpose."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ShapeError(
            f"expected a square matrix, got shape {matrix.shape}", actual=matrix.shape
        )
    return 0.5 * (matrix + matrix.T)


def sorted_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    """
    Eigenvalues of a symmetric matrix in ascending order.

    :raises NumericError: if the matrix has non-finite entries.
    """
    matrix = symmetrize(matrix)
    if not np.all(np.isfinite(matrix)):
        raise NumericError("matrix has non-finite entries")
    return eigvalsh(matrix)


def power_iteration(
    matrix: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 10_000,
    seed: int = 0,
) -> Tuple[float, np.ndarray]:
    """
    Largest eigenvalue of a symmetric positive semi-definite matrix.

    Iterates ``v <- M v / ||M v||`` from a seeded random start and stops once the
    residual ``||M v - lambda v||`` falls below ``tol * lambda``. A matrix of
    zeros returns ``(0.0, e_1)``.

    :param matrix: symmetric PSD matrix.
    :type matrix: numpy.ndarray
    :param tol: relative residual tolerance.
    :type tol: float
    :param max_iter: iteration cap; the last Rayleigh quotient is returned on reaching it.
    :type max_iter: int
    :param seed: seed of the start vector.
    :type seed: int
    :raises NumericError: if an iterate becomes non-finite.
    :returns: ``(eigenvalue, unit eigenvector)``.
    :rtype: Tuple[float, numpy.ndarray]
    """
    matrix = symmetrize(matrix)
    n = matrix.shape[0]
    if not np.any(matrix):
        vec = np.zeros(n)
        vec[0] = 1.0
        return 0.0, vec

    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(n)
    vec /= np.linalg.norm(vec)
    eigenvalue = 0.0

    for step in range(max_iter):
        image = matrix @ vec
        eigenvalue = float(vec @ image)
        residual = np.linalg.norm(image - eigenvalue * vec)
        if not np.isfinite(residual):
            raise NumericError("power iteration produced non-finite values")
        if residual <= tol * abs(eigenvalue):
            return eigenvalue, vec

        norm = np.linalg.norm(image)
        if norm == 0.0:
            # start vector hit the null space; restart
            vec = rng.standard_normal(n)
            vec /= np.linalg.norm(vec)
            continue
        vec = image / norm

    log.warning(
        f"power iteration stopped after {max_iter} steps, residual={residual:.3e}"
    )
    return eigenvalue, vec
