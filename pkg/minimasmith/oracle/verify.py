import logging
from typing import Sequence, Tuple, Union

import numpy as np
from scipy.optimize import minimize

from minimasmith.errors import ConfigError, NumericError
from minimasmith.metrics.fisher import fisher_exact
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import batch_loss_and_grad
from minimasmith.oracle.errors import InterlacingViolation, OrderError, PremiseError
from minimasmith.oracle.hessian import finite_diff_hessian, training_loss
from minimasmith.oracle.models import IdentityReport, InterlacingReport, OrderReport
from minimasmith.regularizer.objective import Objective, as_objective
from minimasmith.regularizer.regularizer import reg_loss, split_batch, stack_sub_batches


log = logging.getLogger(__name__)

_INTERLACING_SLACK = 1e-9
_ORDER_FLOOR = 1e-10
_ORDER_RATIO = 0.6


def label_entropy(dataset: Dataset) -> float:
    """Mean Shannon entropy of the labels, the floor of the training loss."""
    labels = dataset.labels
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(labels > 0.0, labels * np.log(labels), 0.0)
    return float(-np.mean(np.sum(terms, axis=1)))


def residual_kl(spec: NetworkSpec, params: ParamVector, dataset: Dataset) -> float:
    """Mean ``KL(y || f(x))`` over the dataset: training loss minus the label entropy."""
    return max(training_loss(spec, params, dataset) - label_entropy(dataset), 0.0)


def fit_to_floor(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    max_iter: int = 5000,
) -> Tuple[ParamVector, float]:
    """
    Minimizes the training loss with L-BFGS, driving the network towards the
    entropy floor of its (usually label-smoothed) targets.

    :returns: the fitted parameters and their residual KL.
    :rtype: Tuple[numpy.ndarray, float]
    """

    def _objective(w: np.ndarray) -> Tuple[float, np.ndarray]:
        return batch_loss_and_grad(spec, w, dataset)

    result = minimize(
        _objective,
        spec.check_params(params),
        jac=True,
        method="L-BFGS-B",
        options={"maxiter": max_iter, "maxfun": 4 * max_iter, "ftol": 0.0, "gtol": 1e-13},
    )
    fitted = np.asarray(result.x, dtype=np.float64)
    kl = residual_kl(spec, fitted, dataset)
    log.debug(f"fit_to_floor: {result.nit} iterations, residual KL {kl:.3e}")
    return fitted, kl


def verify_fisher_identity(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    tol: float = 1e-2,
    premise_tol: float = 1e-6,
    step: float = 1e-4,
) -> IdentityReport:
    """
    Checks that the training-loss Hessian equals the label-weighted observed
    Fisher at a minimum that fits every (smoothed) label exactly.

    :param tol: bound on ``||H - F||_F / ||H||_F``.
    :type tol: float
    :param premise_tol: bound on the mean residual KL that defines the premise.
    :type premise_tol: float
    :raises PremiseError: if the residual KL exceeds ``premise_tol``.
    :rtype: :class:`minimasmith.oracle.models.IdentityReport`
    """
    kl = residual_kl(spec, params, dataset)
    if kl > premise_tol:
        log.error(f"residual KL {kl:.3e} above {premise_tol:.1e}")
        raise PremiseError(
            f"parameters are not at the entropy floor: residual KL {kl:.3e}",
            residual_kl=kl,
        )

    hessian = finite_diff_hessian(spec, params, dataset, step).entries
    fisher = fisher_exact(spec, params, dataset, weighted=True).entries
    scale = np.linalg.norm(hessian)
    if scale == 0.0:
        raise NumericError("the Hessian vanishes; the relative residual is undefined")

    residual = float(np.linalg.norm(hessian - fisher) / scale)
    log.debug(f"Fisher identity residual {residual:.3e}")
    return IdentityReport(residual=residual, residual_kl=kl, tol=tol, passed=residual <= tol)


def verify_interlacing(
    matrix: np.ndarray, removed_indices: Sequence[int]
) -> InterlacingReport:
    """
    Checks ``lambda_r <= nu_r <= lambda_{r + n - k}`` for the eigenvalues nu of
    the principal sub-matrix left after deleting ``removed_indices``, both
    spectra sorted ascending, with 1e-9 slack.

    :raises ConfigError: if the matrix is not symmetric or the removal empties it.
    :raises InterlacingViolation: with the failing (0-based) index r.
    :rtype: :class:`minimasmith.oracle.models.InterlacingReport`
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n = matrix.shape[0]
    if matrix.shape != (n, n) or not np.allclose(matrix, matrix.T, atol=1e-12):
        raise ConfigError("verify_interlacing needs a symmetric matrix", option="matrix")

    keep = np.setdiff1d(np.arange(n), np.asarray(removed_indices, dtype=np.int64))
    k = keep.shape[0]
    if k == 0:
        raise ConfigError("the removal leaves an empty sub-matrix", option="removed_indices")

    full = np.linalg.eigvalsh(matrix)
    sub = np.linalg.eigvalsh(matrix[np.ix_(keep, keep)])

    worst = 0.0
    for r in range(k):
        below = full[r] - sub[r]
        above = sub[r] - full[r + n - k]
        violation = max(below, above)
        worst = max(worst, violation)
        if violation > _INTERLACING_SLACK:
            log.error(f"interlacing fails at index {r}: violation {violation:.3e}")
            raise InterlacingViolation(
                f"eigenvalue {r} of the sub-matrix is outside its bracket by {violation:.3e}",
                index=r,
            )

    return InterlacingReport(
        full_spectrum=full.tolist(), sub_spectrum=sub.tolist(), max_violation=worst
    )


def verify_surrogate_order(
    objective: Union[NetworkSpec, Objective],
    params: ParamVector,
    batch: Dataset,
    m: int = 1,
    alpha_grid: Sequence[float] = (1e-2, 1e-3, 1e-4),
    seed: int = 0,
) -> OrderReport:
    """
    Checks that the surrogate approaches ``alpha`` times the mean squared
    sub-batch gradient norm at first order: the residual
    ``|R_alpha / alpha - (1/M) sum ||g_i||^2|`` must shrink by at least a
    factor 0.6 from one alpha to the next wherever it exceeds 1e-10.

    :param alpha_grid: strictly descending lookahead steps.
    :raises ConfigError: if the grid is not strictly descending.
    :raises OrderError: with the grid index where the decay fails.
    :rtype: :class:`minimasmith.oracle.models.OrderReport`
    """
    alphas = [float(a) for a in alpha_grid]
    if any(b >= a for a, b in zip(alphas, alphas[1:])) or alphas[-1] <= 0.0:
        raise ConfigError("alpha_grid must be positive and strictly descending", option="alpha_grid")

    objective = as_objective(objective)
    sub_batches = split_batch(batch, m, np.random.default_rng(seed))
    features, onehot = stack_sub_batches(sub_batches)
    ((_, grads),) = objective.group_loss_and_grad(params, features, [onehot])
    mean_sq_norm = float(np.mean(np.sum(grads * grads, axis=1)))

    residuals = []
    for alpha in alphas:
        value, _ = reg_loss(objective, params, sub_batches, alpha)
        residuals.append(abs(value / alpha - mean_sq_norm))

    ratios = []
    for j in range(len(alphas) - 1):
        if residuals[j] <= _ORDER_FLOOR:
            continue
        ratio = residuals[j + 1] / residuals[j]
        ratios.append(ratio)
        if ratio > _ORDER_RATIO:
            log.error(f"surrogate residual ratio {ratio:.3f} at alpha={alphas[j + 1]}")
            raise OrderError(
                f"residual shrank only by {ratio:.3f} between alpha={alphas[j]} and {alphas[j + 1]}",
                index=j + 1,
                ratio=ratio,
            )

    return OrderReport(alphas=alphas, residuals=residuals, ratios=ratios)
