import logging
from typing import Optional

import numpy as np

from minimasmith.errors import ConfigError, SizeError
from minimasmith.metrics.errors import SingularFisher
from minimasmith.metrics.gram import gamma_hat_from_jacobian
from minimasmith.metrics.linalg import sorted_eigenvalues, symmetrize
from minimasmith.metrics.models import FisherMatrix
from minimasmith.metrics.options import SamplerOptions
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import class_jacobian


log = logging.getLogger(__name__)

# Largest W for which a dense W x W Fisher is built.
FISHER_SIZE_LIMIT = 5000


def fisher_exact(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    weighted: bool = False,
    temperature: float = 1.0,
) -> FisherMatrix:
    """
    Dense observed Fisher information of the training set.

    Accumulates ``(1/N) sum_x sum_i g_i g_i^T`` where ``g_i`` is the parameter
    gradient of ``-ln f_w(x)_i``. With ``weighted`` each outer product is scaled
    by the label mass ``y_i``, which gives the Hessian of the training loss at a
    minimum that fits every label exactly.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameter vector.
    :type params: numpy.ndarray
    :param dataset: training set.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param weighted: weight class terms by the soft label.
    :type weighted: bool
    :param temperature: logit temperature.
    :type temperature: float
    :raises SizeError: if W exceeds 5000.
    :rtype: :class:`minimasmith.metrics.models.FisherMatrix`
    """
    n_params = spec.param_count
    if n_params > FISHER_SIZE_LIMIT:
        raise SizeError(
            f"dense Fisher needs W <= {FISHER_SIZE_LIMIT}, got {n_params}",
            size=n_params,
            limit=FISHER_SIZE_LIMIT,
        )
    dataset.check_against(spec)
    log.debug(f"building {n_params}x{n_params} Fisher over {len(dataset)} samples")

    entries = np.zeros((n_params, n_params))
    for x, y in zip(dataset.features, dataset.labels):
        jac = class_jacobian(spec, params, x, temperature)
        if weighted:
            entries += (jac.T * y) @ jac
        else:
            entries += jac.T @ jac

    return FisherMatrix(entries=symmetrize(entries / len(dataset)))


def gamma_full_from_fisher(fisher: FisherMatrix, eigen_floor: float = 1e-12) -> float:
    """
    ``ln |I_S(w)|`` as the sum of log-eigenvalues of the exact Fisher.

    :raises SingularFisher: if an eigenvalue is at or below ``eigen_floor * max(lambda_max, 1)``.
    :rtype: float
    """
    eigenvalues = sorted_eigenvalues(fisher.entries)
    floor = eigen_floor * max(float(eigenvalues[-1]), 1.0)
    if eigenvalues[0] <= floor:
        raise SingularFisher(
            f"Fisher eigenvalue {eigenvalues[0]:.3e} is at or below the floor {floor:.3e}",
            eigenvalue=float(eigenvalues[0]),
            floor=floor,
        )

    return float(np.sum(np.log(eigenvalues)))


def gamma_relation(gamma_hat: float, n_params: int, n_prime: int) -> float:
    """
    Rescales a sampled estimate to the full-Fisher scale:
    ``(W / N') * gamma_hat + W * ln(1 / W)``.

    :raises ConfigError: if W or N' is not positive.
    :rtype: float
    """
    if n_params < 1 or n_prime < 1:
        raise ConfigError("W and N' must be positive", option="n_prime")

    return (n_params / n_prime) * gamma_hat - n_params * np.log(n_params)


def relation_diagnostic(
    jacobian: np.ndarray, options: Optional[SamplerOptions] = None
) -> dict:
    """
    Compares :func:`gamma_relation` against the exact value on a synthetic
    square Jacobian J (W x W rows), whose Fisher is ``J^T J / W``.

    No accuracy is asserted; the returned dict holds ``gamma_true``,
    ``gamma_estimate``, ``gamma_hat`` and ``relative_error``.

    :raises ConfigError: if J is not square.
    :rtype: dict
    """
    jacobian = np.asarray(jacobian, dtype=np.float64)
    n_params = jacobian.shape[1]
    if jacobian.shape[0] != n_params:
        raise ConfigError("the relation diagnostic needs a square Jacobian", option="jacobian")

    gamma_true = gamma_full_from_fisher(
        FisherMatrix(entries=symmetrize(jacobian.T @ jacobian / n_params))
    )
    report = gamma_hat_from_jacobian(jacobian, options)
    estimate = gamma_relation(report.gamma_hat, n_params, report.n_prime)

    return {
        "gamma_true": gamma_true,
        "gamma_hat": report.gamma_hat,
        "gamma_estimate": float(estimate),
        "relative_error": float(abs(estimate - gamma_true) / max(abs(gamma_true), 1e-300)),
    }
