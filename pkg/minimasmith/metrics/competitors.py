import logging
from typing import Optional

import numpy as np

from minimasmith.errors import SizeError
from minimasmith.metrics.gram import network_rows, sample_subset, trial_grams
from minimasmith.metrics.linalg import power_iteration, symmetrize
from minimasmith.metrics.options import SamplerOptions, _sampler_options_dict
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import input_jacobian, per_sample_jacobian


log = logging.getLogger(__name__)

# Largest N for which exact mode builds the full-training-set Gram matrix.
EXACT_GRAM_LIMIT = 5000


def spectral_norm_squared(matrix: np.ndarray, seed: int = 0) -> float:
    """Largest singular value of ``matrix``, squared, by power iteration on the smaller Gram side."""
    matrix = np.asarray(matrix, dtype=np.float64)
    gram = matrix @ matrix.T if matrix.shape[0] <= matrix.shape[1] else matrix.T @ matrix
    eigenvalue, _ = power_iteration(gram, seed=seed)
    return eigenvalue


def frobenius_from_gram(gram_entries: np.ndarray) -> float:
    """``||J^T J||_F^2``, computed through the identity ``||J^T J||_F = ||J J^T||_F``."""
    return float(np.sum(np.square(gram_entries)))


def spectral_radius_from_gram(gram_entries: np.ndarray, seed: int = 0) -> float:
    eigenvalue, _ = power_iteration(gram_entries, seed=seed)
    return eigenvalue


def _full_gram(spec: NetworkSpec, params: ParamVector, dataset: Dataset, temperature: float) -> np.ndarray:
    if len(dataset) > EXACT_GRAM_LIMIT:
        raise SizeError(
            f"exact mode needs N <= {EXACT_GRAM_LIMIT}, got {len(dataset)}",
            size=len(dataset),
            limit=EXACT_GRAM_LIMIT,
        )
    jac = per_sample_jacobian(spec, params, dataset, use_onehot=True, temperature=temperature)
    return symmetrize(jac @ jac.T)


def robustness_metric(
    spec: NetworkSpec, params: ParamVector, dataset: Dataset, temperature: float = 1.0
) -> float:
    """
    Mean squared spectral norm of the input Jacobian of the softmax output,
    ``(1/N) sum_x ||J_x[f_w(x)]||_2^2``.

    :raises NumericError: if power iteration produces non-finite values.
    :rtype: float
    """
    dataset.check_against(spec)
    total = 0.0
    for x in dataset.features:
        total += spectral_norm_squared(input_jacobian(spec, params, x, temperature))

    return total / len(dataset)


def _sampled_frobenius(jacobian: np.ndarray, n_entries: int, rng: np.random.Generator) -> float:
    """
    Estimates ``||J^T J||_F^2`` of one subset. When W^2 fits in the entry count
    every entry is used; otherwise ``n_entries`` entries are drawn uniformly.
    """
    n_params = jacobian.shape[1]
    if n_params * n_params <= n_entries:
        return frobenius_from_gram(jacobian @ jacobian.T)

    rows = rng.integers(0, n_params, size=n_entries)
    cols = rng.integers(0, n_params, size=n_entries)
    entries = np.einsum("na,na->a", jacobian[:, rows], jacobian[:, cols])
    return float(n_params * n_params * np.mean(np.square(entries)))


def frobenius_metric(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    options: Optional[SamplerOptions] = None,
    temperature: float = 1.0,
) -> float:
    """
    Squared Frobenius norm of the summed gradient outer products, ``||J^T J||_F^2``.

    In ``exact`` mode the full-training-set Gram matrix is used. In ``sampled``
    mode each of the T trials draws a subset S' and estimates the norm from
    sampled matrix entries, rescaled by ``(N / N')^2`` to the full-set scale.

    :param options: sampler options, ``competitor_mode`` selects the mode.
    :type options: :class:`minimasmith.metrics.options.SamplerOptions`
    :raises SizeError: in exact mode when N exceeds 5000.
    :rtype: float
    """
    dataset.check_against(spec)
    opt = _sampler_options_dict(options, len(dataset))
    if opt["competitor_mode"] == "exact":
        return frobenius_from_gram(_full_gram(spec, params, dataset, temperature))

    rows = network_rows(spec, params, dataset, temperature)
    scale = (len(dataset) / opt["n_prime"]) ** 2
    estimates = []
    for trial in range(opt["trials"]):
        rng = np.random.default_rng(opt["seed"] + trial)
        indices = sample_subset(len(dataset), opt["n_prime"], rng)
        estimates.append(
            scale * _sampled_frobenius(rows(indices), opt["frobenius_entries"], rng)
        )

    return float(np.mean(estimates))


def spectral_radius_metric(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    options: Optional[SamplerOptions] = None,
    temperature: float = 1.0,
) -> float:
    """
    Largest eigenvalue of the gradient Gram matrix, the squared spectral norm of
    the per-sample Jacobian.

    The two modes measure different quantities. ``exact`` mode takes the
    largest eigenvalue of the full N x N Gram matrix. ``sampled`` mode returns
    the mean over the T trials of the largest eigenvalue of each N' x N' subset
    Gram matrix, with no rescaling to the full set; it grows roughly like N'
    and equals the exact value only when ``n_prime == N``. Unlike
    :func:`frobenius_metric`, values from the two modes are not comparable, so
    a sweep must use one mode throughout.

    :raises SizeError: in exact mode when N exceeds 5000.
    :rtype: float
    """
    dataset.check_against(spec)
    opt = _sampler_options_dict(options, len(dataset))
    if opt["competitor_mode"] == "exact":
        return spectral_radius_from_gram(
            _full_gram(spec, params, dataset, temperature), seed=opt["seed"]
        )

    rows = network_rows(spec, params, dataset, temperature)
    radii = [
        spectral_radius_from_gram(gram.entries, seed=gram.seed)
        for _, gram in trial_grams(len(dataset), opt, rows)
    ]
    return float(np.mean(radii))
