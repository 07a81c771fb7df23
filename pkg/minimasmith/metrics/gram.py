import logging
from typing import Callable, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from minimasmith.errors import ConfigError
from minimasmith.metrics.errors import SingularGram
from minimasmith.metrics.linalg import sorted_eigenvalues, symmetrize
from minimasmith.metrics.models import GramMatrix, MetricReport
from minimasmith.metrics.options import SamplerOptions, _sampler_options_dict
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import per_sample_jacobian


log = logging.getLogger(__name__)

# Relative eigenvalue floor below which a Gram matrix is treated as singular.
EIGEN_FLOOR = 1e-12

# Maps an array of sample indices to the matching (n, W) gradient rows.
RowSource = Callable[[np.ndarray], np.ndarray]


def sample_subset(
    dataset: Union[Dataset, int], n_prime: int, rng: np.random.Generator
) -> np.ndarray:
    """
    Draws ``n_prime`` distinct sample indices uniformly without replacement and
    returns them sorted. With ``n_prime == N`` this is every index in order.

    :param dataset: the dataset, or its size N.
    :raises ConfigError: if ``n_prime`` is not in [1, n_samples].
    :rtype: numpy.ndarray
    """
    n_samples = dataset if isinstance(dataset, int) else len(dataset)
    if not 1 <= n_prime <= n_samples:
        raise ConfigError(
            f"cannot draw {n_prime} distinct samples out of {n_samples}",
            option="n_prime",
        )
    return np.sort(rng.choice(n_samples, size=n_prime, replace=False))


def gram_from_jacobian(
    jacobian: np.ndarray,
    subset_indices: Optional[np.ndarray] = None,
    seed: Optional[int] = None,
) -> GramMatrix:
    """
    Builds ``J J^T`` from stacked gradient rows.

    :param jacobian: gradient rows, shape (n, W).
    :type jacobian: numpy.ndarray
    :rtype: :class:`minimasmith.metrics.models.GramMatrix`
    """
    jacobian = np.asarray(jacobian, dtype=np.float64)
    if subset_indices is None:
        subset_indices = np.arange(jacobian.shape[0])

    return GramMatrix(
        entries=symmetrize(jacobian @ jacobian.T),
        subset_indices=np.asarray(subset_indices),
        seed=seed,
    )


def network_rows(
    spec: NetworkSpec, params: ParamVector, dataset: Dataset, temperature: float = 1.0
) -> RowSource:
    """Row source of one-hot per-sample loss gradients of a network."""

    def _rows(indices: np.ndarray) -> np.ndarray:
        return per_sample_jacobian(
            spec, params, dataset, indices, use_onehot=True, temperature=temperature
        )

    return _rows


def gram_matrix(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    subset_indices: Sequence[int],
    temperature: float = 1.0,
    seed: Optional[int] = None,
) -> GramMatrix:
    """
    Gram matrix of the one-hot per-sample gradients on ``subset_indices``.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameter vector.
    :type params: numpy.ndarray
    :param dataset: the training set S.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param subset_indices: indices of S' inside S.
    :type subset_indices: Sequence[int]
    :param temperature: logit temperature.
    :type temperature: float
    :raises NumericError: if a gradient is non-finite.
    :rtype: :class:`minimasmith.metrics.models.GramMatrix`
    """
    indices = np.asarray(subset_indices, dtype=np.int64)
    rows = network_rows(spec, params, dataset, temperature)(indices)
    return gram_from_jacobian(rows, indices, seed)


def log_det(gram: GramMatrix) -> float:
    """
    ``ln |gram|`` as the sum of log-eigenvalues.

    :raises SingularGram: if an eigenvalue is at or below ``1e-12 * max(lambda_max, 1)``.
    :rtype: float
    """
    eigenvalues = sorted_eigenvalues(gram.entries)
    floor = EIGEN_FLOOR * max(float(eigenvalues[-1]), 1.0)
    if eigenvalues[0] <= floor:
        raise SingularGram(
            f"Gram matrix eigenvalue {eigenvalues[0]:.3e} is at or below the floor {floor:.3e}",
            eigenvalue=float(eigenvalues[0]),
            floor=floor,
        )

    return float(np.sum(np.log(eigenvalues)))


def trial_grams(
    n_samples: int, options: Optional[SamplerOptions], rows: RowSource
) -> Iterator[Tuple[int, GramMatrix]]:
    """
    Yields ``(trial, gram)`` for the T sampled subsets. Trial t draws its
    subset from a generator seeded with ``seed + t``.
    """
    opt = _sampler_options_dict(options, n_samples)
    for trial in range(opt["trials"]):
        seed = opt["seed"] + trial
        rng = np.random.default_rng(seed)
        indices = sample_subset(n_samples, opt["n_prime"], rng)
        yield trial, gram_from_jacobian(rows(indices), indices, seed)


def gamma_hat_from_rows(
    n_samples: int, options: Optional[SamplerOptions], rows: RowSource
) -> MetricReport:
    """
    Averages ``ln |xi^t|`` over the sampled trials of any gradient row source.

    :raises SingularGram: tagged with the failing trial.
    :rtype: :class:`minimasmith.metrics.models.MetricReport`
    """
    opt = _sampler_options_dict(options, n_samples)
    logdets: List[float] = []

    for trial, gram in trial_grams(n_samples, opt, rows):
        try:
            logdets.append(log_det(gram))
        except SingularGram as err:
            err.trial = trial
            log.error(f"singular Gram matrix in trial {trial} (seed {gram.seed})")
            raise

    return MetricReport(
        gamma_hat=float(np.mean(logdets)),
        per_trial_logdets=logdets,
        n_prime=opt["n_prime"],
        t=opt["trials"],
        seed=opt["seed"],
    )


def gamma_hat_from_jacobian(
    jacobian: np.ndarray, options: Optional[SamplerOptions] = None
) -> MetricReport:
    """:func:`gamma_hat` over precomputed per-sample gradient rows, shape (N, W)."""
    jacobian = np.asarray(jacobian, dtype=np.float64)
    return gamma_hat_from_rows(jacobian.shape[0], options, lambda idx: jacobian[idx])


def gamma_hat(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    options: Optional[SamplerOptions] = None,
    temperature: float = 1.0,
) -> MetricReport:
    """
    Sampled log-determinant flatness estimate: the mean over T trials of
    ``ln |xi^t|`` with xi^t the Gram matrix of N' randomly drawn samples.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameter vector.
    :type params: numpy.ndarray
    :param dataset: the training set S.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param options: sampler options; see :class:`minimasmith.metrics.options.SamplerOptions`.
    :type options: :class:`minimasmith.metrics.options.SamplerOptions`
    :param temperature: logit temperature, usually from calibration.
    :type temperature: float
    :raises ConfigError: if N' exceeds N.
    :raises SingularGram: if a sampled Gram matrix is singular.
    :returns: a report carrying ``gamma_hat`` and the per-trial values.
    :rtype: :class:`minimasmith.metrics.models.MetricReport`
    """
    dataset.check_against(spec)
    log.debug(f"gamma_hat over N={len(dataset)}, W={spec.param_count}")

    report = gamma_hat_from_rows(
        len(dataset), options, network_rows(spec, params, dataset, temperature)
    )
    report.temperature = temperature
    return report
