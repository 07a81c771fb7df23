import logging

import numpy as np
from scipy.optimize import brentq
from scipy.special import softmax

from minimasmith.metrics.errors import CalibrationError
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import forward


log = logging.getLogger(__name__)

# Search range for ln(1 / temperature).
_LOG_SCALE_LIMIT = 50.0


def mean_max_prob(logits: np.ndarray, inverse_temperature: float) -> float:
    """Mean over rows of the largest softmax probability of ``logits * inverse_temperature``."""
    probs = softmax(np.asarray(logits) * inverse_temperature, axis=-1)
    return float(np.mean(np.max(probs, axis=-1)))


def normalize_softmax_outputs(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    target_peak: float = 0.99,
) -> float:
    """
    Finds the logit temperature at which the mean peak softmax probability over
    ``dataset`` equals ``target_peak``, so that metrics of different models are
    compared at a shared output scale.

    The mean peak probability is monotone in ``1 / temperature``; the root is
    bracketed in ``ln(1 / temperature)`` and refined with Brent's method.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: trained parameters.
    :type params: numpy.ndarray
    :param dataset: usually the clean training set.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param target_peak: desired mean max-probability, in (1/K, 1).
    :type target_peak: float
    :raises CalibrationError: if no temperature reaches the target.
    :returns: the temperature.
    :rtype: float
    """
    dataset.check_against(spec)
    logits = forward(spec, params, dataset.features).logits
    n_classes = spec.n_classes

    if not 1.0 / n_classes < target_peak < 1.0:
        raise CalibrationError(
            f"target_peak must be in (1/{n_classes}, 1), got {target_peak}",
            target=target_peak,
            attainable=(1.0 / n_classes, 1.0),
        )

    def _gap(log_scale: float) -> float:
        return mean_max_prob(logits, np.exp(log_scale)) - target_peak

    if _gap(0.0) == 0.0:
        return 1.0

    low = -_LOG_SCALE_LIMIT
    high = _LOG_SCALE_LIMIT
    low_gap, high_gap = _gap(low), _gap(high)
    if low_gap > 0.0 or high_gap < 0.0:
        attainable = (low_gap + target_peak, high_gap + target_peak)
        log.error(f"target peak {target_peak} outside attainable range {attainable}")
        raise CalibrationError(
            f"mean peak probability {target_peak} is unattainable; range is {attainable}",
            target=target_peak,
            attainable=attainable,
        )

    log_scale = brentq(_gap, low, high, xtol=1e-12, maxiter=500)
    temperature = float(np.exp(-log_scale))
    log.debug(f"calibrated temperature {temperature:.6g} for peak {target_peak}")
    return temperature
