import logging
from typing import Optional

from minimasmith.metrics.calibration import normalize_softmax_outputs
from minimasmith.metrics.competitors import (
    frobenius_metric,
    robustness_metric,
    spectral_radius_metric,
)
from minimasmith.metrics.gram import gamma_hat
from minimasmith.metrics.models import MetricReport
from minimasmith.metrics.options import SamplerOptions
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector


log = logging.getLogger(__name__)


def metric_report(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    options: Optional[SamplerOptions] = None,
    temperature: float = 1.0,
    competitors: bool = True,
) -> MetricReport:
    """
    Computes gamma_hat and, unless ``competitors`` is off, the robustness,
    Frobenius and spectral-radius metrics at one temperature.

    :rtype: :class:`minimasmith.metrics.models.MetricReport`
    """
    report = gamma_hat(spec, params, dataset, options, temperature)
    if competitors:
        report.robustness = robustness_metric(spec, params, dataset, temperature)
        report.frobenius = frobenius_metric(spec, params, dataset, options, temperature)
        report.spectral_radius = spectral_radius_metric(
            spec, params, dataset, options, temperature
        )

    log.debug(f"metric report: gamma_hat={report.gamma_hat:.6g}")
    return report


def calibrated_metric_report(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    options: Optional[SamplerOptions] = None,
    target_peak: Optional[float] = 0.99,
    competitors: bool = True,
) -> MetricReport:
    """
    Calibrates the softmax temperature on ``dataset`` and then builds the
    metric report at that temperature. ``target_peak=None`` skips calibration.
    """
    temperature = (
        1.0
        if target_peak is None
        else normalize_softmax_outputs(spec, params, dataset, target_peak)
    )
    return metric_report(spec, params, dataset, options, temperature, competitors)
