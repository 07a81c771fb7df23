import logging
from dataclasses import replace
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.special import gammaln, logsumexp

from minimasmith.bound.models import BoundInputs, BoundResult
from minimasmith.errors import ConfigError, NumericError


log = logging.getLogger(__name__)

_LOG_4_PI_E = np.log(4.0 * np.pi) + 1.0


def _exp_or_inf(value: float) -> float:
    with np.errstate(over="ignore"):
        return float(np.exp(value))


def log_curvature_term(inputs: BoundInputs) -> float:
    """
    ``ln A`` with ``A = W V^{2/W} pi^{1/W} exp(gamma / W) / (4 pi e)``.

    :rtype: float
    """
    w = float(inputs.w)
    return float(
        np.log(w)
        + (2.0 / w) * np.log(inputs.volume)
        + np.log(np.pi) / w
        + inputs.gamma / w
        - _LOG_4_PI_E
    )


def curvature_term(inputs: BoundInputs) -> float:
    """
    Curvature term A of the bound, evaluated in the log domain.

    :param inputs: bound inputs.
    :type inputs: :class:`minimasmith.bound.models.BoundInputs`
    :raises NumericError: if A is not representable as a finite float.
    :rtype: float
    """
    log_a = log_curvature_term(inputs)
    a = _exp_or_inf(log_a)
    if not np.isfinite(a):
        log.error(f"curvature term overflows, ln A = {log_a:.6g}")
        raise NumericError(f"curvature term exp({log_a:.6g}) overflows")
    return a


def log_basin_excess(inputs: BoundInputs, fisher_logdet: float, exact: bool = False) -> float:
    """
    ``ln(h - L0)`` for an ellipsoidal basin of volume V.

    The default uses the Stirling form
    ``V^{2/W} pi^{1/W} W^{(W+1)/W} |I|^{1/W} / (4 pi e)``; ``exact`` solves the
    ellipsoid-volume identity with ``ln Gamma(W/2 + 1)``:
    ``(V Gamma(W/2 + 1))^{2/W} |I|^{1/W} / (2 pi)``.
    """
    w = float(inputs.w)
    if exact:
        return float(
            (2.0 / w) * (np.log(inputs.volume) + gammaln(w / 2.0 + 1.0))
            + fisher_logdet / w
            - np.log(2.0 * np.pi)
        )

    return float(
        (2.0 / w) * np.log(inputs.volume)
        + np.log(np.pi) / w
        + ((w + 1.0) / w) * np.log(w)
        + fisher_logdet / w
        - _LOG_4_PI_E
    )


def basin_height(inputs: BoundInputs, fisher_logdet: float, exact: bool = False) -> float:
    """
    Height h of the basin ``{w : L(S, w) <= h}`` whose ellipsoidal volume is V.

    :param inputs: bound inputs; only W, V and L0 are used.
    :type inputs: :class:`minimasmith.bound.models.BoundInputs`
    :param fisher_logdet: ``ln |I_S(w0)|``.
    :type fisher_logdet: float
    :param exact: use the Gamma-function volume instead of Stirling's approximation.
    :type exact: bool
    :raises NumericError: if the height is not finite.
    :rtype: float
    """
    excess = _exp_or_inf(log_basin_excess(inputs, fisher_logdet, exact))
    height = inputs.l0 + excess
    if not np.isfinite(height):
        raise NumericError("basin height overflows")
    return height


def bound_rhs(inputs: BoundInputs, fisher_logdet: Optional[float] = None) -> BoundResult:
    """
    Right-hand side of the bound,
    ``E_Q[L] + 2 sqrt((2 L0 + 2 A + ln(2N / delta)) / (N - 1))``.

    The square-root term is assembled with ``logsumexp`` so that it stays
    finite in the log domain when A does not fit a float.

    :param inputs: bound inputs.
    :type inputs: :class:`minimasmith.bound.models.BoundInputs`
    :param fisher_logdet: log-determinant for the basin height; ``inputs.gamma`` when omitted.
    :type fisher_logdet: float
    :raises ConfigError: if N < 2.
    :rtype: :class:`minimasmith.bound.models.BoundResult`
    """
    if inputs.n < 2:
        raise ConfigError("the bound needs N >= 2", option="n")

    log_a = log_curvature_term(inputs)
    terms = [np.log(2.0) + log_a, np.log(np.log(2.0 * inputs.n / inputs.delta))]
    if inputs.l0 > 0.0:
        terms.append(np.log(2.0 * inputs.l0))

    log_gap = float(np.log(2.0) + 0.5 * (logsumexp(terms) - np.log(inputs.n - 1.0)))
    rhs = inputs.train_loss_plugin + _exp_or_inf(log_gap)

    logdet = inputs.gamma if fisher_logdet is None else fisher_logdet
    h = inputs.l0 + _exp_or_inf(log_basin_excess(inputs, logdet))

    log.debug(f"bound: ln A={log_a:.6g}, ln gap={log_gap:.6g}, rhs={rhs:.6g}")
    return BoundResult(a=_exp_or_inf(log_a), log_a=log_a, h=h, rhs=rhs, log_gap=log_gap)


def bound_sweep(inputs: BoundInputs, gammas: Iterable[float]) -> List[Tuple[float, float]]:
    """Returns ``(gamma, rhs)`` pairs for a sweep of gamma with everything else fixed."""
    sweep = []
    for gamma in gammas:
        result = bound_rhs(replace(inputs, gamma=float(gamma)))
        sweep.append((float(gamma), result.rhs))
    return sweep
