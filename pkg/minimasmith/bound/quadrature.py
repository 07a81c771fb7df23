import logging
import warnings

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from minimasmith.bound.bound import basin_height
from minimasmith.bound.models import BoundInputs, KLCheckReport, QuadraticModel
from minimasmith.errors import ConfigError, NumericError


log = logging.getLogger(__name__)

# Largest dimension handled by the radial quadrature check.
KL_CHECK_MAX_DIM = 5

_KL_SLACK = 1e-6


def _quad(func, low: float, high: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, _ = quad(func, low, high, epsabs=1e-13, epsrel=1e-11, limit=200)
        except IntegrationWarning as err:
            log.error(f"quadrature did not converge: {err}")
            raise NumericError(f"quadrature did not converge: {err}") from err

    if not np.isfinite(value):
        raise NumericError("quadrature returned a non-finite value")
    return float(value)


def ellipse_area(hessian: np.ndarray, level: float) -> float:
    """
    Area of the 2-D ellipse ``{d : 0.5 d^T H d <= level}`` by angular quadrature,
    ``0.5 * integral of r(theta)^2`` with ``r(theta)^2 = 2 level / (u^T H u)``.

    :raises ConfigError: if the Hessian is not 2 x 2.
    :rtype: float
    """
    hessian = np.asarray(hessian, dtype=np.float64)
    if hessian.shape != (2, 2):
        raise ConfigError("ellipse_area needs a 2 x 2 Hessian", option="hessian")

    def _half_radius_squared(theta: float) -> float:
        u = np.array([np.cos(theta), np.sin(theta)])
        return level / float(u @ hessian @ u)

    return _quad(_half_radius_squared, 0.0, 2.0 * np.pi)


def kl_height_bound_check(model: QuadraticModel) -> KLCheckReport:
    """
    Checks ``KL(Q || P) <= h`` for a quadratic loss.

    P is uniform on the basin ``{L <= h}`` of volume V, and Q has density
    proportional to ``exp(-(L(w) - L0))`` on the same basin. In whitened
    coordinates the basin is a ball of radius ``R = sqrt(2 (h - L0))`` and the
    divergence reduces to the radial integrals

    ``KL = -ln W - ln I_{W-1} - 0.5 R^2 I_{W+1} / I_{W-1}``,

    with ``I_k`` the integral of ``s^k exp(-R^2 s^2 / 2)`` over [0, 1]. The
    height uses the exact volume identity.

    :param model: Hessian, minimum loss and basin volume.
    :type model: :class:`minimasmith.bound.models.QuadraticModel`
    :raises ConfigError: if the dimension exceeds 5.
    :raises NumericError: if the quadrature fails to converge.
    :rtype: :class:`minimasmith.bound.models.KLCheckReport`
    """
    dim = model.dim
    if dim > KL_CHECK_MAX_DIM:
        raise ConfigError(
            f"the KL check integrates up to W={KL_CHECK_MAX_DIM}, got {dim}",
            option="hessian",
        )

    inputs = BoundInputs(n=2, w=dim, volume=model.volume, l0=model.l0)
    height = basin_height(inputs, model.logdet, exact=True)
    radius_sq = 2.0 * (height - model.l0)

    def _moment(power: int) -> float:
        return _quad(lambda s: s**power * np.exp(-0.5 * radius_sq * s * s), 0.0, 1.0)

    inner = _moment(dim - 1)
    outer = _moment(dim + 1)
    kl = -np.log(dim) - np.log(inner) - 0.5 * radius_sq * outer / inner
    kl = max(float(kl), 0.0)

    holds = kl <= height + _KL_SLACK
    if not holds:
        log.warning(f"KL {kl:.6g} exceeds basin height {height:.6g}")

    return KLCheckReport(
        kl=kl, h=height, l0=model.l0, volume=model.volume, holds=holds
    )
