import logging
from dataclasses import replace

import numpy as np

from minimasmith.errors import NumericError, ShapeError
from minimasmith.regularizer.models import OptState


log = logging.getLogger(__name__)


def sgd_step(state: OptState, grad: np.ndarray) -> OptState:
    """
    One SGD update with momentum.

    Nesterov form: ``v <- mu v - lr g``; ``w <- w + mu v - lr g``.
    Classical form: ``v <- mu v - lr g``; ``w <- w + v``.
    Weight decay adds ``weight_decay * w`` to g first.

    :param state: current optimizer state.
    :type state: :class:`minimasmith.regularizer.models.OptState`
    :param grad: gradient at ``state.params``.
    :type grad: numpy.ndarray
    :raises ShapeError: if the gradient shape differs from the parameters.
    :raises NumericError: if the update is not finite.
    :returns: the advanced state.
    :rtype: :class:`minimasmith.regularizer.models.OptState`
    """
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != state.params.shape:
        raise ShapeError(
            f"gradient shape {grad.shape} does not match parameters {state.params.shape}",
            expected=state.params.shape,
            actual=grad.shape,
        )

    if state.weight_decay:
        grad = grad + state.weight_decay * state.params

    velocity = state.momentum * state.velocity - state.lr * grad
    if state.nesterov:
        params = state.params + state.momentum * velocity - state.lr * grad
    else:
        params = state.params + velocity

    if not (np.all(np.isfinite(params)) and np.all(np.isfinite(velocity))):
        log.error(f"non-finite update at step {state.step}")
        raise NumericError(f"SGD update at step {state.step} is not finite")

    return replace(state, params=params, velocity=velocity, step=state.step + 1)


def lr_at_epoch(base_lr: float, epoch: int, milestones, decay: float) -> float:
    """Learning rate after every milestone at or before ``epoch`` has applied its decay."""
    passed = sum(1 for m in milestones if m <= epoch)
    return base_lr * decay**passed
