import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_softmax

from minimasmith.errors import ConfigError, EmptyBatch, NumericError, ShapeError
from minimasmith.net.models import (
    Dataset,
    ForwardCache,
    LabeledSample,
    NetworkSpec,
    ParamVector,
    smooth_targets,
)


log = logging.getLogger(__name__)

# Upper bound on samples handled per vectorized Jacobian chunk.
_JACOBIAN_CHUNK = 1024


@dataclass
class _GroupedCache:
    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    log_probs: np.ndarray


def init_params(spec: NetworkSpec, seed: int) -> ParamVector:
    """
    Draws initial parameters: zero-mean Gaussian weights with std ``sqrt(2 / fan_in)``
    and zero biases.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param seed: PRNG seed.
    :type seed: int
    :returns: parameter vector of length W.
    :rtype: numpy.ndarray
    """
    rng = np.random.default_rng(seed)
    parts = []
    for fan_out, fan_in in spec.layer_shapes():
        parts.append(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_out, fan_in)).ravel()
        )
        parts.append(np.zeros(fan_out))

    return np.concatenate(parts)


def _activate(spec: NetworkSpec, z: np.ndarray) -> np.ndarray:
    if spec.activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activate_grad(spec: NetworkSpec, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    if spec.activation == "tanh":
        return 1.0 - a * a
    return (z > 0.0).astype(np.float64)


def _check_temperature(temperature: float) -> None:
    if not np.isfinite(temperature) or temperature <= 0.0:
        raise ConfigError(
            f"temperature must be a positive finite number, got {temperature}",
            option="temperature",
        )


def _forward_grouped(
    spec: NetworkSpec, params: np.ndarray, features: np.ndarray, temperature: float
) -> _GroupedCache:
    """
    Forward pass over G groups of b inputs.

    ``params`` has shape (Gp, W) with Gp either 1 (shared) or G;
    ``features`` has shape (G, b, d).
    """
    layers = spec.unpack(params)
    pre_activations = []
    activations = [features]

    a = features
    for idx, (weight, bias) in enumerate(layers):
        z = np.matmul(a, np.swapaxes(weight, -1, -2)) + bias[:, None, :]
        pre_activations.append(z)
        if idx < len(layers) - 1:
            a = _activate(spec, z)
            activations.append(a)

    log_probs = log_softmax(pre_activations[-1] / temperature, axis=-1)
    return _GroupedCache(pre_activations, activations, log_probs)


def _backward_grouped(
    spec: NetworkSpec, params: np.ndarray, cache: _GroupedCache, delta: np.ndarray
) -> np.ndarray:
    """
    Reverse-mode accumulation from the logit adjoint ``delta`` of shape
    (..., G, b, K); extra leading axes stack independent adjoints.

    Returns one gradient per group, shape (..., G, W), summed over the b rows.
    """
    layers = spec.unpack(params)
    lead = delta.shape[:-2]
    layer_grads = [None] * len(layers)

    for idx in reversed(range(len(layers))):
        weight, _ = layers[idx]
        grad_weight = np.matmul(np.swapaxes(delta, -1, -2), cache.activations[idx])
        grad_bias = delta.sum(axis=-2)
        layer_grads[idx] = np.concatenate(
            [grad_weight.reshape(lead + (-1,)), grad_bias], axis=-1
        )
        if idx > 0:
            delta = np.matmul(delta, weight) * _activate_grad(
                spec, cache.pre_activations[idx - 1], cache.activations[idx]
            )

    return np.concatenate(layer_grads, axis=-1)


def grouped_loss_and_grad(
    spec: NetworkSpec,
    params: np.ndarray,
    features: np.ndarray,
    targets: Sequence[np.ndarray],
    temperature: float = 1.0,
) -> List[Tuple[np.ndarray, np.ndarray]]:
    """
    Mean cross-entropy and its gradient for G groups sharing one forward pass.

    Each group g evaluates its own b inputs ``features[g]`` at parameters
    ``params[g]`` (or at the single shared row when ``params`` has one row).
    Several target sets may be given; the forward pass is shared and their
    adjoints go through a single stacked backward pass.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameters, shape (W,), (1, W) or (G, W).
    :type params: numpy.ndarray
    :param features: inputs, shape (G, b, d).
    :type features: numpy.ndarray
    :param targets: one or more target arrays of shape (G, b, K).
    :type targets: Sequence[numpy.ndarray]
    :param temperature: logit temperature.
    :type temperature: float
    :raises ShapeError: if the shapes disagree.
    :returns: for every target set, ``(losses, grads)`` with shapes (G,) and (G, W).
    :rtype: List[Tuple[numpy.ndarray, numpy.ndarray]]
    """
    _check_temperature(temperature)
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    features = np.asarray(features, dtype=np.float64)

    if features.ndim != 3 or features.shape[-1] != spec.input_dim:
        raise ShapeError(
            f"features must have shape (G, b, {spec.input_dim}), got {features.shape}",
            expected=spec.input_dim,
            actual=features.shape,
        )
    if features.shape[1] == 0:
        raise EmptyBatch("cannot average over an empty group")
    if params.shape[0] not in (1, features.shape[0]):
        raise ShapeError(
            f"{params.shape[0]} parameter rows for {features.shape[0]} groups",
            expected=features.shape[0],
            actual=params.shape[0],
        )

    cache = _forward_grouped(spec, params, features, temperature)
    probs = np.exp(cache.log_probs)
    group_size = features.shape[1]

    losses, deltas = [], []
    for target in targets:
        target = np.asarray(target, dtype=np.float64)
        if target.shape != probs.shape:
            raise ShapeError(
                f"targets must have shape {probs.shape}, got {target.shape}",
                expected=probs.shape,
                actual=target.shape,
            )
        losses.append(-np.sum(target * cache.log_probs, axis=-1).mean(axis=-1))
        deltas.append((probs - target) / (temperature * group_size))

    grads = _backward_grouped(spec, params, cache, np.stack(deltas))
    return list(zip(losses, grads))


def forward(
    spec: NetworkSpec,
    params: ParamVector,
    x: np.ndarray,
    temperature: float = 1.0,
) -> ForwardCache:
    """
    Evaluates the network on one input vector or on an (n, d) batch.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameter vector of length W.
    :type params: numpy.ndarray
    :param x: input of shape (d,) or (n, d).
    :type x: numpy.ndarray
    :param temperature: logits are divided by this before the softmax.
    :type temperature: float
    :raises ShapeError: on any dimension mismatch.
    :returns: softmax output with the cached intermediates.
    :rtype: :class:`minimasmith.net.models.ForwardCache`
    """
    _check_temperature(temperature)
    params = spec.check_params(params)
    x = np.asarray(x, dtype=np.float64)

    if x.ndim not in (1, 2) or x.shape[-1] != spec.input_dim:
        raise ShapeError(
            f"input must have trailing dimension {spec.input_dim}, got shape {x.shape}",
            expected=spec.input_dim,
            actual=x.shape,
        )

    single = x.ndim == 1
    batch = x[None, None, :] if single else x[None, :, :]
    cache = _forward_grouped(spec, params[None, :], batch, temperature)

    def _strip(arr: np.ndarray) -> np.ndarray:
        return arr[0, 0] if single else arr[0]

    log_probs = _strip(cache.log_probs)
    return ForwardCache(
        pre_activations=[_strip(z) for z in cache.pre_activations],
        activations=[_strip(a) for a in cache.activations],
        log_probs=log_probs,
        probs=np.exp(log_probs),
        temperature=temperature,
    )


def smooth_labels(y_onehot: int, n_classes: int, epsilon: float) -> np.ndarray:
    """
    Label smoothing of a single class index: ``(1 - epsilon) * onehot + epsilon / K``.

    :raises ConfigError: if epsilon is outside [0, 1) or the class index is invalid.
    :rtype: numpy.ndarray
    """
    if not 0 <= y_onehot < n_classes:
        raise ConfigError(
            f"class index {y_onehot} outside [0, {n_classes})", option="y_onehot"
        )

    return smooth_targets(np.array([y_onehot]), n_classes, epsilon)[0]


def loss(probs: np.ndarray, y: np.ndarray) -> float:
    """
    Cross entropy ``-sum_i y_i ln probs_i``; terms with ``y_i = 0`` contribute 0.

    :raises ShapeError: if the vectors differ in length.
    :rtype: float
    """
    probs = np.asarray(probs, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if probs.shape != y.shape:
        raise ShapeError(
            "probs and y must have the same shape", expected=y.shape, actual=probs.shape
        )

    with np.errstate(divide="ignore"):
        terms = np.where(y > 0.0, y * np.log(probs), 0.0)
    return float(-terms.sum())


def entropy(y: np.ndarray) -> float:
    """Shannon entropy of a probability vector, the floor of :func:`loss`."""
    return loss(np.where(np.asarray(y) > 0.0, y, 1.0), y)


def _sample_target(sample: LabeledSample, n_classes: int, use_onehot: bool) -> np.ndarray:
    if use_onehot:
        return smooth_targets(np.array([sample.y_onehot]), n_classes, 0.0)[0]
    return np.asarray(sample.y, dtype=np.float64)


def _check_finite(grad: np.ndarray, what: str) -> np.ndarray:
    if not np.all(np.isfinite(grad)):
        log.error(f"non-finite values in {what}")
        raise NumericError(f"non-finite values in {what}")
    return grad


def per_sample_grad(
    spec: NetworkSpec,
    params: ParamVector,
    sample: LabeledSample,
    use_onehot: bool = False,
    temperature: float = 1.0,
) -> np.ndarray:
    """
    Gradient of ``loss(f_w(x), target)`` with respect to all W parameters, where
    the target is the one-hot label when ``use_onehot`` is set and the soft label
    otherwise.

    :raises ShapeError: if the sample does not fit the network.
    :raises NumericError: if the gradient has non-finite entries.
    :rtype: numpy.ndarray
    """
    params = spec.check_params(params)
    target = _sample_target(sample, spec.n_classes, use_onehot)
    x = np.asarray(sample.x, dtype=np.float64)
    if x.shape != (spec.input_dim,) or target.shape != (spec.n_classes,):
        raise ShapeError("sample does not match the network dimensions")

    ((_, grads),) = grouped_loss_and_grad(
        spec, params, x[None, None, :], [target[None, None, :]], temperature
    )
    return _check_finite(grads[0], "per-sample gradient")


def per_sample_jacobian(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    indices: Optional[Sequence[int]] = None,
    use_onehot: bool = True,
    temperature: float = 1.0,
) -> np.ndarray:
    """
    Stacks per-sample loss gradients as the rows of an (n, W) Jacobian.

    :param indices: rows of ``dataset`` to use; all rows when omitted.
    :raises NumericError: if any gradient has non-finite entries.
    :rtype: numpy.ndarray
    """
    params = spec.check_params(params)
    dataset.check_against(spec)
    indices = np.arange(len(dataset)) if indices is None else np.asarray(indices)

    features = dataset.features[indices]
    targets = dataset.targets(use_onehot)[indices]

    rows = []
    for start in range(0, len(indices), _JACOBIAN_CHUNK):
        stop = start + _JACOBIAN_CHUNK
        ((_, grads),) = grouped_loss_and_grad(
            spec,
            params,
            features[start:stop, None, :],
            [targets[start:stop, None, :]],
            temperature,
        )
        rows.append(grads)

    return _check_finite(np.concatenate(rows, axis=0), "per-sample Jacobian")


def class_jacobian(
    spec: NetworkSpec, params: ParamVector, x: np.ndarray, temperature: float = 1.0
) -> np.ndarray:
    """
    Gradients of every class loss ``-ln f_w(x)_i`` at one input, as a (K, W) matrix.

    :rtype: numpy.ndarray
    """
    params = spec.check_params(params)
    x = np.asarray(x, dtype=np.float64)
    n_classes = spec.n_classes
    features = np.broadcast_to(x, (n_classes, 1, spec.input_dim))

    ((_, grads),) = grouped_loss_and_grad(
        spec, params, features, [np.eye(n_classes)[:, None, :]], temperature
    )
    return _check_finite(grads, "class Jacobian")


def batch_loss_and_grad(
    spec: NetworkSpec,
    params: ParamVector,
    batch: Dataset,
    use_onehot: bool = False,
    temperature: float = 1.0,
) -> Tuple[float, np.ndarray]:
    """
    Mean loss and mean gradient over a batch.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param params: parameter vector.
    :type params: numpy.ndarray
    :param batch: the samples to average over.
    :type batch: :class:`minimasmith.net.models.Dataset`
    :param use_onehot: use one-hot targets instead of the soft labels.
    :type use_onehot: bool
    :raises EmptyBatch: if the batch holds no samples.
    :raises NumericError: if the gradient has non-finite entries.
    :returns: ``(loss, grad)``.
    :rtype: Tuple[float, numpy.ndarray]
    """
    if batch is None or len(batch) == 0:
        raise EmptyBatch("cannot average over an empty batch")

    params = spec.check_params(params)
    batch.check_against(spec)

    ((losses, grads),) = grouped_loss_and_grad(
        spec,
        params,
        batch.features[None, :, :],
        [batch.targets(use_onehot)[None, :, :]],
        temperature,
    )
    return float(losses[0]), _check_finite(grads[0], "batch gradient")


def dataset_loss(
    spec: NetworkSpec,
    params: ParamVector,
    dataset: Dataset,
    use_onehot: bool = False,
    temperature: float = 1.0,
) -> float:
    """Mean cross-entropy over ``dataset`` without computing gradients."""
    cache = forward(spec, params, dataset.features, temperature)
    targets = dataset.targets(use_onehot)
    return float(-np.sum(targets * cache.log_probs, axis=1).mean())


def accuracy(spec: NetworkSpec, params: ParamVector, dataset: Dataset) -> float:
    """Fraction of samples whose most probable class equals the one-hot label."""
    cache = forward(spec, params, dataset.features)
    return float(np.mean(np.argmax(cache.log_probs, axis=1) == dataset.onehot))


def input_jacobian(
    spec: NetworkSpec,
    params: ParamVector,
    x: np.ndarray,
    temperature: float = 1.0,
) -> np.ndarray:
    """
    Jacobian of the softmax output with respect to the input, shape (K, d).
    Row i is the input gradient of output probability i.

    :raises ShapeError: if x is not a single input of length d.
    :rtype: numpy.ndarray
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (spec.input_dim,):
        raise ShapeError(
            f"input must have shape ({spec.input_dim},), got {x.shape}",
            expected=(spec.input_dim,),
            actual=x.shape,
        )

    cache = forward(spec, params, x, temperature)
    probs = cache.probs
    jac = (np.diag(probs) - np.outer(probs, probs)) / temperature

    layers = spec.unpack(spec.check_params(params))
    for idx in reversed(range(len(layers))):
        weight, _ = layers[idx]
        jac = jac @ weight
        if idx > 0:
            jac = jac * _activate_grad(
                spec, cache.pre_activations[idx - 1], cache.activations[idx]
            )

    return jac