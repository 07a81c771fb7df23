from dataclasses import dataclass
from typing import List, Sequence, Tuple, Union

import numpy as np
from typing_extensions import Literal, Self

from minimasmith.errors import ConfigError, EmptyBatch, ShapeError


# Flat float64 vector of all W network parameters.
ParamVector = np.ndarray

Activation = Literal["relu", "tanh"]

_LABEL_SUM_TOL = 1e-12


def smooth_targets(classes: np.ndarray, n_classes: int, epsilon: float) -> np.ndarray:
    """
    Vectorized label smoothing: ``(1 - epsilon) * onehot + epsilon / n_classes`` per row.

    :param classes: class indices, shape (n,).
    :type classes: numpy.ndarray
    :param n_classes: number of classes K.
    :type n_classes: int
    :param epsilon: smoothing weight in [0, 1).
    :type epsilon: float
    :raises ConfigError: if epsilon is outside [0, 1).
    :returns: soft labels, shape (n, K).
    :rtype: numpy.ndarray
    """
    if not 0.0 <= epsilon < 1.0:
        raise ConfigError(
            f"label smoothing must be in [0, 1), got {epsilon}", option="epsilon"
        )

    classes = np.asarray(classes, dtype=np.int64)
    onehot = np.zeros((classes.shape[0], n_classes))
    onehot[np.arange(classes.shape[0]), classes] = 1.0
    if epsilon == 0.0:
        return onehot

    return (1.0 - epsilon) * onehot + epsilon / n_classes


@dataclass(frozen=True)
class NetworkSpec:
    """
    Shape of a fully connected feed-forward classifier.

    ``layer_sizes`` lists the input dimension d, the hidden widths and the
    number of classes K. Two entries describe plain softmax regression.
    Hidden layers use ``activation``; the last affine layer feeds a softmax.

    :param layer_sizes: layer widths, input first and classes last.
    :type layer_sizes: Sequence[int]
    :param activation: hidden activation, ``tanh`` (default) or ``relu``.
    :type activation: str
    :raises ConfigError: if the sizes or the activation fail validation.
    """

    layer_sizes: Tuple[int, ...]
    activation: Activation = "tanh"

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)

        if len(sizes) < 2:
            raise ConfigError(
                "layer_sizes needs at least an input and an output size",
                option="layer_sizes",
            )
        if any(s <= 0 for s in sizes):
            raise ConfigError(
                f"layer sizes must be positive, got {sizes}", option="layer_sizes"
            )
        if sizes[-1] < 2:
            raise ConfigError(
                "a classifier needs at least 2 output classes", option="layer_sizes"
            )
        if self.activation not in ("relu", "tanh"):
            raise ConfigError(
                f"unknown activation '{self.activation}'", option="activation"
            )

    @property
    def input_dim(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_classes(self) -> int:
        return self.layer_sizes[-1]

    @property
    def n_layers(self) -> int:
        """Number of affine layers."""
        return len(self.layer_sizes) - 1

    @property
    def param_count(self) -> int:
        """W, the sum over layers of (fan_in + 1) * fan_out."""
        return sum((fan_in + 1) * fan_out for fan_out, fan_in in self.layer_shapes())

    def layer_shapes(self) -> List[Tuple[int, int]]:
        """
        Returns ``(fan_out, fan_in)`` for every affine layer, input side first.

        :rtype: List[Tuple[int, int]]
        """
        return [
            (self.layer_sizes[i + 1], self.layer_sizes[i]) for i in range(self.n_layers)
        ]

    def unpack(self, params: np.ndarray) -> List[Tuple[np.ndarray, np.ndarray]]:
        """
        Splits parameters into per-layer ``(weight, bias)`` views.

        The last axis of ``params`` must have length W; any leading axes are
        kept, so a stack of G parameter vectors yields weights of shape
        (G, fan_out, fan_in) and biases of shape (G, fan_out).

        :param params: parameter vector(s), shape (..., W).
        :type params: numpy.ndarray
        :raises ShapeError: if the last axis is not W long.
        :rtype: List[Tuple[numpy.ndarray, numpy.ndarray]]
        """
        params = np.asarray(params)
        if params.shape[-1] != self.param_count:
            raise ShapeError(
                f"expected {self.param_count} parameters, got {params.shape[-1]}",
                expected=self.param_count,
                actual=params.shape[-1],
            )

        lead = params.shape[:-1]
        layers = []
        offset = 0
        for fan_out, fan_in in self.layer_shapes():
            n_weights = fan_out * fan_in
            weight = params[..., offset : offset + n_weights].reshape(
                lead + (fan_out, fan_in)
            )
            offset += n_weights
            bias = params[..., offset : offset + fan_out]
            offset += fan_out
            layers.append((weight, bias))

        return layers

    def check_params(self, params: ParamVector) -> ParamVector:
        """
        Validates a single parameter vector and returns it as float64.

        :raises ShapeError: if the length is not W.
        :raises ConfigError: if any entry is not finite.
        """
        params = np.asarray(params, dtype=np.float64)
        if params.ndim != 1 or params.shape[0] != self.param_count:
            raise ShapeError(
                f"expected a parameter vector of length {self.param_count}, got shape {params.shape}",
                expected=(self.param_count,),
                actual=params.shape,
            )
        if not np.all(np.isfinite(params)):
            raise ConfigError("parameter vector has non-finite entries", option="params")

        return params


@dataclass(frozen=True)
class LabeledSample:
    """One training example: input x, soft label y and its one-hot class index."""

    x: np.ndarray
    y: np.ndarray
    y_onehot: int


@dataclass(frozen=True, eq=False)
class Dataset:
    """
    A labelled sample set stored column-wise.

    :param features: inputs, shape (N, d).
    :type features: numpy.ndarray
    :param labels: probability-vector labels, shape (N, K).
    :type labels: numpy.ndarray
    :raises EmptyBatch: if N is 0.
    :raises ShapeError: if features and labels disagree on N.
    :raises ConfigError: if a label row is not a probability vector.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        features = np.array(self.features, dtype=np.float64)
        labels = np.array(self.labels, dtype=np.float64)

        if features.size == 0 or labels.size == 0:
            raise EmptyBatch("a dataset needs at least one sample")
        if features.ndim != 2 or labels.ndim != 2:
            raise ShapeError("features and labels must be 2-D arrays")
        if features.shape[0] != labels.shape[0]:
            raise ShapeError(
                f"{features.shape[0]} feature rows but {labels.shape[0]} label rows",
                expected=features.shape[0],
                actual=labels.shape[0],
            )
        if np.any(labels < 0.0) or np.any(
            np.abs(labels.sum(axis=1) - 1.0) > _LABEL_SUM_TOL
        ):
            raise ConfigError(
                "every label must be a probability vector", option="labels"
            )

        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_classes(
        cls, features: np.ndarray, classes: Sequence[int], n_classes: int
    ) -> Self:
        """
        Builds a dataset with hard one-hot labels.

        :raises ConfigError: if a class index is outside [0, n_classes).
        """
        classes = np.asarray(classes, dtype=np.int64)
        if classes.size and (classes.min() < 0 or classes.max() >= n_classes):
            raise ConfigError(
                f"class indices must be in [0, {n_classes})", option="classes"
            )

        return cls(features=features, labels=smooth_targets(classes, n_classes, 0.0))

    def __len__(self) -> int:
        return self.features.shape[0]

    def __getitem__(self, index: int) -> LabeledSample:
        return LabeledSample(
            x=self.features[index],
            y=self.labels[index],
            y_onehot=int(np.argmax(self.labels[index])),
        )

    @property
    def n_samples(self) -> int:
        return len(self)

    @property
    def input_dim(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return self.labels.shape[1]

    @property
    def samples(self) -> List[LabeledSample]:
        return [self[i] for i in range(len(self))]

    @property
    def onehot(self) -> np.ndarray:
        """Class index per sample; ties go to the lowest index."""
        return np.argmax(self.labels, axis=1)

    def onehot_labels(self) -> np.ndarray:
        """The one-hot label matrix built from :attr:`onehot`."""
        return smooth_targets(self.onehot, self.n_classes, 0.0)

    def targets(self, use_onehot: bool) -> np.ndarray:
        return self.onehot_labels() if use_onehot else self.labels

    def subset(self, indices: Union[Sequence[int], np.ndarray]) -> Self:
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(features=self.features[indices], labels=self.labels[indices])

    def concat(self, other: "Dataset") -> Self:
        if other.input_dim != self.input_dim or other.n_classes != self.n_classes:
            raise ShapeError("datasets disagree on input dimension or class count")

        return Dataset(
            features=np.concatenate([self.features, other.features]),
            labels=np.concatenate([self.labels, other.labels]),
        )

    def with_features(self, features: np.ndarray) -> Self:
        return Dataset(features=features, labels=self.labels)

    def smoothed(self, epsilon: float) -> Self:
        """Returns a copy whose labels are the smoothed one-hot labels."""
        return Dataset(
            features=self.features,
            labels=smooth_targets(self.onehot, self.n_classes, epsilon),
        )

    def check_against(self, spec: NetworkSpec) -> None:
        """
        :raises ShapeError: if d or K differ from the network's.
        """
        if self.input_dim != spec.input_dim or self.n_classes != spec.n_classes:
            raise ShapeError(
                f"dataset has d={self.input_dim}, K={self.n_classes}; network expects d={spec.input_dim}, K={spec.n_classes}",
                expected=(spec.input_dim, spec.n_classes),
                actual=(self.input_dim, self.n_classes),
            )


@dataclass
class ForwardCache:
    """
    Intermediates of a forward pass, kept for reverse-mode accumulation.

    ``activations[0]`` is the input; ``activations[l]`` is the output of
    hidden layer l. ``pre_activations[-1]`` holds the logits.
    """

    pre_activations: List[np.ndarray]
    activations: List[np.ndarray]
    log_probs: np.ndarray
    probs: np.ndarray
    temperature: float = 1.0

    @property
    def logits(self) -> np.ndarray:
        return self.pre_activations[-1]
