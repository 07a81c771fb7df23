import logging
from typing import Optional, Tuple

import numpy as np

from minimasmith.errors import ConfigError
from minimasmith.experiment.options import SyntheticSpec, _synthetic_spec_dict
from minimasmith.net.models import Dataset, smooth_targets


log = logging.getLogger(__name__)


def _balanced_classes(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    classes = np.arange(n) % k
    return rng.permutation(classes)


def _gaussian_mixture(opt: dict, classes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    angles = 2.0 * np.pi * classes / opt["k"]
    means = np.zeros((classes.shape[0], opt["d"]))
    means[:, 0] = opt["separation"] * np.cos(angles)
    means[:, 1] = opt["separation"] * np.sin(angles)
    return means + opt["noise_std"] * rng.standard_normal(means.shape)


def _spirals(opt: dict, classes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    t = rng.uniform(0.1, 1.0, size=classes.shape[0])
    angles = 2.0 * np.pi * classes / opt["k"] + 3.0 * np.pi * t
    points = opt["separation"] * t[:, None] * np.stack([np.cos(angles), np.sin(angles)], axis=1)
    return points + opt["noise_std"] * rng.standard_normal(points.shape)


_GENERATORS = {"gaussian_mixture": _gaussian_mixture, "spirals": _spirals}


def draw_inputs(spec: Optional[SyntheticSpec], n: int, rng: np.random.Generator) -> np.ndarray:
    """
    Draws ``n`` fresh inputs from the generator, with balanced latent classes.

    :rtype: numpy.ndarray
    """
    opt = _synthetic_spec_dict(spec)
    classes = _balanced_classes(n, opt["k"], rng)
    return _GENERATORS[opt["generator"]](opt, classes, rng)


def _draw(opt: dict, n: int, rng: np.random.Generator) -> Dataset:
    classes = _balanced_classes(n, opt["k"], rng)
    features = _GENERATORS[opt["generator"]](opt, classes, rng)
    return Dataset(features=features, labels=smooth_targets(classes, opt["k"], 0.0))


def generate_synthetic(spec: Optional[SyntheticSpec] = None) -> Tuple[Dataset, Dataset]:
    """
    Generates a class-balanced train and test set.

    The train and test sets are independent draws from child streams of
    ``seed``; class counts differ by at most one.

    :param spec: generator settings; see :class:`minimasmith.experiment.options.SyntheticSpec`.
    :type spec: :class:`minimasmith.experiment.options.SyntheticSpec`
    :raises ConfigError: if the settings are invalid.
    :returns: ``(train, test)``.
    :rtype: Tuple[:class:`minimasmith.net.models.Dataset`, :class:`minimasmith.net.models.Dataset`]
    """
    opt = _synthetic_spec_dict(spec)
    train_rng, test_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(opt["seed"]).spawn(2)
    )
    log.debug(f"generating synthetic data: {opt}")

    return _draw(opt, opt["n_train"], train_rng), _draw(opt, opt["n_test"], test_rng)


def make_confusion_set(
    train: Dataset,
    size: int,
    k: int,
    rng: np.random.Generator,
    pool: Optional[np.ndarray] = None,
) -> Dataset:
    """
    Appends ``size`` samples with labels drawn uniformly over ``k`` classes,
    independently of their inputs.

    :param train: clean training set.
    :type train: :class:`minimasmith.net.models.Dataset`
    :param size: number of confusion samples.
    :type size: int
    :param k: number of classes.
    :type k: int
    :param rng: generator of the random labels.
    :type rng: numpy.random.Generator
    :param pool: confusion inputs, at least ``size`` rows; the first ``size`` are used.
    :type pool: numpy.ndarray
    :raises ConfigError: if size is negative or the pool is too small.
    :rtype: :class:`minimasmith.net.models.Dataset`
    """
    if size < 0:
        raise ConfigError(f"confusion size must be non-negative, got {size}", option="size")
    if size == 0:
        return train
    if pool is None or len(pool) < size:
        raise ConfigError(
            f"a confusion set of {size} needs at least {size} pool inputs", option="pool"
        )
    if k != train.n_classes:
        raise ConfigError(
            f"k={k} differs from the training set's {train.n_classes} classes", option="k"
        )

    labels = rng.integers(0, k, size=size)
    confusion = Dataset(
        features=np.asarray(pool)[:size], labels=smooth_targets(labels, k, 0.0)
    )
    return train.concat(confusion)
