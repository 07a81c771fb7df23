import logging
import time
from dataclasses import replace
from typing import Optional, Tuple

import numpy as np

from minimasmith.errors import ConfigError, NumericError
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import accuracy, dataset_loss
from minimasmith.regularizer.errors import DivergenceError, IndivisibleBatch
from minimasmith.regularizer.models import EpochRecord, OptState, RunRecord
from minimasmith.regularizer.objective import NetworkObjective
from minimasmith.regularizer.optimizer import lr_at_epoch, sgd_step
from minimasmith.regularizer.options import (
    RegOptions,
    TrainSchedule,
    _reg_options_dict,
    _train_schedule_dict,
)
from minimasmith.regularizer.regularizer import regularized_grad


log = logging.getLogger(__name__)

# Training loss above which a run counts as diverged.
DIVERGENCE_LOSS = 1e6


def _check_batching(n_samples: int, schedule: dict, reg: dict) -> int:
    n_batches = n_samples // schedule["batch_size"]
    if n_batches == 0:
        raise ConfigError(
            f"batch_size {schedule['batch_size']} exceeds the {n_samples} training samples",
            option="batch_size",
        )
    if reg["beta"] > 0.0 and schedule["batch_size"] % reg["m"] != 0:
        raise IndivisibleBatch(
            f"batch_size {schedule['batch_size']} is not a multiple of m={reg['m']}",
            batch_size=schedule["batch_size"],
            m=reg["m"],
        )
    return n_batches


def train(
    spec: NetworkSpec,
    init_params: ParamVector,
    dataset: Dataset,
    schedule: Optional[TrainSchedule] = None,
    reg_options: Optional[RegOptions] = None,
    seed: int = 0,
    test_set: Optional[Dataset] = None,
) -> Tuple[ParamVector, RunRecord]:
    """
    Mini-batch SGD with momentum, optionally regularized by the trace-norm
    surrogate once ``epoch >= activate_after_epoch``.

    Each epoch shuffles the training set and drops the last short batch. The
    learning rate is divided at the schedule milestones. Labels are smoothed
    with ``label_smoothing`` for the training loss, and Gaussian input jitter
    with standard deviation ``input_jitter`` is added to every batch. The
    shuffle, sub-batch split and jitter streams are independent children of
    ``seed``, so a run without regularization consumes exactly the same
    random numbers as a plain SGD run.

    :param spec: network shape.
    :type spec: :class:`minimasmith.net.models.NetworkSpec`
    :param init_params: starting parameters.
    :type init_params: numpy.ndarray
    :param dataset: training set.
    :type dataset: :class:`minimasmith.net.models.Dataset`
    :param schedule: SGD schedule.
    :type schedule: :class:`minimasmith.regularizer.options.TrainSchedule`
    :param reg_options: regularizer options; ``beta == 0`` trains plainly.
    :type reg_options: :class:`minimasmith.regularizer.options.RegOptions`
    :param seed: seed of all randomness in the run.
    :type seed: int
    :param test_set: held-out set for the per-epoch test error.
    :type test_set: :class:`minimasmith.net.models.Dataset`
    :raises ConfigError: if the batch size exceeds the dataset.
    :raises IndivisibleBatch: if regularization is on and M does not divide the batch size.
    :raises DivergenceError: if the training loss exceeds 1e6 or stops being finite.
    :returns: the final parameters and the run record.
    :rtype: Tuple[numpy.ndarray, :class:`minimasmith.regularizer.models.RunRecord`]
    """
    opt = _train_schedule_dict(schedule)
    reg = _reg_options_dict(reg_options, opt)
    dataset.check_against(spec)
    n_batches = _check_batching(len(dataset), opt, reg)

    train_set = dataset.smoothed(opt["label_smoothing"])
    objective = NetworkObjective(spec)
    shuffle_rng, split_rng, jitter_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)
    )

    state = OptState.initial(
        spec.check_params(init_params),
        lr=opt["lr"],
        momentum=opt["momentum"],
        nesterov=opt["nesterov"],
        weight_decay=opt["weight_decay"],
    )
    record = RunRecord(seed=seed)
    batch_size = opt["batch_size"]

    log.debug(f"training W={spec.param_count} on N={len(dataset)}, options: {opt}, reg: {reg}")

    for epoch in range(opt["epochs"]):
        lr = lr_at_epoch(opt["lr"], epoch, opt["milestones"], opt["lr_decay"])
        state = replace(state, lr=lr, epoch=epoch)
        active = reg["beta"] > 0.0 and epoch >= reg["activate_after_epoch"]

        order = shuffle_rng.permutation(len(train_set))
        elapsed = 0.0
        for b in range(n_batches):
            batch = train_set.subset(order[b * batch_size : (b + 1) * batch_size])
            if opt["input_jitter"] > 0.0:
                batch = batch.with_features(
                    batch.features
                    + jitter_rng.normal(0.0, opt["input_jitter"], batch.features.shape)
                )

            started = time.perf_counter()
            try:
                if active:
                    grad = regularized_grad(objective, state.params, batch, reg, split_rng)
                else:
                    _, grad = objective.loss_and_grad(state.params, batch)
                state = sgd_step(state, grad)
            except NumericError as err:
                log.error(f"training diverged in epoch {epoch}: {err}")
                raise DivergenceError(
                    f"training diverged in epoch {epoch}", epoch=epoch, loss=float("nan")
                ) from err
            elapsed += time.perf_counter() - started

        train_loss = dataset_loss(spec, state.params, train_set)
        if not np.isfinite(train_loss) or train_loss > DIVERGENCE_LOSS:
            log.error(f"training loss {train_loss} in epoch {epoch}")
            raise DivergenceError(
                f"training loss {train_loss} in epoch {epoch}", epoch=epoch, loss=train_loss
            )

        record.epochs.append(
            EpochRecord(
                epoch=epoch,
                train_loss=train_loss,
                train_acc=accuracy(spec, state.params, dataset),
                test_err=(
                    1.0 - accuracy(spec, state.params, test_set)
                    if test_set is not None
                    else float("nan")
                ),
                lr=lr,
                reg_active=active,
                step_ms=1000.0 * elapsed / n_batches,
            )
        )
        log.debug(
            f"epoch {epoch}: loss={train_loss:.6f}, acc={record.epochs[-1].train_acc:.4f}, reg={active}"
        )

    return state.params, record


def measure_step_cost(
    spec: NetworkSpec,
    params: ParamVector,
    batch: Dataset,
    reg_options: Optional[RegOptions] = None,
    repeats: int = 20,
    seed: int = 0,
) -> dict:
    """
    Times plain and regularized gradient evaluations on one batch.

    Each variant runs once to warm up and then ``repeats`` times; the
    median wall-clock times are reported with their ratio.

    :rtype: dict
    """
    reg = _reg_options_dict(reg_options)
    if reg["beta"] == 0.0:
        reg["beta"] = 1.0
    objective = NetworkObjective(spec)
    rng = np.random.default_rng(seed)

    def _time(func) -> float:
        func()
        samples = []
        for _ in range(repeats):
            started = time.perf_counter()
            func()
            samples.append(time.perf_counter() - started)
        return float(np.median(samples))

    plain = _time(lambda: objective.loss_and_grad(params, batch))
    regularized = _time(lambda: regularized_grad(objective, params, batch, reg, rng))

    log.info(f"step cost: plain={plain * 1e3:.3f}ms, regularized={regularized * 1e3:.3f}ms")
    return {
        "plain_ms": 1000.0 * plain,
        "regularized_ms": 1000.0 * regularized,
        "ratio": regularized / plain,
    }
