import asyncio
import logging
import warnings
from typing import Dict, List, Sequence

import numpy as np
from scipy.stats import spearmanr

from minimasmith.experiment.data import draw_inputs, generate_synthetic, make_confusion_set
from minimasmith.experiment.errors import ScenarioError
from minimasmith.experiment.models import (
    SUMMARY_FIELDS,
    LevelSummary,
    RunRow,
    ScenarioResult,
)
from minimasmith.experiment.options import (
    ABConfig,
    ScenarioConfig,
    _ab_config_dict,
    _scenario_config_dict,
)
from minimasmith.job.job import ConcurrentJob, SequentialJob
from minimasmith.net.models import NetworkSpec
from minimasmith.regularizer.options import _reg_options_dict
from minimasmith.task.training import RunOutcome, RunPlan, TrainingRunTask


log = logging.getLogger(__name__)

# Convergence gate: final train accuracy and loss relative to the level minimum.
MIN_TRAIN_ACC = 0.99
MAX_LOSS_RATIO = 2.0

_LEVEL_SEED_STRIDE = 1000


def run_seed(base_seed: int, level_index: int, repeat: int) -> int:
    return base_seed + _LEVEL_SEED_STRIDE * level_index + repeat


async def _execute_plans(plans: Sequence[RunPlan], threads: int) -> List[RunOutcome]:
    job = SequentialJob() if threads == 1 else ConcurrentJob(max_concurrency=threads)
    for i, plan in enumerate(plans):
        job.add_task(TrainingRunTask(f"run-{i}-level-{plan.level}-repeat-{plan.repeat}", plan))

    await job.run(None)
    return job.outputs()


def execute_plans(plans: Sequence[RunPlan], threads: int = 1) -> List[RunOutcome]:
    """Runs the plans through a job and returns the outcomes in plan order."""
    return asyncio.run(_execute_plans(plans, threads))


def _spec_from(network: dict) -> NetworkSpec:
    return NetworkSpec(tuple(network["layer_sizes"]), network["activation"])


def _row(scenario: str, outcome: RunOutcome) -> RunRow:
    plan, record, report = outcome.plan, outcome.record, outcome.report
    nan = float("nan")

    def _metric(name: str) -> float:
        value = getattr(report, name) if report is not None else None
        return nan if value is None else float(value)

    return RunRow(
        scenario=scenario,
        level=float(plan.level),
        repeat=plan.repeat,
        seed=plan.seed,
        final_train_loss=record.final_train_loss if record else nan,
        final_train_acc=record.final_train_acc if record else nan,
        test_err=outcome.test_err,
        gamma_hat=_metric("gamma_hat"),
        robustness=_metric("robustness"),
        frobenius=_metric("frobenius"),
        spectral_radius=_metric("spectral_radius"),
        converged=False,
    )


def _apply_convergence_gate(rows: List[RunRow], outcomes: List[RunOutcome]) -> None:
    """
    A run converges when it finished with metrics, train accuracy >= 0.99 and a
    train loss within 2x of the smallest loss at its level.
    """
    for level in dict.fromkeys(row.level for row in rows):
        candidates = [
            (row, outcome)
            for row, outcome in zip(rows, outcomes)
            if row.level == level and outcome.failure is None and outcome.record is not None
        ]
        if not candidates:
            continue
        floor = min(row.final_train_loss for row, _ in candidates)
        for row, _ in candidates:
            row.converged = bool(
                row.final_train_acc >= MIN_TRAIN_ACC
                and row.final_train_loss <= MAX_LOSS_RATIO * floor
            )


def _std(values: np.ndarray) -> float:
    return float(np.std(values, ddof=1)) if values.shape[0] > 1 else 0.0


def summarize_levels(rows: Sequence[RunRow], require_all: bool = True) -> List[LevelSummary]:
    """
    Aggregates the converged rows of every level.

    :raises ScenarioError: if ``require_all`` is set and a level has no converged run.
    """
    summaries = []
    for level in dict.fromkeys(row.level for row in rows):
        at_level = [row for row in rows if row.level == level]
        converged = [row for row in at_level if row.converged]
        if not converged and require_all:
            log.error(f"no converged run at level {level}")
            raise ScenarioError(
                f"all {len(at_level)} runs at level {level} failed to converge", level=level
            )

        summary = LevelSummary(level=level, n_runs=len(at_level), n_converged=len(converged))
        for name in SUMMARY_FIELDS:
            values = np.array([getattr(row, name) for row in converged], dtype=np.float64)
            summary.mean[name] = float(np.mean(values)) if values.size else float("nan")
            summary.std[name] = _std(values) if values.size else float("nan")
        summaries.append(summary)

    return summaries


def _spearman(x: Sequence[float], y: Sequence[float]) -> float:
    x, y = np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)
    keep = np.isfinite(x) & np.isfinite(y)
    if keep.sum() < 2:
        return float("nan")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rho = spearmanr(x[keep], y[keep])[0]
    return float(rho)


def rank_correlations(
    rows: Sequence[RunRow], summaries: Sequence[LevelSummary]
) -> Dict[str, Dict[str, float]]:
    """Spearman correlation of each metric with the test error."""
    converged = [row for row in rows if row.converged]
    correlations = {}
    for name in ("gamma_hat", "robustness", "frobenius", "spectral_radius"):
        correlations[name] = {
            "per_run": _spearman(
                [getattr(r, name) for r in converged], [r.test_err for r in converged]
            ),
            "level_means": _spearman(
                [s.mean[name] for s in summaries], [s.mean["test_err"] for s in summaries]
            ),
        }
    return correlations


def _scenario_plans(opt: dict) -> List[RunPlan]:
    spec = _spec_from(opt["network"])
    train_set, test_set = generate_synthetic(opt["data"])
    scenario = opt["scenario"]
    reg = _reg_options_dict({"beta": 0.0}, opt["schedule"])

    plans = []
    for i, level in enumerate(opt["levels"]):
        for repeat in range(opt["repeats"]):
            seed = run_seed(opt["seed"], i, repeat)
            schedule = dict(opt["schedule"])
            run_train = train_set

            if scenario == "confusion":
                rng = np.random.default_rng(seed)
                size = int(round(level * len(train_set)))
                pool = draw_inputs(opt["data"], size, rng) if size else None
                run_train = make_confusion_set(train_set, size, spec.n_classes, rng, pool)
            elif scenario == "batch_size":
                schedule["batch_size"] = int(level)
            elif scenario == "augmentation":
                schedule["input_jitter"] = float(level)

            init_seed = opt["network"]["init_seed"]
            plans.append(
                RunPlan(
                    level=level,
                    repeat=repeat,
                    seed=seed,
                    init_seed=seed if init_seed is None else init_seed,
                    spec=spec,
                    train_set=run_train,
                    test_set=test_set,
                    schedule=schedule,
                    reg_options=reg,
                    sampler=opt["sampler"],
                    target_peak=opt["target_peak"],
                )
            )
    return plans


def _with_beta(reg: dict, beta: float) -> dict:
    return {**reg, "beta": float(beta)}


def _metadata(opt: dict) -> dict:
    metadata = {"config": opt, "lr_schedule": "fixed milestones", "convergence_min_acc": MIN_TRAIN_ACC}
    if opt.get("scenario") == "augmentation":
        metadata["adaptation"] = "Gaussian input jitter replaces image crop and flip augmentation"
    return metadata


def run_scenario(config: ScenarioConfig) -> ScenarioResult:
    """
    Trains ``repeats`` models per level, computes all four metrics at a
    calibrated temperature plus the test error, and aggregates the converged
    runs per level.

    Scenarios: ``confusion`` (levels are confusion-set fractions of n_train),
    ``batch_size`` (levels are batch sizes), ``augmentation`` (levels are input
    jitter standard deviations) and ``regularizer_ab`` (levels are the beta grid,
    see :func:`regularizer_ab_test`).

    :param config: scenario configuration.
    :type config: :class:`minimasmith.experiment.options.ScenarioConfig`
    :raises ConfigError: if the configuration is invalid.
    :raises ScenarioError: if every run at some level failed to converge.
    :rtype: :class:`minimasmith.experiment.models.ScenarioResult`
    """
    opt = _scenario_config_dict(config)
    if opt["scenario"] == "regularizer_ab":
        return regularizer_ab_test({**config, "betas": opt["levels"]})

    plans = _scenario_plans(opt)
    log.info(f"scenario {opt['scenario']}: {len(plans)} runs over {len(opt['levels'])} levels")
    outcomes = execute_plans(plans, opt["threads"])

    rows = [_row(opt["scenario"], outcome) for outcome in outcomes]
    _apply_convergence_gate(rows, outcomes)
    for row in rows:
        if not row.converged:
            log.warning(f"run level={row.level} repeat={row.repeat} excluded from aggregates")

    summaries = summarize_levels(rows)
    return ScenarioResult(
        scenario=opt["scenario"],
        rows=rows,
        summaries=summaries,
        correlations=rank_correlations(rows, summaries),
        metadata=_metadata(opt),
    )


def regularizer_ab_test(config: ABConfig) -> ScenarioResult:
    """
    Paired comparison of plain training (``beta = 0``, level 0) against one arm
    per beta of the grid. Repeat r of every arm shares seed ``seed + r`` and
    thereby the initial parameters and the batch order. The best arm is the
    beta with the lowest mean validation error on an independent draw of the
    generator.

    :param config: A/B configuration.
    :type config: :class:`minimasmith.experiment.options.ABConfig`
    :rtype: :class:`minimasmith.experiment.models.ScenarioResult`
    """
    opt = _ab_config_dict(config)
    spec = _spec_from(opt["network"])
    train_set, test_set = generate_synthetic(opt["data"])
    _, validation_set = generate_synthetic({**opt["data"], "seed": opt["data"]["seed"] + 1})

    plans = []
    for beta in [0.0] + opt["betas"]:
        for repeat in range(opt["repeats"]):
            seed = opt["seed"] + repeat
            init_seed = opt["network"]["init_seed"]
            plans.append(
                RunPlan(
                    level=beta,
                    repeat=repeat,
                    seed=seed,
                    init_seed=seed if init_seed is None else init_seed,
                    spec=spec,
                    train_set=train_set,
                    test_set=test_set,
                    schedule=opt["schedule"],
                    reg_options=_with_beta(opt["reg"], beta),
                    sampler=opt["sampler"],
                    target_peak=opt["target_peak"],
                    validation_set=validation_set,
                )
            )

    log.info(f"regularizer A/B: {len(plans)} runs, betas {opt['betas']}")
    outcomes = execute_plans(plans, opt["threads"])
    rows = [_row("regularizer_ab", outcome) for outcome in outcomes]
    _apply_convergence_gate(rows, outcomes)
    summaries = summarize_levels(rows, require_all=False)

    validation = {}
    for beta in opt["betas"]:
        errs = [
            o.validation_err
            for o, row in zip(outcomes, rows)
            if row.level == beta and row.converged
        ]
        validation[beta] = float(np.mean(errs)) if errs else float("nan")
    finite = {b: v for b, v in validation.items() if np.isfinite(v)}
    best_beta = min(finite, key=finite.get) if finite else None

    metadata = _metadata(opt)
    metadata.update({"best_beta": best_beta, "validation_err": validation})
    return ScenarioResult(
        scenario="regularizer_ab",
        rows=rows,
        summaries=summaries,
        correlations=rank_correlations(rows, summaries),
        metadata=metadata,
    )
