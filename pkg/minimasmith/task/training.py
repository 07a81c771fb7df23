import logging
from dataclasses import dataclass
from typing import Any, Optional

from minimasmith.metrics.errors import CalibrationError, SingularGram
from minimasmith.metrics.models import MetricReport
from minimasmith.metrics.report import calibrated_metric_report
from minimasmith.net.models import Dataset, NetworkSpec, ParamVector
from minimasmith.net.network import accuracy, init_params
from minimasmith.regularizer.errors import DivergenceError
from minimasmith.regularizer.models import RunRecord
from minimasmith.regularizer.train import train
from minimasmith.task.base import ThreadedTask


log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class RunPlan:
    """
    Everything one training run needs. Metrics are computed on ``train_set``
    at the temperature calibrated to ``target_peak`` (no calibration when `None`).
    """

    level: float
    repeat: int
    seed: int
    init_seed: int
    spec: NetworkSpec
    train_set: Dataset
    test_set: Dataset
    schedule: dict
    reg_options: dict
    sampler: dict
    target_peak: Optional[float] = 0.99
    validation_set: Optional[Dataset] = None
    compute_metrics: bool = True


@dataclass
class RunOutcome:
    plan: RunPlan
    params: Optional[ParamVector]
    record: Optional[RunRecord]
    report: Optional[MetricReport]
    validation_err: float = float("nan")
    failure: Optional[str] = None

    @property
    def test_err(self) -> float:
        return self.record.final_test_err if self.record else float("nan")


def execute_plan(plan: RunPlan) -> RunOutcome:
    """
    Trains one model and computes its metrics. Divergence, singular Gram
    matrices and failed calibration are recorded as the run's failure
    instead of raised.
    """
    params = init_params(plan.spec, plan.init_seed)
    try:
        params, record = train(
            plan.spec,
            params,
            plan.train_set,
            plan.schedule,
            plan.reg_options,
            seed=plan.seed,
            test_set=plan.test_set,
        )
    except DivergenceError as err:
        log.warning(f"run level={plan.level} repeat={plan.repeat} diverged: {err}")
        return RunOutcome(plan=plan, params=None, record=None, report=None, failure=str(err))

    validation_err = (
        1.0 - accuracy(plan.spec, params, plan.validation_set)
        if plan.validation_set is not None
        else float("nan")
    )
    outcome = RunOutcome(
        plan=plan, params=params, record=record, report=None, validation_err=validation_err
    )
    if not plan.compute_metrics:
        return outcome

    try:
        outcome.report = calibrated_metric_report(
            plan.spec, params, plan.train_set, plan.sampler, plan.target_peak
        )
    except (SingularGram, CalibrationError) as err:
        log.warning(f"no metrics for level={plan.level} repeat={plan.repeat}: {err}")
        outcome.failure = str(err)

    return outcome


class TrainingRunTask(ThreadedTask[Any, RunOutcome]):
    """
    Runs :func:`execute_plan` for one plan on a worker thread, so that a
    :class:`minimasmith.job.job.ConcurrentJob` can overlap independent runs.
    The task input is ignored; everything comes from the plan.

    :param name: unique task name.
    :type name: str
    :param plan: the run to execute.
    :type plan: :class:`RunPlan`
    """

    def __init__(self, name: str, plan: RunPlan) -> None:
        super().__init__(name)
        self._plan = plan

    @property
    def plan(self) -> RunPlan:
        return self._plan

    def compute(self, content: Any) -> RunOutcome:
        return execute_plan(self._plan)
