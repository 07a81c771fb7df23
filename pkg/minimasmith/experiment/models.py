from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List

# Aggregated per level, in CSV column order.
SUMMARY_FIELDS = (
    "final_train_loss",
    "test_err",
    "gamma_hat",
    "robustness",
    "frobenius",
    "spectral_radius",
)


@dataclass
class RunRow:
    """One (level, repeat) training run and its metrics; NaN where a metric is unavailable."""

    scenario: str
    level: float
    repeat: int
    seed: int
    final_train_loss: float
    final_train_acc: float
    test_err: float
    gamma_hat: float
    robustness: float
    frobenius: float
    spectral_radius: float
    converged: bool

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LevelSummary:
    """Mean and sample standard deviation (N - 1 denominator) over the converged runs of a level."""

    level: float
    n_runs: int
    n_converged: int
    mean: Dict[str, float] = field(default_factory=dict)
    std: Dict[str, float] = field(default_factory=dict)


@dataclass
class ScenarioResult:
    """
    Raw rows, per-level aggregates and Spearman rank correlations of each
    metric with the test error, over converged runs (``per_run``) and over
    level means (``level_means``).
    """

    scenario: str
    rows: List[RunRow]
    summaries: List[LevelSummary]
    correlations: Dict[str, Dict[str, float]] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    @property
    def excluded(self) -> List[RunRow]:
        return [row for row in self.rows if not row.converged]

    def summary(self, level: float) -> LevelSummary:
        return next(s for s in self.summaries if s.level == level)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "rows": [row.to_dict() for row in self.rows],
            "summaries": [asdict(s) for s in self.summaries],
            "correlations": self.correlations,
            "excluded": [(row.level, row.repeat) for row in self.excluded],
            "metadata": self.metadata,
        }
