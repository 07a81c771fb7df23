from typing import List, Optional, TypedDict

from minimasmith.errors import ConfigError
from minimasmith.metrics.options import SamplerOptions, _sampler_options_dict
from minimasmith.regularizer.options import (
    RegOptions,
    TrainSchedule,
    _reg_options_dict,
    _train_schedule_dict,
)


SCENARIOS = ("confusion", "batch_size", "augmentation", "regularizer_ab")
GENERATORS = ("gaussian_mixture", "spirals")

# Desk-scale level grids per scenario.
DEFAULT_LEVELS = {
    "confusion": [0.0, 0.1, 0.25, 0.5],
    "batch_size": [16, 32, 64, 128],
    "augmentation": [0.0, 0.05, 0.1, 0.2],
    "regularizer_ab": [1.0, 5.0, 10.0, 20.0],
}


class SyntheticSpec(TypedDict):
    """
    Synthetic classification data.

    * ``generator`` - ``gaussian_mixture`` (class means on a circle in the
      first two coordinates) or ``spirals`` (interleaved arms, d = 2).
    * ``separation`` - radius of the gaussian-mixture means.
    """

    generator: str
    n_train: int
    n_test: int
    d: int
    k: int
    noise_std: float
    separation: float
    seed: int


class NetworkOptions(TypedDict):
    layer_sizes: List[int]
    activation: str
    init_seed: Optional[int]


class ScenarioConfig(TypedDict):
    """
    One scenario sweep. Runs at level index i, repeat r use seed
    ``seed + 1000 * i + r``.
    """

    scenario: str
    levels: Optional[List[float]]
    repeats: int
    seed: int
    data: SyntheticSpec
    network: NetworkOptions
    schedule: TrainSchedule
    sampler: SamplerOptions
    target_peak: Optional[float]
    threads: int


class ABConfig(TypedDict):
    """
    Paired regularizer comparison: a ``beta = 0`` arm and one arm per entry of
    ``betas``. Repeat r of every arm uses seed ``seed + r``.
    """

    betas: List[float]
    repeats: int
    seed: int
    data: SyntheticSpec
    network: NetworkOptions
    schedule: TrainSchedule
    reg: RegOptions
    sampler: SamplerOptions
    target_peak: Optional[float]
    threads: int


default_synthetic: SyntheticSpec = SyntheticSpec(
    generator="gaussian_mixture",
    n_train=500,
    n_test=1000,
    d=10,
    k=2,
    noise_std=1.0,
    separation=2.0,
    seed=0,
)

default_network: NetworkOptions = NetworkOptions(
    layer_sizes=[10, 32, 32, 2], activation="tanh", init_seed=None
)


def _synthetic_spec_dict(spec: Optional[SyntheticSpec]) -> dict:
    opt = {
        attr: (spec or {}).get(attr, default_synthetic[attr])
        for attr in SyntheticSpec.__annotations__
    }

    if opt["generator"] not in GENERATORS:
        raise ConfigError(f"unknown generator '{opt['generator']}'", option="generator")
    if opt["k"] < 2:
        raise ConfigError("k must be at least 2", option="k")
    if opt["d"] < 2:
        raise ConfigError("d must be at least 2", option="d")
    if opt["generator"] == "spirals" and opt["d"] != 2:
        raise ConfigError("the spirals generator is 2-dimensional", option="d")
    if opt["n_train"] < opt["k"] or opt["n_test"] < opt["k"]:
        raise ConfigError("n_train and n_test must be at least k", option="n_train")
    if opt["noise_std"] < 0.0:
        raise ConfigError("noise_std must be non-negative", option="noise_std")

    return opt


def _network_options_dict(options: Optional[NetworkOptions]) -> dict:
    return {
        attr: (options or {}).get(attr, default_network[attr])
        for attr in NetworkOptions.__annotations__
    }


def _common_dict(config: dict) -> dict:
    opt = {
        "data": _synthetic_spec_dict(config.get("data")),
        "network": _network_options_dict(config.get("network")),
        "schedule": _train_schedule_dict(config.get("schedule")),
        "sampler": _sampler_options_dict(config.get("sampler")),
        "target_peak": config.get("target_peak", 0.99),
        "threads": config.get("threads", 1),
        "repeats": config.get("repeats", 5),
        "seed": config.get("seed", 0),
    }
    if opt["repeats"] < 1:
        raise ConfigError("repeats must be at least 1", option="repeats")
    if opt["threads"] < 1:
        raise ConfigError("threads must be at least 1", option="threads")
    return opt


def _scenario_config_dict(config: ScenarioConfig) -> dict:
    scenario = config.get("scenario")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario '{scenario}'", option="scenario")

    opt = _common_dict(config)
    opt["scenario"] = scenario
    levels = config.get("levels") or DEFAULT_LEVELS[scenario]
    if not levels:
        raise ConfigError("levels must not be empty", option="levels")
    opt["levels"] = list(levels)
    return opt


def _ab_config_dict(config: ABConfig) -> dict:
    opt = _common_dict(config)
    betas = config.get("betas") or DEFAULT_LEVELS["regularizer_ab"]
    if any(b <= 0.0 for b in betas):
        raise ConfigError("the beta grid holds positive weights only", option="betas")
    opt["betas"] = list(betas)
    opt["reg"] = _reg_options_dict(config.get("reg"), opt["schedule"])
    return opt
