from typing import Optional, TypedDict

from minimasmith.errors import ConfigError


class SamplerOptions(TypedDict):
    """
    Options for the sampled Gram estimators.

    * ``n_prime`` - subset size N' per trial.
    * ``trials`` - number of trials T.
    * ``seed`` - base seed; trial t uses ``seed + t``.
    * ``competitor_mode`` - ``exact`` (full training set) or ``sampled`` (T trials)
      for the Frobenius and spectral-radius metrics.
    * ``frobenius_entries`` - matrix entries drawn per trial in sampled Frobenius mode.
    """

    n_prime: int
    trials: int
    seed: int
    competitor_mode: str
    frobenius_entries: int


default_options: SamplerOptions = SamplerOptions(
    n_prime=100,
    trials=100,
    seed=0,
    competitor_mode="exact",
    frobenius_entries=100_000,
)


def _sampler_options_dict(
    options: Optional[SamplerOptions], n_samples: Optional[int] = None
) -> dict:
    opt = {
        attr: (options or {}).get(attr, default_options[attr])
        for attr in SamplerOptions.__annotations__
    }

    if opt["trials"] < 1:
        raise ConfigError("trials must be at least 1", option="trials")
    if opt["n_prime"] < 1:
        raise ConfigError("n_prime must be at least 1", option="n_prime")
    if n_samples is not None and opt["n_prime"] > n_samples:
        raise ConfigError(
            f"n_prime={opt['n_prime']} exceeds the dataset size {n_samples}",
            option="n_prime",
        )
    if opt["competitor_mode"] not in ("exact", "sampled"):
        raise ConfigError(
            f"unknown competitor_mode '{opt['competitor_mode']}'",
            option="competitor_mode",
        )
    if opt["frobenius_entries"] < 1:
        raise ConfigError(
            "frobenius_entries must be at least 1", option="frobenius_entries"
        )

    return opt
