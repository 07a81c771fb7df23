import argparse
import json
import logging
import os
import sys
import time
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import load_dotenv

from minimasmith import __version__
from minimasmith.bound.bound import basin_height, bound_rhs, bound_sweep
from minimasmith.bound.models import BoundInputs
from minimasmith.errors import ConfigError, MinimaSmithError
from minimasmith.experiment.data import generate_synthetic
from minimasmith.experiment.idx import load_idx
from minimasmith.experiment.options import _network_options_dict
from minimasmith.experiment.output import (
    atomic_write,
    run_record_csv,
    save_array,
    sweep_csv,
    to_json,
    write_scenario,
)
from minimasmith.experiment.scenario import run_scenario
from minimasmith.metrics.report import calibrated_metric_report
from minimasmith.net.models import Dataset, NetworkSpec
from minimasmith.net.network import init_params
from minimasmith.oracle.suite import run_verification_suite
from minimasmith.regularizer.train import train


log = logging.getLogger(__name__)

MANIFEST_NAME = "run-manifest.json"
MANIFEST_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2


class UsageError(Exception):
    """Bad command line or unreadable config file; maps to exit code 1"""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load_config(path: Optional[str]) -> dict:
    """Reads a JSON config; a run manifest is accepted and unwrapped to its config."""
    if path is None:
        return {}

    config_path = Path(path)
    if not config_path.is_file():
        raise UsageError(f"config file not found: {config_path}")
    try:
        config = json.loads(config_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as err:
        raise UsageError(f"config file {config_path} is not valid JSON: {err}") from err
    if not isinstance(config, dict):
        raise UsageError(f"config file {config_path} must hold a JSON object")

    if "format_version" in config and "config" in config:
        config = config["config"]
    return config


def _datasets(config: dict) -> Tuple[Dataset, Dataset]:
    idx = config.get("idx")
    if idx is None:
        return generate_synthetic(config.get("data"))

    limit = idx.get("limit")
    n_classes = idx.get("n_classes", 10)
    return (
        load_idx(idx["train_images"], idx["train_labels"], limit, n_classes),
        load_idx(idx["test_images"], idx["test_labels"], idx.get("test_limit", limit), n_classes),
    )


def _network(config: dict, train_set: Dataset) -> Tuple[NetworkSpec, int]:
    options = _network_options_dict(config.get("network"))
    spec = NetworkSpec(tuple(options["layer_sizes"]), options["activation"])
    train_set.check_against(spec)
    seed = config.get("seed", 0)
    return spec, seed if options["init_seed"] is None else options["init_seed"]


def _train(config: dict) -> tuple:
    train_set, test_set = _datasets(config)
    spec, init_seed = _network(config, train_set)
    params, record = train(
        spec,
        init_params(spec, init_seed),
        train_set,
        config.get("schedule"),
        config.get("reg"),
        seed=config.get("seed", 0),
        test_set=test_set,
    )
    return spec, train_set, params, record


def _cmd_train(config: dict, out_dir: Path) -> List[Path]:
    _, _, params, record = _train(config)
    return [
        save_array(out_dir / "params.npy", params),
        atomic_write(out_dir / "train.csv", run_record_csv(record)),
        atomic_write(out_dir / "train.json", to_json(record.summary())),
    ]


def _cmd_metrics(config: dict, out_dir: Path) -> List[Path]:
    if "params_path" in config:
        train_set, _ = _datasets(config)
        spec, _ = _network(config, train_set)
        params = spec.check_params(np.load(config["params_path"]))
    else:
        spec, train_set, params, _ = _train(config)

    sampler = {"seed": config.get("seed", 0), **config.get("sampler", {})}
    report = calibrated_metric_report(
        spec, params, train_set, sampler, config.get("target_peak", 0.99)
    )
    return [atomic_write(out_dir / "metrics.json", report.to_json() + "\n")]


def _cmd_scenario(config: dict, out_dir: Path) -> List[Path]:
    return write_scenario(run_scenario(config), out_dir)


def _cmd_bound(config: dict, out_dir: Path) -> List[Path]:
    fields = ("n", "w", "volume", "delta", "l0", "gamma", "expected_train_loss")
    missing = [f for f in ("n", "w") if f not in config]
    if missing:
        raise ConfigError(f"bound config is missing {missing}", option=missing[0])

    inputs = BoundInputs(**{f: config[f] for f in fields if f in config})
    fisher_logdet = config.get("fisher_logdet", inputs.gamma)
    result = bound_rhs(inputs, fisher_logdet)
    payload = {
        "inputs": config,
        "result": result.to_dict(),
        "h_exact": basin_height(inputs, fisher_logdet, exact=True),
    }

    sweep = config.get("sweep", {})
    gammas = np.linspace(
        sweep.get("start", inputs.gamma - 10.0 * inputs.w),
        sweep.get("stop", inputs.gamma + 10.0 * inputs.w),
        sweep.get("points", 30),
    )
    return [
        atomic_write(out_dir / "bound.json", to_json(payload)),
        atomic_write(out_dir / "bound_sweep.csv", sweep_csv(bound_sweep(inputs, gammas))),
    ]


def _cmd_verify(config: dict, out_dir: Path) -> List[Path]:
    report = run_verification_suite(config.get("seed", 0))
    path = atomic_write(out_dir / "verify.json", to_json(report))
    if not report["passed"]:
        failed = [c["name"] for c in report["checks"] if not c["passed"]]
        raise MinimaSmithError(f"verification failed: {failed}")
    return [path]


COMMANDS: Dict[str, Tuple[Callable[[dict, Path], List[Path]], str]] = {
    "train": (_cmd_train, "train a network, write params.npy and the per-epoch record"),
    "metrics": (_cmd_metrics, "compute gamma_hat and the competitor metrics"),
    "scenario": (_cmd_scenario, "run a scenario sweep, write CSV and JSON"),
    "bound": (_cmd_bound, "evaluate the generalization bound and a gamma sweep"),
    "verify": (_cmd_verify, "run the brute-force verification suite"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file or a run manifest")
    common.add_argument(
        "--out", help="output directory (default: $MINIMASMITH_OUT_DIR or ./results)"
    )
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--threads", type=int, help="cap on concurrent training runs")
    common.add_argument("--quiet", action="store_true", help="log warnings and errors only")
    common.add_argument("--log-level", help="logging level, e.g. DEBUG or INFO")

    parser = _ArgumentParser(prog="minimasmith", description="Fisher-information flatness metrics")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)
    for name, (_, help_text) in COMMANDS.items():
        subparsers.add_parser(name, parents=[common], help=help_text)

    return parser


def _threads(args: argparse.Namespace) -> Optional[int]:
    """The --threads flag, else $MINIMASMITH_THREADS, else None."""
    if args.threads is not None:
        value = args.threads
    else:
        raw = os.getenv("MINIMASMITH_THREADS")
        if raw is None:
            return None
        try:
            value = int(raw)
        except ValueError as err:
            raise UsageError(f"MINIMASMITH_THREADS must be an integer, got '{raw}'") from err

    if value < 1:
        raise UsageError(f"threads must be at least 1, got {value}")
    return value


def _configure_logging(args: argparse.Namespace) -> None:
    level = "WARNING" if args.quiet else (
        args.log_level or os.getenv("MINIMASMITH_LOG_LEVEL", "INFO")
    )
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def parse_and_dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Parses the command line, runs the subcommand and writes a run manifest.

    :returns: 0 on success, 1 on a usage error, 2 on a runtime or verification failure.
    :rtype: int
    """
    load_dotenv()
    try:
        args = build_parser().parse_args(argv)
        config = _load_config(args.config)
        threads = _threads(args)
    except UsageError as err:
        print(err, file=sys.stderr)
        return EXIT_USAGE

    _configure_logging(args)
    if args.seed is not None:
        config["seed"] = args.seed
    if threads is not None:
        config["threads"] = threads

    out_dir = Path(args.out or os.getenv("MINIMASMITH_OUT_DIR", "results"))
    command, _ = COMMANDS[args.command]
    started = time.perf_counter()
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = command(config, out_dir)
    except (MinimaSmithError, ValueError, KeyError, OSError) as err:
        log.error(f"{args.command} failed: {type(err).__name__}: {err}")
        return EXIT_FAILURE

    manifest = {
        "format_version": MANIFEST_FORMAT_VERSION,
        "version": __version__,
        "command": args.command,
        "seed": config.get("seed", 0),
        "config": config,
        "outputs": [p.name for p in outputs],
        "timings": {"seconds": round(time.perf_counter() - started, 3)},
    }
    atomic_write(out_dir / MANIFEST_NAME, to_json(manifest))
    log.info(f"{args.command} finished, outputs in {out_dir}")
    return EXIT_OK


def main() -> None:
    sys.exit(parse_and_dispatch())
