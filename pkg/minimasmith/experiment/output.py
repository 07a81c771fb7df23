import csv
import io
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Tuple, Union

import numpy as np

from minimasmith.experiment.models import RunRow, ScenarioResult
from minimasmith.regularizer.models import RunRecord


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Renders rows as CSV; floats use ``repr`` so values survive a round trip exactly."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    return buffer.getvalue()


def scenario_csv(result: ScenarioResult) -> str:
    columns = RunRow.columns()
    return csv_text(columns, ([getattr(row, c) for c in columns] for row in result.rows))


def run_record_csv(record: RunRecord) -> str:
    rows = record.rows()
    columns = list(rows[0].keys()) if rows else ["epoch"]
    return csv_text(columns, ([row[c] for c in columns] for row in rows))


def sweep_csv(sweep: Sequence[Tuple[float, float]]) -> str:
    return csv_text(["gamma", "rhs"], sweep)


def _json_default(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def to_json(payload: Any) -> str:
    return json.dumps(payload, indent=2, sort_keys=True, default=_json_default) + "\n"


def atomic_write(path: Union[str, Path], content: Union[str, bytes]) -> Path:
    """
    Writes ``content`` to a temporary file in the target directory and renames it
    over ``path``, so readers never see a partial file. Text is written as UTF-8,
    bytes as they are.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        if isinstance(content, bytes):
            with os.fdopen(fd, "wb") as handle:
                handle.write(content)
        else:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
                handle.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save_array(path: Union[str, Path], array: np.ndarray) -> Path:
    """Writes ``array`` in ``.npy`` format through :func:`atomic_write`."""
    buffer = io.BytesIO()
    np.save(buffer, np.asarray(array), allow_pickle=False)
    return atomic_write(path, buffer.getvalue())


def write_scenario(result: ScenarioResult, out_dir: Union[str, Path]) -> List[Path]:
    """Writes ``<scenario>.csv`` and ``<scenario>.json`` into ``out_dir``."""
    out_dir = Path(out_dir)
    return [
        atomic_write(out_dir / f"{result.scenario}.csv", scenario_csv(result)),
        atomic_write(out_dir / f"{result.scenario}.json", to_json(result.to_dict())),
    ]
