import gzip
import logging
import struct
from pathlib import Path
from typing import Optional, Union

import numpy as np

from minimasmith.errors import ConfigError
from minimasmith.experiment.errors import FormatError
from minimasmith.net.models import Dataset, smooth_targets


log = logging.getLogger(__name__)

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801


def _read_bytes(path: Union[str, Path]) -> bytes:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"IDX file not found: {path}", option="path")
    if path.suffix == ".gz":
        with gzip.open(path, "rb") as handle:
            return handle.read()
    return path.read_bytes()


def _header(raw: bytes, magic: int, n_dims: int, path: Path) -> tuple:
    size = 4 * (1 + n_dims)
    if len(raw) < size:
        raise FormatError(
            f"{path}: truncated header, {len(raw)} of {size} bytes",
            offset=len(raw),
            path=str(path),
        )

    found, *dims = struct.unpack(f">{1 + n_dims}I", raw[:size])
    if found != magic:
        raise FormatError(
            f"{path}: magic number {found:#010x}, expected {magic:#010x}",
            offset=0,
            path=str(path),
        )
    return tuple(dims)


def _payload(raw: bytes, start: int, count: int, path: Path) -> np.ndarray:
    if len(raw) < start + count:
        raise FormatError(
            f"{path}: truncated data, expected {count} bytes after offset {start}",
            offset=len(raw),
            path=str(path),
        )
    return np.frombuffer(raw, dtype=np.uint8, count=count, offset=start)


def load_idx(
    images_path: Union[str, Path],
    labels_path: Union[str, Path],
    limit: Optional[int] = None,
    n_classes: int = 10,
) -> Dataset:
    """
    Reads an IDX image file (magic 0x00000803, dims n, rows, cols) and an IDX
    label file (magic 0x00000801, dim n), both big-endian with unsigned byte
    payloads. Files ending in ``.gz`` are decompressed.

    :param images_path: image file.
    :param labels_path: label file.
    :param limit: keep only the first ``limit`` samples; all when omitted.
    :type limit: int
    :param n_classes: number of classes of the one-hot labels.
    :type n_classes: int
    :raises ConfigError: if ``limit`` is below 1 or a file is missing.
    :raises FormatError: on a wrong magic number, truncation or an out-of-range label,
        with the byte offset of the problem.
    :returns: pixels scaled to [0, 1] and flattened, with one-hot labels.
    :rtype: :class:`minimasmith.net.models.Dataset`
    """
    if limit is not None and limit < 1:
        raise ConfigError(f"limit must be at least 1, got {limit}", option="limit")

    images_path, labels_path = Path(images_path), Path(labels_path)
    image_raw = _read_bytes(images_path)
    label_raw = _read_bytes(labels_path)

    n_images, rows, cols = _header(image_raw, IMAGES_MAGIC, 3, images_path)
    (n_labels,) = _header(label_raw, LABELS_MAGIC, 1, labels_path)
    if n_images != n_labels:
        raise FormatError(
            f"{n_images} images but {n_labels} labels", offset=4, path=str(labels_path)
        )

    n = n_images if limit is None else min(limit, n_images)
    if n == 0:
        raise ConfigError("the IDX files hold no samples", option="limit")

    pixels = _payload(image_raw, 16, n * rows * cols, images_path)
    labels = _payload(label_raw, 8, n, labels_path).astype(np.int64)

    bad = np.flatnonzero(labels >= n_classes)
    if bad.size:
        raise FormatError(
            f"label {labels[bad[0]]} at sample {bad[0]} is outside [0, {n_classes})",
            offset=8 + int(bad[0]),
            path=str(labels_path),
        )

    log.debug(f"loaded {n} IDX samples of {rows}x{cols} from {images_path}")
    features = pixels.reshape(n, rows * cols).astype(np.float64) / 255.0
    return Dataset(features=features, labels=smooth_targets(labels, n_classes, 0.0))
