import gzip
import struct
import tempfile
import unittest
from pathlib import Path

import numpy as np
import pytest

from minimasmith.errors import ConfigError
from minimasmith.experiment.errors import FormatError
from minimasmith.experiment.idx import IMAGES_MAGIC, LABELS_MAGIC, load_idx

PIXELS = np.array(
    [
        [[0, 255], [0, 0]],
        [[255, 255], [0, 0]],
        [[0, 0], [51, 0]],
        [[0, 0], [0, 102]],
    ],
    dtype=np.uint8,
)
LABELS = np.array([3, 0, 9, 1], dtype=np.uint8)


def _images_bytes(pixels: np.ndarray, magic: int = IMAGES_MAGIC) -> bytes:
    n, rows, cols = pixels.shape
    return struct.pack(">4I", magic, n, rows, cols) + pixels.tobytes()


def _labels_bytes(labels: np.ndarray, magic: int = LABELS_MAGIC) -> bytes:
    return struct.pack(">2I", magic, labels.shape[0]) + labels.tobytes()


class LoadIdxTest(unittest.TestCase):
    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()

    def _write(self, name: str, raw: bytes) -> Path:
        path = self.dir / name
        if name.endswith(".gz"):
            with gzip.open(path, "wb") as handle:
                handle.write(raw)
        else:
            path.write_bytes(raw)
        return path

    def test_reads_fixture(self):
        images = self._write("images-idx3-ubyte", _images_bytes(PIXELS))
        labels = self._write("labels-idx1-ubyte", _labels_bytes(LABELS))

        dataset = load_idx(images, labels)

        assert dataset.features.shape == (4, 4)
        assert dataset.n_classes == 10
        np.testing.assert_array_equal(dataset.onehot, [3, 0, 9, 1])
        np.testing.assert_allclose(dataset.features[0], [0.0, 1.0, 0.0, 0.0])
        np.testing.assert_allclose(dataset.features[2], [0.0, 0.0, 0.2, 0.0])
        np.testing.assert_allclose(dataset.features[3], [0.0, 0.0, 0.0, 0.4])

    def test_gzip_and_limit(self):
        images = self._write("images.gz", _images_bytes(PIXELS))
        labels = self._write("labels.gz", _labels_bytes(LABELS))

        dataset = load_idx(images, labels, limit=2)

        assert len(dataset) == 2
        np.testing.assert_array_equal(dataset.onehot, [3, 0])

    def test_limit_must_be_positive(self):
        with pytest.raises(ConfigError) as err:
            load_idx(self.dir / "a", self.dir / "b", limit=0)
        assert err.value.option == "limit"

    def test_missing_file(self):
        with pytest.raises(ConfigError):
            load_idx(self.dir / "missing", self.dir / "also-missing")

    def test_bad_magic(self):
        images = self._write("images", _images_bytes(PIXELS, magic=0x00000801))
        labels = self._write("labels", _labels_bytes(LABELS))

        with pytest.raises(FormatError) as err:
            load_idx(images, labels)
        assert err.value.offset == 0
        assert err.value.path == str(images)

    def test_truncated_payload(self):
        images = self._write("images", _images_bytes(PIXELS)[:-3])
        labels = self._write("labels", _labels_bytes(LABELS))

        with pytest.raises(FormatError) as err:
            load_idx(images, labels)
        assert err.value.offset == 16 + PIXELS.size - 3

    def test_truncated_header(self):
        images = self._write("images", _images_bytes(PIXELS))
        labels = self._write("labels", b"\x00\x00\x08")

        with pytest.raises(FormatError) as err:
            load_idx(images, labels)
        assert err.value.offset == 3

    def test_count_mismatch(self):
        images = self._write("images", _images_bytes(PIXELS))
        labels = self._write("labels", _labels_bytes(LABELS[:3]))

        with pytest.raises(FormatError):
            load_idx(images, labels)

    def test_label_out_of_range(self):
        images = self._write("images", _images_bytes(PIXELS))
        labels = self._write("labels", _labels_bytes(LABELS))

        with pytest.raises(FormatError) as err:
            load_idx(images, labels, n_classes=5)
        assert err.value.offset == 8 + 2
