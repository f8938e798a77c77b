"""
MNIST IDX reader.

IDX files are big-endian: a 4-byte magic (0x00000803 for 3-d unsigned byte
image arrays, 0x00000801 for 1-d unsigned byte label arrays), one u32 per
dimension, then the payload. Files may be gzip-compressed (".gz").
"""

from __future__ import annotations

import gzip
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..utils.env import get_data_dir
from ..utils.errors import ConfigurationError, ParseError
from ..utils.logging_helpers import get_logger

IMAGES_MAGIC = 0x00000803
LABELS_MAGIC = 0x00000801

_DIMS_FOR_MAGIC = {IMAGES_MAGIC: 3, LABELS_MAGIC: 1}

N_CLASSES = 10

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


@dataclass(eq=False)
class IdxDataset:
    """Images (N, rows, cols) uint8 and labels (N,) uint8."""
    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.images.shape[0] != self.labels.shape[0]:
            raise ConfigurationError(
                f"{self.images.shape[0]} images but {self.labels.shape[0]} labels"
            )

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def image_shape(self) -> tuple[int, int]:
        return int(self.images.shape[1]), int(self.images.shape[2])

    def head(self, n: int) -> "IdxDataset":
        """First n items (all when n <= 0)."""
        if n <= 0 or n >= len(self):
            return self
        return IdxDataset(self.images[:n], self.labels[:n])

    def subset(self, indices: np.ndarray) -> "IdxDataset":
        return IdxDataset(self.images[indices], self.labels[indices])

    def flat(self) -> np.ndarray:
        """Images as (N, rows * cols)."""
        return self.images.reshape(len(self), -1)


def parse_idx_array(data: bytes) -> np.ndarray:
    """Decode one IDX image or label stream; every malformed input raises ParseError."""
    if len(data) < 4:
        raise ParseError(f"truncated header: {len(data)} bytes", len(data))
    (magic,) = struct.unpack_from(">I", data, 0)
    ndim = _DIMS_FOR_MAGIC.get(magic)
    if ndim is None:
        raise ParseError(f"bad magic 0x{magic:08x}", 0)
    header_size = 4 + 4 * ndim
    if len(data) < header_size:
        raise ParseError(f"truncated header: need {header_size} bytes, got {len(data)}", len(data))
    dims = struct.unpack_from(f">{ndim}I", data, 4)
    expected = math.prod(dims)
    available = len(data) - header_size
    if available < expected:
        raise ParseError(
            f"truncated payload: header declares {expected} bytes, {available} present", len(data)
        )
    if available > expected:
        raise ParseError(f"{available - expected} trailing bytes after payload", header_size + expected)
    return np.frombuffer(data, dtype=np.uint8, count=expected, offset=header_size).reshape(dims)


def parse_idx(images_data: bytes, labels_data: bytes) -> IdxDataset:
    """Decode and cross-validate an image stream and its label stream."""
    images = parse_idx_array(images_data)
    labels = parse_idx_array(labels_data)
    if images.ndim != 3:
        raise ParseError("image stream does not hold a 3-d array", 0)
    if labels.ndim != 1:
        raise ParseError("label stream does not hold a 1-d array", 0)
    if images.shape[0] != labels.shape[0]:
        raise ParseError(f"count mismatch: {images.shape[0]} images, {labels.shape[0]} labels", 4)
    bad = np.flatnonzero(labels >= N_CLASSES)
    if bad.size:
        raise ParseError(f"label {int(labels[bad[0]])} outside 0..{N_CLASSES - 1}", 8 + int(bad[0]))
    return IdxDataset(images, labels)


def read_idx_bytes(path: Union[str, Path]) -> bytes:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"IDX file not found: {p}")
    if p.suffix == ".gz":
        with gzip.open(p, "rb") as fh:
            return fh.read()
    return p.read_bytes()


def load_idx_dataset(images_path: Union[str, Path], labels_path: Union[str, Path]) -> IdxDataset:
    dataset = parse_idx(read_idx_bytes(images_path), read_idx_bytes(labels_path))
    get_logger().debug(f"Loaded {len(dataset)} images from {images_path}")
    return dataset


def _find(data_dir: Path, stem: str) -> Path:
    for candidate in (data_dir / stem, data_dir / f"{stem}.gz"):
        if candidate.exists():
            return candidate
    raise FileNotFoundError(f"{stem}[.gz] not found in {data_dir}")


def load_mnist(split: str = "test", data_dir: Optional[Path] = None, limit: int = 0) -> IdxDataset:
    """
    Load an MNIST split from the data directory.

    Args:
        split: "train" or "test".
        data_dir: Directory holding the IDX files; defaults to the configured data dir.
        limit: Keep only the first `limit` items (0 = all).
    """
    if split not in MNIST_FILES:
        raise ConfigurationError(f"unknown MNIST split {split!r}")
    data_dir = Path(data_dir) if data_dir is not None else get_data_dir()
    images_stem, labels_stem = MNIST_FILES[split]
    dataset = load_idx_dataset(_find(data_dir, images_stem), _find(data_dir, labels_stem))
    if len(dataset) == 0:
        raise ConfigurationError(f"MNIST {split} split in {data_dir} is empty")
    return dataset.head(limit)
