"""Tests for the MNIST IDX reader."""

import gzip
import struct

import numpy as np
import pytest

from src.data.idx import IMAGES_MAGIC, LABELS_MAGIC, load_idx_dataset, load_mnist, parse_idx, parse_idx_array
from src.utils.errors import ConfigurationError, ParseError


def images_bytes(images):
    n, rows, cols = images.shape
    return struct.pack(">IIII", IMAGES_MAGIC, n, rows, cols) + images.astype(np.uint8).tobytes()


def labels_bytes(labels):
    return struct.pack(">II", LABELS_MAGIC, len(labels)) + bytes(labels)


IMAGES = np.arange(3 * 2 * 2, dtype=np.uint8).reshape(3, 2, 2) * 10
LABELS = [7, 0, 9]


def test_parse_valid_streams():
    dataset = parse_idx(images_bytes(IMAGES), labels_bytes(LABELS))
    assert len(dataset) == 3
    assert dataset.image_shape == (2, 2)
    assert np.array_equal(dataset.images, IMAGES)
    assert dataset.labels.tolist() == LABELS
    assert dataset.flat().shape == (3, 4)


def test_four_byte_file_is_truncated():
    with pytest.raises(ParseError):
        parse_idx_array(struct.pack(">I", IMAGES_MAGIC))


def test_bad_magic_names_offset_zero():
    with pytest.raises(ParseError) as info:
        parse_idx_array(struct.pack(">II", 0x00000802, 0))
    assert info.value.offset == 0


def test_every_truncation_is_rejected():
    data = images_bytes(IMAGES)
    for length in range(len(data)):
        with pytest.raises(ParseError):
            parse_idx_array(data[:length])


@pytest.mark.parametrize("dims", [(2**31, 2**31, 4), (2**32 - 1, 2**32 - 1, 2**32 - 1)])
def test_huge_declared_size_is_truncated_payload(dims):
    data = struct.pack(">IIII", IMAGES_MAGIC, *dims) + bytes(16)
    with pytest.raises(ParseError) as info:
        parse_idx_array(data)
    assert info.value.offset == len(data)
    assert "truncated payload" in str(info.value)


def test_trailing_bytes_are_rejected():
    with pytest.raises(ParseError) as info:
        parse_idx_array(labels_bytes(LABELS) + b"\x00")
    assert info.value.offset == 8 + len(LABELS)


def test_count_mismatch():
    with pytest.raises(ParseError):
        parse_idx(images_bytes(IMAGES), labels_bytes([1, 2]))


def test_label_outside_digits():
    with pytest.raises(ParseError) as info:
        parse_idx(images_bytes(IMAGES), labels_bytes([1, 10, 2]))
    assert info.value.offset == 9


def test_streams_swapped():
    with pytest.raises(ParseError):
        parse_idx(labels_bytes(LABELS), images_bytes(IMAGES))


def test_head_and_subset():
    dataset = parse_idx(images_bytes(IMAGES), labels_bytes(LABELS))
    assert len(dataset.head(2)) == 2
    assert dataset.head(0) is dataset
    assert dataset.subset(np.array([2, 0])).labels.tolist() == [9, 7]


def test_load_mnist_from_directory(tmp_path):
    (tmp_path / "t10k-images-idx3-ubyte").write_bytes(images_bytes(IMAGES))
    with gzip.open(tmp_path / "t10k-labels-idx1-ubyte.gz", "wb") as fh:
        fh.write(labels_bytes(LABELS))
    dataset = load_mnist("test", tmp_path, limit=2)
    assert dataset.labels.tolist() == [7, 0]


def test_load_mnist_missing_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_mnist("train", tmp_path)
    with pytest.raises(ConfigurationError):
        load_mnist("validation", tmp_path)


def test_load_idx_dataset_missing_path(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_idx_dataset(tmp_path / "nope", tmp_path / "nope-labels")
