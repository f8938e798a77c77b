"""Tests for neuron label assignment."""

import numpy as np
import pytest

from src.reference.labels import assign_labels
from src.utils.errors import ConfigurationError


def test_neuron_responding_to_one_class_gets_it():
    responses = np.array([[0, 5], [9, 0], [7, 1]])
    labels = np.array([1, 3, 3])
    label_map = assign_labels(responses, labels, 10)
    assert label_map.labels.tolist() == [3, 1]
    assert label_map.n_flagged == 0
    assert label_map.mean_responses[3].tolist() == [8.0, 0.5]


def test_uniform_responses_tie_to_class_zero_and_are_flagged():
    responses = np.array([[4, 0], [4, 0], [4, 0]])
    label_map = assign_labels(responses, np.array([0, 1, 2]), 3)
    assert label_map.labels.tolist() == [0, 0]
    assert label_map.flagged.tolist() == [True, True]


def test_class_sizes_cover_every_class():
    responses = np.array([[1, 0, 0], [0, 1, 1]])
    label_map = assign_labels(responses, np.array([2, 5]), 10)
    sizes = label_map.class_sizes()
    assert len(sizes) == 10
    assert sizes[2] == 1 and sizes[5] == 2
    assert sizes.sum() == 3


def test_classes_without_images_have_zero_mean():
    label_map = assign_labels(np.array([[3]]), np.array([4]), 6)
    assert label_map.mean_responses[:, 0].tolist() == [0, 0, 0, 0, 3, 0]


def test_class_count_defaults_to_largest_label():
    assert assign_labels(np.array([[1], [2]]), np.array([0, 2])).n_classes == 3


@pytest.mark.parametrize("responses,labels", [
    (np.zeros((2, 3)), np.zeros(3, dtype=int)),
    (np.zeros((0, 3)), np.zeros(0, dtype=int)),
    (np.zeros(3), np.zeros(3, dtype=int)),
])
def test_bad_calibration_inputs(responses, labels):
    with pytest.raises(ConfigurationError):
        assign_labels(responses, labels, 10)


@pytest.mark.parametrize("scale", [0.5, 2, 3, 7])
def test_positive_scaling_keeps_the_assignment(scale):
    rng = np.random.default_rng(6)
    responses = rng.integers(0, 6, size=(60, 12))
    labels = rng.integers(0, 10, size=60)
    base = assign_labels(responses, labels, 10)
    scaled = assign_labels(responses * scale, labels, 10)
    assert scaled.labels.tolist() == base.labels.tolist()
    assert scaled.flagged.tolist() == base.flagged.tolist()
