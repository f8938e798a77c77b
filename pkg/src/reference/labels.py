"""
Neuron-to-class assignment from calibration responses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from ..utils.errors import ConfigurationError


@dataclass(eq=False)
class LabelMap:
    """
    labels: (n_neurons,) assigned class per neuron.
    mean_responses: (n_classes, n_neurons) mean spike count per class.
    flagged: (n_neurons,) True where the assignment was a tie (including no response at all).
    """
    labels: np.ndarray
    mean_responses: np.ndarray
    flagged: np.ndarray

    @property
    def n_classes(self) -> int:
        return int(self.mean_responses.shape[0])

    @property
    def n_flagged(self) -> int:
        return int(np.count_nonzero(self.flagged))

    def class_sizes(self) -> pd.Series:
        """Neurons per class."""
        counts = np.bincount(self.labels, minlength=self.n_classes)
        return pd.Series(counts, index=pd.RangeIndex(self.n_classes, name="label"), name="neurons")


def assign_labels(responses: np.ndarray, labels: np.ndarray, n_classes: Optional[int] = None) -> LabelMap:
    """
    Give each neuron the class of its largest mean response.

    Args:
        responses: (n_images, n_neurons) spike counts of the trained layer.
        labels: (n_images,) class of each calibration image.
        n_classes: Number of classes; defaults to max(label) + 1.

    Ties go to the lowest class index and are flagged. A class without
    calibration images has mean response 0.
    """
    responses = np.asarray(responses, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if responses.ndim != 2 or responses.shape[0] != labels.shape[0]:
        raise ConfigurationError("responses must be (n_images, n_neurons) with one label per image")
    if labels.size == 0:
        raise ConfigurationError("no calibration images")
    n_classes = n_classes if n_classes is not None else int(labels.max()) + 1

    sums = np.zeros((n_classes, responses.shape[1]))
    np.add.at(sums, labels, responses)
    per_class = np.bincount(labels, minlength=n_classes).astype(np.float64)
    mean = sums / np.maximum(per_class, 1.0)[:, None]

    assigned = np.argmax(mean, axis=0)
    top = mean.max(axis=0)
    flagged = np.count_nonzero(mean == top[None, :], axis=0) > 1
    return LabelMap(assigned.astype(np.int64), mean, flagged)
