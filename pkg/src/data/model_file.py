"""
Full-precision model archive (.npz): trained weights and thresholds, the
parameters they were trained with, and the label assignment once known.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Union

import numpy as np

from ..reference.lif import ModelParams, RefNetwork
from ..utils.errors import ConfigurationError

MODEL_VERSION = 1


@dataclass(eq=False)
class ModelArchive:
    network: RefNetwork
    labels: Optional[np.ndarray] = None
    mean_responses: Optional[np.ndarray] = None

    @property
    def params(self) -> ModelParams:
        return self.network.params

    def require_labels(self) -> np.ndarray:
        if self.labels is None:
            raise ConfigurationError("model has no label assignment; run assign-labels first")
        return self.labels


def save_model(archive: ModelArchive, path: Union[str, Path]) -> Path:
    p = Path(path).resolve()
    p.parent.mkdir(parents=True, exist_ok=True)
    arrays = {
        "version": np.array(MODEL_VERSION),
        "weights": archive.network.weights,
        "theta": archive.network.theta,
        "params": np.array(json.dumps(archive.params.as_dict(), sort_keys=True)),
    }
    if archive.labels is not None:
        arrays["labels"] = np.asarray(archive.labels, dtype=np.int64)
    if archive.mean_responses is not None:
        arrays["mean_responses"] = archive.mean_responses
    # np.savez appends .npz to names without it
    with open(p, "wb") as fh:
        np.savez_compressed(fh, **arrays)
    return p


def load_model(path: Union[str, Path]) -> ModelArchive:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"model file not found: {p}")
    try:
        with np.load(p, allow_pickle=False) as data:
            version = int(data["version"])
            if version != MODEL_VERSION:
                raise ConfigurationError(f"{p}: unsupported model version {version}")
            params = ModelParams.from_dict(json.loads(str(data["params"])))
            network = RefNetwork(data["weights"], data["theta"], params)
            labels = data["labels"] if "labels" in data.files else None
            mean_responses = data["mean_responses"] if "mean_responses" in data.files else None
    except (KeyError, ValueError, TypeError) as e:
        raise ConfigurationError(f"{p}: not a valid model archive ({e})") from None
    return ModelArchive(network, labels, mean_responses)
