"""
Unsupervised STDP training of the reference layer.

The weight rule is a strategy object: RefNetwork.run calls `on_pre` when
inputs spike and `on_post` when neurons fire, passing the current traces.
PairStdpRule is the default: on a post-synaptic spike every synapse of the
firing neuron moves by eta_post * (x_pre - x_offset); an optional pre-spike
depression (eta_pre) uses the post-synaptic trace. Weights stay in [0, w_max].
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd

from ..core.encoding import DEFAULT_N_STEPS, EncoderConfig, EncoderMode, SpikeEncoder
from ..core.engine import classify
from ..data.idx import N_CLASSES, IdxDataset
from ..utils.errors import ConfigurationError
from ..utils.logging_helpers import get_logger, is_verbose
from ..utils.utils import progress
from .labels import assign_labels
from .lif import ModelParams, RefNetwork, StdpParams

TRAIN_LOG_COLUMNS = ["epoch", "images", "mean_spikes", "accuracy", "mean_theta", "mean_weight"]


class StdpRule(ABC):
    """Weight update strategy; both hooks modify `weights` in place."""

    @abstractmethod
    def on_pre(self, weights: np.ndarray, x_post: np.ndarray, inputs: np.ndarray) -> None:
        ...

    @abstractmethod
    def on_post(self, weights: np.ndarray, x_pre: np.ndarray, neurons: np.ndarray) -> None:
        ...


class PairStdpRule(StdpRule):
    def __init__(self, params: StdpParams = StdpParams()):
        self.params = params

    def on_pre(self, weights: np.ndarray, x_post: np.ndarray, inputs: np.ndarray) -> None:
        p = self.params
        if p.eta_pre == 0.0:
            return
        cols = weights[:, inputs] - p.eta_pre * x_post[:, None]
        weights[:, inputs] = np.clip(cols, 0.0, p.w_max)

    def on_post(self, weights: np.ndarray, x_pre: np.ndarray, neurons: np.ndarray) -> None:
        p = self.params
        rows = weights[neurons] + p.eta_post * (x_pre[None, :] - p.x_offset)
        weights[neurons] = np.clip(rows, 0.0, p.w_max)


def normalize_weights(weights: np.ndarray, target: float, w_max: float) -> None:
    """Rescale each neuron's input weights to sum to `target`, then clip to w_max (in place)."""
    sums = weights.sum(axis=1, keepdims=True)
    factor = np.divide(target, sums, out=np.ones_like(sums), where=sums > 0)
    weights *= factor
    np.clip(weights, 0.0, w_max, out=weights)


@dataclass
class TrainingResult:
    network: RefNetwork
    log: pd.DataFrame

    @property
    def weights(self) -> np.ndarray:
        return self.network.weights

    @property
    def theta(self) -> np.ndarray:
        return self.network.theta


def epoch_accuracy(responses: np.ndarray, labels: np.ndarray) -> float:
    """
    Running training accuracy: neurons are labelled from the epoch's own
    responses, then every image is classified by its summed spikes per label.
    """
    neuron_labels = assign_labels(responses, labels, N_CLASSES).labels
    predictions = [classify(counts, neuron_labels, N_CLASSES)[0] for counts in responses]
    return float(np.mean(np.asarray(predictions) == np.asarray(labels, dtype=np.int64)))


def image_encoder_config(cfg: EncoderConfig, index: int) -> EncoderConfig:
    """Encoder config for the index-th presentation: fresh randomness per image except with a single shared LFSR."""
    if cfg.mode is EncoderMode.SINGLE_LFSR:
        return cfg
    return replace(cfg, seed=cfg.seed + index)


def train_network(
    dataset: IdxDataset,
    params: ModelParams = ModelParams(),
    epochs: int = 1,
    encoder_cfg: Optional[EncoderConfig] = None,
    n_neurons: int = 400,
    seed: int = 1,
    w_init_max: float = 0.3,
    weight_norm_sum: float = 78.0,
    n_steps: int = DEFAULT_N_STEPS,
    network: Optional[RefNetwork] = None,
    rule: Optional[StdpRule] = None,
    show_progress: Optional[bool] = None,
) -> TrainingResult:
    """
    Train a reference layer with STDP, one sequential pass per epoch.

    Args:
        dataset: Training images; labels only feed the logged accuracy.
        params: Model and STDP parameters.
        epochs: Passes over the dataset (0 returns the initial network).
        encoder_cfg: Spike encoding; per-input LFSRs by default.
        n_neurons: Layer size when `network` is not given.
        seed: Weight initialization seed.
        w_init_max: Initial weights are uniform in [0, w_init_max].
        weight_norm_sum: Per-neuron weight sum enforced before each image (0 = off).
        n_steps: Steps per presentation.
        network: Continue training this network (copied) instead of a fresh one.
        rule: Weight update strategy; PairStdpRule(params.stdp) by default.
        show_progress: Progress bar on stderr; defaults to the logging verbosity.
    """
    if len(dataset) == 0:
        raise ConfigurationError("training dataset is empty")
    if epochs < 0:
        raise ConfigurationError(f"epochs must be >= 0, got {epochs}")
    encoder_cfg = encoder_cfg or EncoderConfig(mode=EncoderMode.PER_INPUT_LFSR, seed=seed)
    rule = rule or PairStdpRule(params.stdp)
    show_progress = is_verbose() if show_progress is None else show_progress
    logger = get_logger()

    if network is None:
        n_inputs = dataset.flat().shape[1]
        net = RefNetwork.initial(n_inputs, n_neurons, params, w_init_max, seed)
    else:
        net = network.copy()
    images = dataset.flat()
    rows = []

    presented = 0
    for epoch in range(1, epochs + 1):
        responses = np.zeros((len(images), net.n_neurons), dtype=np.int64)
        batches = progress(images, f"Epoch {epoch}/{epochs}", enabled=show_progress, total=len(images))
        for i, image in enumerate(batches):
            if weight_norm_sum > 0:
                normalize_weights(net.weights, weight_norm_sum, params.stdp.w_max)
            train = SpikeEncoder(image_encoder_config(encoder_cfg, presented), image).encode(n_steps)
            responses[i] = net.run(train, rule)
            presented += 1
        row = {
            "epoch": epoch,
            "images": len(images),
            "mean_spikes": int(responses.sum()) / len(images),
            "accuracy": epoch_accuracy(responses, dataset.labels),
            "mean_theta": float(net.theta.mean()),
            "mean_weight": float(net.weights.mean()),
        }
        rows.append(row)
        logger.info(
            f"Epoch {epoch}: {row['mean_spikes']:.2f} spikes/image, accuracy {row['accuracy']:.4f}, "
            f"mean theta {row['mean_theta']:.4f} mV, mean weight {row['mean_weight']:.4f}"
        )

    return TrainingResult(net, pd.DataFrame(rows, columns=TRAIN_LOG_COLUMNS))


def stdp_train(dataset: IdxDataset, params: ModelParams = ModelParams(), epochs: int = 1, **kwargs) -> tuple[np.ndarray, np.ndarray]:
    """Train and return (weights, thetas) in full precision."""
    result = train_network(dataset, params, epochs, **kwargs)
    return result.weights, result.theta
