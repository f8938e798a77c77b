"""
Batch evaluation of the engine and the reference model.

Images are split into chunks; with workers > 1 the chunks run in a process
pool, and results are concatenated in chunk order so the outcome does not
depend on the worker count.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np
import pandas as pd

from ..core.encoding import EncoderConfig, EncoderMode, SpikeEncoder
from ..core.engine import Engine, EngineConfig, classify
from ..core.fixedpoint import MEMBRANE_FORMAT, WEIGHT_FORMAT, FixedFormat
from ..data.idx import N_CLASSES, IdxDataset
from ..data.model_file import ModelArchive
from ..data.network_file import NetworkFile
from ..reference.lif import RefNetwork
from ..reference.quantize import quantize_network
from ..utils.errors import ConfigurationError
from ..utils.logging_helpers import get_logger, is_verbose
from ..utils.utils import chunk_size, parallel_map, progress


@dataclass(eq=False)
class EvalResult:
    """Per-image outcome of one evaluation run."""
    predictions: np.ndarray
    labels: np.ndarray
    zero_confidence: np.ndarray
    active_steps: np.ndarray
    clock_cycles: np.ndarray
    overflow_events: np.ndarray
    saturations: np.ndarray

    @classmethod
    def concat(cls, parts: list["EvalResult"]) -> "EvalResult":
        fields = cls.__dataclass_fields__
        return cls(**{name: np.concatenate([getattr(p, name) for p in parts]) for name in fields})

    @property
    def n_images(self) -> int:
        return int(self.labels.shape[0])

    @property
    def accuracy(self) -> float:
        if self.n_images == 0:
            return 0.0
        return float(np.mean(self.predictions == self.labels))

    @property
    def total_overflow(self) -> int:
        return int(self.overflow_events.sum())

    @property
    def images_with_overflow(self) -> int:
        return int(np.count_nonzero(self.overflow_events))

    @property
    def mean_active_steps(self) -> float:
        return float(self.active_steps.mean()) if self.n_images else 0.0

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({
            "image": np.arange(self.n_images),
            "label": self.labels,
            "prediction": self.predictions,
            "zero_confidence": self.zero_confidence.astype(int),
            "active_steps": self.active_steps,
            "clock_cycles": self.clock_cycles,
            "overflow_events": self.overflow_events,
        })

    def confusion(self, n_classes: int = N_CLASSES) -> pd.DataFrame:
        """Rows are true labels, columns predictions."""
        index = pd.Index(range(n_classes), name="label")
        columns = pd.Index(range(n_classes), name="predicted")
        table = pd.crosstab(
            pd.Series(self.labels, name="label"), pd.Series(self.predictions, name="predicted")
        )
        return table.reindex(index=index, columns=columns, fill_value=0)


# ---------------------------------------------------------------------------
# Engine
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _EngineJob:
    net: NetworkFile
    engine_cfg: EngineConfig
    encoder_cfg: EncoderConfig
    images: np.ndarray
    labels: np.ndarray


def _run_engine_job(job: _EngineJob) -> EvalResult:
    engine = Engine.from_network_file(job.net, job.engine_cfg)
    n = job.images.shape[0]
    out = {name: np.zeros(n, dtype=np.int64) for name in
           ("predictions", "active_steps", "clock_cycles", "overflow_events", "saturations")}
    zero = np.zeros(n, dtype=bool)
    for i, image in enumerate(job.images):
        result = engine.infer(image, job.encoder_cfg)
        out["predictions"][i] = result.label
        out["active_steps"][i] = result.stats.active_steps
        out["clock_cycles"][i] = result.stats.clock_cycles
        out["overflow_events"][i] = result.overflow.count
        out["saturations"][i] = result.overflow.saturations
        zero[i] = result.zero_confidence
    return EvalResult(labels=np.asarray(job.labels, dtype=np.int64), zero_confidence=zero, **out)


def _split(dataset: IdxDataset, workers: int) -> tuple[np.ndarray, int, list[int]]:
    """Flattened images, chunk size and chunk starts; serial runs use small chunks for progress."""
    size = chunk_size(len(dataset), workers) if workers > 1 else 32
    return dataset.flat(), size, list(range(0, len(dataset), size))


def engine_eval(
    net: NetworkFile,
    dataset: IdxDataset,
    engine_cfg: EngineConfig = EngineConfig(),
    encoder_cfg: EncoderConfig = EncoderConfig(),
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> EvalResult:
    """Classify every image of `dataset` on the bit-accurate engine."""
    if len(dataset) == 0:
        raise ConfigurationError("evaluation dataset is empty")
    if net.labels is None:
        raise ConfigurationError("network has no label assignment; run assign-labels first")
    show_progress = is_verbose() if show_progress is None else show_progress
    images, size, starts = _split(dataset, workers)
    jobs = [
        _EngineJob(net, engine_cfg, encoder_cfg, images[s:s + size], dataset.labels[s:s + size])
        for s in starts
    ]
    if workers > 1:
        parts = parallel_map(_run_engine_job, jobs, workers)
    else:
        parts = [_run_engine_job(job) for job in progress(jobs, "Engine", unit="chunk", enabled=show_progress)]
    result = EvalResult.concat(parts)
    get_logger().info(f"Engine accuracy {result.accuracy:.4f} on {result.n_images} images")
    return result


# ---------------------------------------------------------------------------
# Reference
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _ReferenceJob:
    network: RefNetwork
    encoder_cfg: EncoderConfig
    n_steps: int
    images: np.ndarray


def _run_reference_job(job: _ReferenceJob) -> np.ndarray:
    counts = np.zeros((job.images.shape[0], job.network.n_neurons), dtype=np.int64)
    for i, image in enumerate(job.images):
        train = SpikeEncoder(job.encoder_cfg, image).encode(job.n_steps)
        counts[i] = job.network.run(train)
    return counts


def reference_responses(
    network: RefNetwork,
    dataset: IdxDataset,
    encoder_cfg: EncoderConfig,
    n_steps: int,
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> np.ndarray:
    """(n_images, n_neurons) spike counts of the full-precision layer; weights are not modified."""
    if len(dataset) == 0:
        raise ConfigurationError("dataset is empty")
    show_progress = is_verbose() if show_progress is None else show_progress
    images, size, starts = _split(dataset, workers)
    jobs = [_ReferenceJob(network, encoder_cfg, n_steps, images[s:s + size]) for s in starts]
    if workers > 1:
        parts = parallel_map(_run_reference_job, jobs, workers)
    else:
        parts = [_run_reference_job(job) for job in progress(jobs, "Reference", unit="chunk", enabled=show_progress)]
    return np.concatenate(parts, axis=0)


def reference_eval(
    network: RefNetwork,
    labels: np.ndarray,
    dataset: IdxDataset,
    encoder_cfg: EncoderConfig,
    n_steps: int,
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> EvalResult:
    """Classify with the full-precision layer; cycle and overflow columns are zero."""
    responses = reference_responses(network, dataset, encoder_cfg, n_steps, workers, show_progress)
    n = responses.shape[0]
    predictions = np.zeros(n, dtype=np.int64)
    zero = np.zeros(n, dtype=bool)
    for i, counts in enumerate(responses):
        predictions[i], _, zero[i] = classify(counts, labels, N_CLASSES)
    blank = np.zeros(n, dtype=np.int64)
    result = EvalResult(
        predictions, np.asarray(dataset.labels, dtype=np.int64), zero,
        blank, blank.copy(), blank.copy(), blank.copy(),
    )
    get_logger().info(f"Reference accuracy {result.accuracy:.4f} on {result.n_images} images")
    return result


# ---------------------------------------------------------------------------
# Accuracy ladder
# ---------------------------------------------------------------------------

LADDER_RUNGS = ("reference_per_input", "reference_single_lfsr", "engine_quantized")


def accuracy_ladder(
    archive: ModelArchive,
    dataset: IdxDataset,
    encoder_cfg: EncoderConfig,
    engine_cfg: EngineConfig,
    weight_format: FixedFormat = WEIGHT_FORMAT,
    membrane_format: FixedFormat = MEMBRANE_FORMAT,
    workers: int = 1,
) -> tuple[pd.DataFrame, dict[str, EvalResult]]:
    """
    Accuracy of successive simplifications on the same images.

    1. full-precision layer, one LFSR per input
    2. full-precision layer, one shared LFSR
    3. quantized engine, one shared LFSR

    `drop` is the loss in accuracy points against the previous rung.
    """
    labels = archive.require_labels()
    per_input = encoder_cfg.with_mode(EncoderMode.PER_INPUT_LFSR)
    single = encoder_cfg.with_mode(EncoderMode.SINGLE_LFSR)
    net = quantize_network(
        archive.network.weights, archive.network.theta, archive.params,
        weight_format, membrane_format, labels=labels,
    )
    engine_cfg = replace(engine_cfg, membrane_format=membrane_format)
    results = {
        LADDER_RUNGS[0]: reference_eval(archive.network, labels, dataset, per_input, engine_cfg.n_steps, workers),
        LADDER_RUNGS[1]: reference_eval(archive.network, labels, dataset, single, engine_cfg.n_steps, workers),
        LADDER_RUNGS[2]: engine_eval(net, dataset, engine_cfg, single, workers),
    }
    rows = []
    previous = None
    for rung, result in results.items():
        accuracy = 100.0 * result.accuracy
        rows.append({
            "rung": rung,
            "images": result.n_images,
            "accuracy": accuracy,
            "drop": 0.0 if previous is None else previous - accuracy,
            "zero_confidence": int(result.zero_confidence.sum()),
        })
        previous = accuracy
    return pd.DataFrame(rows), results
