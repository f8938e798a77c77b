"""
Spike activity statistics over a dataset.

A step is active when any excitatory input or any inhibitory (previous-step
output) spike is present. Without a network only the excitatory side exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import pandas as pd

from ..core.encoding import EncoderConfig, SpikeEncoder
from ..core.engine import Engine, EngineConfig
from ..data.idx import IdxDataset
from ..data.network_file import NetworkFile
from ..utils.logging_helpers import is_verbose
from ..utils.utils import chunk_size, parallel_map, progress


def _bincount(values: np.ndarray, size: int) -> np.ndarray:
    counts = np.bincount(values, minlength=size)
    return counts if counts.shape[0] == size else np.pad(counts, (0, size - counts.shape[0]))


@dataclass(eq=False)
class ActivityReport:
    """
    active_steps: active steps of every image, in dataset order.
    exc_histogram[k]: active steps with k simultaneous excitatory spikes.
    inh_histogram[k]: active steps with k simultaneous inhibitory spikes.
    """
    n_steps: int
    active_steps: np.ndarray
    exc_histogram: np.ndarray
    inh_histogram: np.ndarray

    @property
    def n_images(self) -> int:
        return int(self.active_steps.shape[0])

    @property
    def active_step_fraction(self) -> float:
        total = self.n_images * self.n_steps
        return float(self.active_steps.sum()) / total if total else 0.0

    @property
    def mean_active_steps(self) -> float:
        return float(self.active_steps.mean()) if self.n_images else 0.0

    def active_steps_histogram(self) -> pd.DataFrame:
        """Images per active-step count; only populated counts are listed."""
        counts = pd.Series(self.active_steps).value_counts().sort_index()
        return pd.DataFrame({"active_steps": counts.index.astype(int), "images": counts.values})

    def simultaneous_spike_histogram(self) -> pd.DataFrame:
        """Active steps per number of simultaneous spikes, excitatory and inhibitory side by side."""
        size = max(self.exc_histogram.shape[0], self.inh_histogram.shape[0])
        frame = pd.DataFrame({
            "spikes": np.arange(size),
            "exc_steps": np.pad(self.exc_histogram, (0, size - self.exc_histogram.shape[0])),
            "inh_steps": np.pad(self.inh_histogram, (0, size - self.inh_histogram.shape[0])),
        })
        return frame[(frame.exc_steps > 0) | (frame.inh_steps > 0)].reset_index(drop=True)

    def summary(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "images": self.n_images,
            "n_steps": self.n_steps,
            "mean_active_steps": self.mean_active_steps,
            "active_fraction": self.active_step_fraction,
            "max_exc_spikes": int(np.flatnonzero(self.exc_histogram).max(initial=0)),
            "max_inh_spikes": int(np.flatnonzero(self.inh_histogram).max(initial=0)),
        }])


@dataclass(frozen=True)
class _ActivityJob:
    images: np.ndarray
    encoder_cfg: EncoderConfig
    n_steps: int
    net: Optional[NetworkFile]
    engine_cfg: EngineConfig


def _run_activity_job(job: _ActivityJob) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n_images = job.images.shape[0]
    n_inputs = job.images.shape[1]
    engine = Engine.from_network_file(job.net, job.engine_cfg) if job.net is not None else None
    n_neurons = engine.layers[0].n_neurons if engine is not None else 0
    active = np.zeros(n_images, dtype=np.int64)
    exc_hist = np.zeros(n_inputs + 1, dtype=np.int64)
    inh_hist = np.zeros(n_neurons + 1, dtype=np.int64)
    for i, image in enumerate(job.images):
        train = SpikeEncoder(job.encoder_cfg, image).encode(job.n_steps)
        if engine is not None:
            _, trace = engine.run(train, record=True)
            exc, inh = trace.exc_counts, trace.inh_counts
        else:
            exc = np.count_nonzero(train.bits, axis=1)
            inh = np.zeros_like(exc)
        is_active = (exc > 0) | (inh > 0)
        active[i] = int(np.count_nonzero(is_active))
        exc_hist += _bincount(exc[is_active], n_inputs + 1)
        inh_hist += _bincount(inh[is_active], n_neurons + 1)
    return active, exc_hist, inh_hist


def activity_stats(
    dataset: IdxDataset,
    encoder_cfg: EncoderConfig,
    net: Optional[NetworkFile] = None,
    engine_cfg: EngineConfig = EngineConfig(),
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> ActivityReport:
    """
    Simulate every image and collect per-step activity.

    With a network, inhibitory activity comes from an engine run; the engine
    configuration's n_steps sets the window either way.
    """
    show_progress = is_verbose() if show_progress is None else show_progress
    images = dataset.flat()
    size = chunk_size(len(dataset), workers) if workers > 1 else 32
    jobs = [
        _ActivityJob(images[s:s + size], encoder_cfg, engine_cfg.n_steps, net, engine_cfg)
        for s in range(0, len(dataset), size)
    ]
    if workers > 1:
        parts = parallel_map(_run_activity_job, jobs, workers)
    else:
        parts = [_run_activity_job(job) for job in progress(jobs, "Activity", unit="chunk", enabled=show_progress)]

    n_inputs = images.shape[1] if images.ndim == 2 else 0
    n_neurons = net.layers[0].n_neurons if net is not None else 0
    active = np.concatenate([p[0] for p in parts]) if parts else np.zeros(0, dtype=np.int64)
    exc_hist = sum((p[1] for p in parts), np.zeros(n_inputs + 1, dtype=np.int64))
    inh_hist = sum((p[2] for p in parts), np.zeros(n_neurons + 1, dtype=np.int64))
    return ActivityReport(engine_cfg.n_steps, active, exc_hist, inh_hist)
