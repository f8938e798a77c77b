"""
Design-space sweeps: membrane width vs overflow, weight fraction vs accuracy.

Every sweep point is independent and owns its engines; points and image
chunks fan out together when workers > 1 and are reduced in a fixed order.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from ..core.encoding import EncoderConfig, SpikeEncoder
from ..core.engine import Engine, EngineConfig
from ..core.fixedpoint import MAX_TOTAL_BITS, ArithmeticMode, FixedFormat, OverflowLog
from ..data.idx import IdxDataset
from ..data.model_file import ModelArchive
from ..data.network_file import NetworkFile
from ..reference.quantize import quantize_network
from ..utils.errors import ConfigurationError, ContractViolation
from ..utils.logging_helpers import get_logger, is_verbose
from ..utils.utils import chunk_size, parallel_map, progress
from .evaluation import engine_eval

DEFAULT_BIT_RANGE = range(5, 33)
DEFAULT_FRAC_RANGE = (0, 1, 2, 3, 4, 5, 6, 8, 12)
PLATEAU_TOLERANCE = 1.5


@dataclass(eq=False)
class SweepResult:
    """
    One metric per axis point.

    `threshold` is the minimal zero-overflow width for the overflow sweep and
    the plateau width for the quantization sweep (None when not reached).
    """
    axis_name: str
    axis: np.ndarray
    metric_name: str
    metric: np.ndarray
    threshold: Optional[int] = None
    extra: Dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.axis = np.asarray(self.axis, dtype=np.int64)
        self.metric = np.asarray(self.metric)
        if self.axis.shape != self.metric.shape:
            raise ContractViolation("one metric value per axis point expected")
        if np.any(np.diff(self.axis) <= 0):
            raise ContractViolation("sweep axis must be strictly increasing")

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({self.axis_name: self.axis, self.metric_name: self.metric})
        for name, values in self.extra.items():
            frame[name] = values
        return frame


def _sorted_axis(values: Sequence[int]) -> list[int]:
    axis = sorted(set(int(v) for v in values))
    if not axis:
        raise ConfigurationError("sweep range is empty")
    return axis


# ---------------------------------------------------------------------------
# Overflow vs membrane width
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class _OverflowJob:
    net: NetworkFile
    engine_cfg: EngineConfig
    encoder_cfg: EncoderConfig
    images: np.ndarray


def _run_overflow_job(job: _OverflowJob) -> tuple[int, int]:
    """(overflow events, images with at least one event) for one width and one chunk."""
    engine = Engine.from_network_file(job.net, job.engine_cfg)
    events = 0
    affected = 0
    for image in job.images:
        log = OverflowLog()
        engine.run(SpikeEncoder(job.encoder_cfg, image).encode(job.engine_cfg.n_steps), log)
        events += log.count
        affected += int(not log.clean)
    return events, affected


def minimal_zero_width(axis: Sequence[int], events: Sequence[int]) -> Optional[int]:
    """Smallest width from which every wider point has no overflow."""
    threshold = None
    for width, count in zip(reversed(list(axis)), reversed(list(events))):
        if count:
            break
        threshold = int(width)
    return threshold


def overflow_sweep(
    dataset: IdxDataset,
    net: NetworkFile,
    bit_range: Sequence[int] = DEFAULT_BIT_RANGE,
    engine_cfg: EngineConfig = EngineConfig(),
    encoder_cfg: EncoderConfig = EncoderConfig(),
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> SweepResult:
    """
    Count wrap-mode overflow events for each membrane width.

    The fractional bits of the membrane stay at the network's; thresholds and
    layer scalars are re-quantized into each width.
    """
    if len(dataset) == 0:
        raise ConfigurationError("sweep dataset is empty")
    axis = _sorted_axis(bit_range)
    frac = net.membrane_format.frac_bits
    show_progress = is_verbose() if show_progress is None else show_progress
    images = dataset.flat()
    size = chunk_size(len(dataset), workers) if workers > 1 else len(dataset)

    jobs = []
    for width in axis:
        if not frac < width <= MAX_TOTAL_BITS:
            raise ConfigurationError(f"width {width} cannot hold {frac} fractional bits")
        cfg = replace(engine_cfg, membrane_format=FixedFormat(width, frac), mode=ArithmeticMode.WRAP)
        jobs += [_OverflowJob(net, cfg, encoder_cfg, images[s:s + size]) for s in range(0, len(dataset), size)]
    if workers > 1:
        parts = parallel_map(_run_overflow_job, jobs, workers)
    else:
        parts = [_run_overflow_job(job) for job in progress(jobs, "Overflow sweep", unit="pt", enabled=show_progress)]

    per_width = len(jobs) // len(axis)
    events = np.array([sum(p[0] for p in parts[i * per_width:(i + 1) * per_width]) for i in range(len(axis))])
    affected = np.array([sum(p[1] for p in parts[i * per_width:(i + 1) * per_width]) for i in range(len(axis))])
    threshold = minimal_zero_width(axis, events)
    get_logger().info(f"Overflow sweep: minimal zero-overflow width {threshold}")
    return SweepResult("bits", axis, "overflow_events", events, threshold, {"images_with_overflow": affected})


# ---------------------------------------------------------------------------
# Accuracy vs fractional weight bits
# ---------------------------------------------------------------------------

def quant_formats(frac_bits: int, membrane_format: FixedFormat) -> tuple[FixedFormat, FixedFormat]:
    """
    Weight and membrane formats for a fractional weight width.

    Weights keep one integer bit plus sign; the membrane keeps its integer
    bits and gains fractional bits when the weights need them.
    """
    weight_format = FixedFormat(frac_bits + 2, frac_bits)
    membrane_frac = max(frac_bits, membrane_format.frac_bits)
    int_bits = membrane_format.total_bits - membrane_format.frac_bits
    total = min(MAX_TOTAL_BITS, int_bits + membrane_frac)
    return weight_format, FixedFormat(total, membrane_frac)


def plateau_width(axis: Sequence[int], accuracy: Sequence[float], tolerance: float = PLATEAU_TOLERANCE) -> Optional[int]:
    """Smallest fractional width within `tolerance` accuracy points of the widest one."""
    reference = accuracy[-1]
    for frac, value in zip(axis, accuracy):
        if reference - value <= tolerance:
            return int(frac)
    return None


def quant_sweep(
    dataset: IdxDataset,
    archive: ModelArchive,
    frac_bits_range: Sequence[int] = DEFAULT_FRAC_RANGE,
    membrane_format: FixedFormat = FixedFormat(16, 3),
    engine_cfg: EngineConfig = EngineConfig(),
    encoder_cfg: EncoderConfig = EncoderConfig(),
    workers: int = 1,
    show_progress: Optional[bool] = None,
) -> SweepResult:
    """Engine accuracy (percent) with weights quantized to each fractional width."""
    labels = archive.require_labels()
    axis = _sorted_axis(frac_bits_range)
    accuracy = []
    for frac in progress(axis, "Quantization sweep", unit="pt", enabled=is_verbose() if show_progress is None else show_progress):
        if not 0 <= frac <= MAX_TOTAL_BITS - 2:
            raise ConfigurationError(f"fractional width {frac} out of range")
        weight_format, membrane = quant_formats(frac, membrane_format)
        net = quantize_network(
            archive.network.weights, archive.network.theta, archive.params,
            weight_format, membrane, labels=labels,
        )
        cfg = replace(engine_cfg, membrane_format=membrane)
        result = engine_eval(net, dataset, cfg, encoder_cfg, workers, show_progress=False)
        accuracy.append(100.0 * result.accuracy)
    accuracy = np.array(accuracy)
    threshold = plateau_width(axis, accuracy)
    get_logger().info(f"Quantization sweep: plateau from {threshold} fractional bits")
    return SweepResult("frac_bits", axis, "accuracy", accuracy, threshold,
                       {"weight_bits": np.array(axis) + 2})
