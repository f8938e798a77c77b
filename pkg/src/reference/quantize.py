"""
Full-precision parameters to engine-ready codes.

Thresholds, v_reset and w_inh are moved into the rest-shifted frame (rest at
0) before quantization; weights are already differences and only quantized.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..core.fixedpoint import (
    MEMBRANE_FORMAT,
    WEIGHT_FORMAT,
    ArithmeticMode,
    FixedFormat,
    OverflowLog,
    decay_shift_for,
    quantize,
    quantize_array,
)
from ..data.network_file import LayerParams, NetworkFile
from ..utils.logging_helpers import get_logger
from .lif import ModelParams


def shifted_thresholds(theta: np.ndarray, params: ModelParams) -> np.ndarray:
    """Firing thresholds relative to rest, in mV."""
    return params.v_thresh_base + np.asarray(theta, dtype=np.float64) - params.v_rest


def quantize_network(
    weights: np.ndarray,
    thetas: np.ndarray,
    params: ModelParams = ModelParams(),
    weight_format: FixedFormat = WEIGHT_FORMAT,
    membrane_format: FixedFormat = MEMBRANE_FORMAT,
    labels: Optional[np.ndarray] = None,
    decay_shift: Optional[int] = None,
    log: Optional[OverflowLog] = None,
) -> NetworkFile:
    """
    Quantize one trained layer (saturating) into a network file.

    Saturations are counted in `log` when given and reported as a warning.
    """
    log = log if log is not None else OverflowLog()
    mode = ArithmeticMode.SATURATE
    weight_codes = quantize_array(weights, weight_format, mode, log)
    theta_codes = quantize_array(shifted_thresholds(thetas, params), membrane_format, mode, log)
    w_inh = quantize(params.w_inh, membrane_format, mode, log).raw
    v_reset = quantize(params.v_reset - params.v_rest, membrane_format, mode, log).raw
    if w_inh >= 0:
        # Rounded away on a coarse grid; the smallest inhibitory step keeps the sign.
        w_inh = -1
    shift = decay_shift if decay_shift is not None else decay_shift_for(params.dt, params.tau)

    if log.saturations:
        get_logger().warning(
            f"{log.saturations} values saturated while quantizing to weights {weight_format}, "
            f"membrane {membrane_format}"
        )
    return NetworkFile(
        weight_format=weight_format,
        membrane_format=membrane_format,
        decay_shift=shift,
        w_inh=w_inh,
        v_reset=v_reset,
        layers=[LayerParams(weight_codes, theta_codes)],
        labels=labels,
    )
