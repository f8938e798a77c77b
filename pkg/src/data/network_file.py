"""
Quantized network file (".snnw"): the weights and thresholds the engine loads.

Layout, all little-endian:

    magic            4 bytes  b"SNNW"
    version          u16      FORMAT_VERSION
    layer_count      u16
    weight_bits      u8       weight format, total bits
    weight_frac      u8       weight format, fractional bits
    membrane_bits    u8       membrane format, total bits
    membrane_frac    u8       membrane format, fractional bits
    decay_shift      u8
    has_labels       u8       0 or 1
    reserved         u16      0
    w_inh            i32      raw membrane code, shared by every layer
    v_reset          i32      raw membrane code, shared by every layer
    layer dims       layer_count x (u32 n_inputs, u32 n_neurons)
    per layer:
        weights      n_neurons * n_inputs codes, row-major, weight element size
        thresholds   n_neurons codes, membrane element size
    labels           i16 per output neuron, only when has_labels = 1

A format of up to 8 bits is stored in 1 byte per code, up to 16 in 2, else 4.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Union

import numpy as np

from ..core.fixedpoint import FixedFormat
from ..utils.errors import ContractViolation, NetworkFormatError

MAGIC = b"SNNW"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<HHBBBBBBHii")
_DIMS = struct.Struct("<II")
_MAX_DIM = 0xFFFFFFFF


def element_dtype(fmt: FixedFormat) -> np.dtype:
    """Smallest little-endian signed integer that holds every code of `fmt`."""
    if fmt.total_bits <= 8:
        return np.dtype("<i1")
    if fmt.total_bits <= 16:
        return np.dtype("<i2")
    return np.dtype("<i4")


@dataclass(eq=False)
class LayerParams:
    """Raw codes of one layer: weights in the weight format, thresholds in the membrane format."""
    weights: np.ndarray
    thresholds: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        self.thresholds = np.asarray(self.thresholds, dtype=np.int64).reshape(-1)

    @property
    def n_neurons(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.weights.shape[1])


@dataclass(eq=False)
class NetworkFile:
    weight_format: FixedFormat
    membrane_format: FixedFormat
    decay_shift: int
    w_inh: int
    v_reset: int
    layers: List[LayerParams] = field(default_factory=list)
    labels: Optional[np.ndarray] = None
    version: int = FORMAT_VERSION

    def __post_init__(self):
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64).reshape(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, NetworkFile):
            return NotImplemented
        same_labels = (self.labels is None and other.labels is None) or (
            self.labels is not None and other.labels is not None
            and np.array_equal(self.labels, other.labels)
        )
        return (
            self.weight_format == other.weight_format
            and self.membrane_format == other.membrane_format
            and self.decay_shift == other.decay_shift
            and self.w_inh == other.w_inh
            and self.v_reset == other.v_reset
            and self.version == other.version
            and len(self.layers) == len(other.layers)
            and all(
                np.array_equal(a.weights, b.weights) and np.array_equal(a.thresholds, b.thresholds)
                for a, b in zip(self.layers, other.layers)
            )
            and same_labels
        )

    @property
    def dims(self) -> list[tuple[int, int]]:
        return [(layer.n_inputs, layer.n_neurons) for layer in self.layers]

    def with_labels(self, labels: Optional[np.ndarray]) -> "NetworkFile":
        return NetworkFile(
            self.weight_format, self.membrane_format, self.decay_shift, self.w_inh, self.v_reset,
            self.layers, labels, self.version,
        )

    def validate(self) -> None:
        """Raise NetworkFormatError unless every header/payload invariant holds."""
        if self.version != FORMAT_VERSION:
            raise NetworkFormatError(f"unsupported version {self.version}")
        if not self.layers:
            raise NetworkFormatError("network has no layers")
        if len(self.layers) > 0xFFFF:
            raise NetworkFormatError(f"too many layers: {len(self.layers)}")
        mf, wf = self.membrane_format, self.weight_format
        if not 0 < self.decay_shift < mf.total_bits:
            raise NetworkFormatError(f"decay shift {self.decay_shift} invalid for membrane {mf}")
        if not (mf.contains(self.w_inh) and mf.contains(self.v_reset)):
            raise NetworkFormatError(f"w_inh/v_reset do not fit membrane {mf}")
        previous = None
        for index, layer in enumerate(self.layers):
            if layer.weights.ndim != 2:
                raise NetworkFormatError(f"layer {index}: weights must be a matrix")
            if layer.n_inputs > _MAX_DIM or layer.n_neurons > _MAX_DIM:
                raise NetworkFormatError(f"layer {index}: dimensions overflow 32 bits")
            if layer.thresholds.shape[0] != layer.n_neurons:
                raise NetworkFormatError(f"layer {index}: one threshold per neuron expected")
            if previous is not None and previous != layer.n_inputs:
                raise NetworkFormatError(f"layer {index}: expects {layer.n_inputs} inputs, previous layer has {previous}")
            _check_codes(layer.weights, wf, f"layer {index} weights")
            _check_codes(layer.thresholds, mf, f"layer {index} thresholds")
            previous = layer.n_neurons
        if self.labels is not None:
            if self.labels.shape[0] != self.layers[-1].n_neurons:
                raise NetworkFormatError("one label per output neuron expected")
            if self.labels.size and (self.labels.min() < 0 or self.labels.max() > 0x7FFF):
                raise NetworkFormatError("labels must lie in 0..32767")


def _check_codes(codes: np.ndarray, fmt: FixedFormat, what: str) -> None:
    if codes.size and (codes.min() < fmt.min_raw or codes.max() > fmt.max_raw):
        raise NetworkFormatError(f"{what} do not fit format {fmt}")


def write_network(net: NetworkFile) -> bytes:
    net.validate()
    wf, mf = net.weight_format, net.membrane_format
    parts = [
        MAGIC,
        _HEADER.pack(
            net.version, len(net.layers), wf.total_bits, wf.frac_bits, mf.total_bits, mf.frac_bits,
            net.decay_shift, int(net.labels is not None), 0, net.w_inh, net.v_reset,
        ),
    ]
    parts += [_DIMS.pack(n_in, n_out) for n_in, n_out in net.dims]
    for layer in net.layers:
        parts.append(layer.weights.astype(element_dtype(wf)).tobytes())
        parts.append(layer.thresholds.astype(element_dtype(mf)).tobytes())
    if net.labels is not None:
        parts.append(net.labels.astype("<i2").tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes):
        self.data = memoryview(data)
        self.offset = 0

    def take(self, n: int, what: str) -> memoryview:
        if self.offset + n > len(self.data):
            raise NetworkFormatError(
                f"truncated {what}: need {n} bytes at offset {self.offset}, file has {len(self.data)}"
            )
        chunk = self.data[self.offset:self.offset + n]
        self.offset += n
        return chunk

    def array(self, dtype: np.dtype, count: int, what: str) -> np.ndarray:
        raw = self.take(count * dtype.itemsize, what)
        return np.frombuffer(raw, dtype=dtype, count=count).astype(np.int64)


def read_network(data: bytes) -> NetworkFile:
    """Decode a network file; any inconsistency raises NetworkFormatError."""
    reader = _Reader(data)
    magic = bytes(reader.take(len(MAGIC), "magic"))
    if magic != MAGIC:
        raise NetworkFormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    (version, layer_count, w_bits, w_frac, m_bits, m_frac,
     decay_shift, has_labels, _reserved, w_inh, v_reset) = _HEADER.unpack(reader.take(_HEADER.size, "header"))
    if version != FORMAT_VERSION:
        raise NetworkFormatError(f"unsupported version {version}, expected {FORMAT_VERSION}")
    if has_labels not in (0, 1):
        raise NetworkFormatError(f"bad has_labels flag {has_labels}")
    try:
        wf = FixedFormat(w_bits, w_frac)
        mf = FixedFormat(m_bits, m_frac)
    except ContractViolation as e:
        raise NetworkFormatError(f"invalid format in header: {e}") from None

    dims = [_DIMS.unpack(reader.take(_DIMS.size, "layer dimensions")) for _ in range(layer_count)]
    layers = []
    for n_inputs, n_neurons in dims:
        weights = reader.array(element_dtype(wf), n_inputs * n_neurons, "weights")
        thresholds = reader.array(element_dtype(mf), n_neurons, "thresholds")
        layers.append(LayerParams(weights.reshape(n_neurons, n_inputs), thresholds))
    labels = None
    if has_labels:
        labels = reader.array(np.dtype("<i2"), dims[-1][1] if dims else 0, "labels")
    if reader.offset != len(reader.data):
        raise NetworkFormatError(f"{len(reader.data) - reader.offset} trailing bytes after payload")

    net = NetworkFile(wf, mf, decay_shift, w_inh, v_reset, layers, labels, version)
    net.validate()
    return net


def save_network(net: NetworkFile, path: Union[str, Path]) -> Path:
    p = Path(path).resolve()
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_bytes(write_network(net))
    return p


def load_network(path: Union[str, Path]) -> NetworkFile:
    p = Path(path)
    if not p.exists():
        raise FileNotFoundError(f"network file not found: {p}")
    return read_network(p.read_bytes())
