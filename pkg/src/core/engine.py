"""
Bit-accurate emulation of the accelerator's inference path.

Per neuron the datapath does four things: integrate a weight, leak by a
shift, compare against its threshold (and load V_RESET on a spike), and
return to rest between images. A layer serializes the step's spikes through
that datapath: excitatory spikes in ascending index order, then the previous
step's inhibitory spikes, then one leak and one comparator pass. When a step
carries no spike at all the layer spends one clock cycle; otherwise it scans
every spike position, n_inputs + n_neurons cycles.

Potentials are in the rest-shifted frame: rest is 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Optional, Sequence

import numpy as np

from .encoding import DEFAULT_N_STEPS, EncoderConfig, SpikeEncoder, SpikeTrain, SpikeVector
from .fixedpoint import (
    DEFAULT_DECAY_SHIFT,
    MEMBRANE_FORMAT,
    WEIGHT_FORMAT,
    AddSubOp,
    ArithmeticMode,
    FixedFormat,
    FixedPoint,
    OverflowLog,
    add_array,
    add_sub,
    decay_array,
    decay_step,
    quantize_array,
)
from ..utils.errors import ConfigurationError, ContractViolation

if TYPE_CHECKING:
    from ..data.network_file import NetworkFile


@dataclass(frozen=True)
class EngineConfig:
    """
    Engine knobs. `membrane_format` and `decay_shift` left as None take the
    values declared by the network file.
    """
    membrane_format: Optional[FixedFormat] = None
    mode: ArithmeticMode = ArithmeticMode.SATURATE
    decay_shift: Optional[int] = None
    strict_leak: bool = False
    round_leak: bool = False
    decay_only_on_inactive: bool = False
    n_steps: int = DEFAULT_N_STEPS

    def __post_init__(self):
        object.__setattr__(self, "mode", ArithmeticMode(self.mode))
        if self.n_steps < 1:
            raise ContractViolation(f"n_steps must be >= 1, got {self.n_steps}")


# ---------------------------------------------------------------------------
# Single neuron
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NeuronState:
    v: FixedPoint
    theta: FixedPoint


def neuron_integrate(
    n: NeuronState,
    w: FixedPoint,
    mode: ArithmeticMode = ArithmeticMode.SATURATE,
    log: Optional[OverflowLog] = None,
) -> NeuronState:
    """Add an (aligned) excitatory or inhibitory weight to the potential."""
    return NeuronState(add_sub(n.v, w, AddSubOp.ADD, mode, log), n.theta)


def neuron_decay(
    n: NeuronState,
    shift: int = DEFAULT_DECAY_SHIFT,
    strict_leak: bool = False,
    round_leak: bool = False,
) -> NeuronState:
    return NeuronState(decay_step(n.v, shift, strict_leak, round_leak), n.theta)


def neuron_fire_check(n: NeuronState, v_reset: FixedPoint) -> tuple[bool, NeuronState]:
    """Fire when v strictly exceeds theta; a firing neuron loads v_reset."""
    if n.v.raw > n.theta.raw:
        return True, NeuronState(FixedPoint(v_reset.raw, n.v.format), n.theta)
    return False, n


def neuron_rest_reset(n: NeuronState) -> NeuronState:
    return NeuronState(FixedPoint(0, n.v.format), n.theta)


# ---------------------------------------------------------------------------
# Layer
# ---------------------------------------------------------------------------

@dataclass
class LayerState:
    """
    One fully connected layer: registers for every neuron plus the layer scalars.

    `weights` is (n_neurons, n_inputs) of raw codes already aligned to
    `membrane_format`; `w_inh` and `v_reset` are raw membrane codes shared by
    the whole layer.
    """
    v: np.ndarray
    theta: np.ndarray
    weights: np.ndarray
    w_inh: int
    v_reset: int
    membrane_format: FixedFormat = MEMBRANE_FORMAT
    out_spikes: np.ndarray = None
    _by_input: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.weights.ndim != 2:
            raise ContractViolation("weights must be a (n_neurons, n_inputs) matrix")
        n_neurons = self.weights.shape[0]
        self.v = np.asarray(self.v, dtype=np.int64).reshape(-1).copy()
        self.theta = np.asarray(self.theta, dtype=np.int64).reshape(-1).copy()
        if self.v.shape[0] != n_neurons or self.theta.shape[0] != n_neurons:
            raise ContractViolation("potential and threshold vectors must have one entry per neuron")
        if self.out_spikes is None:
            self.out_spikes = np.zeros(n_neurons, dtype=bool)
        if np.any(self.weights < 0):
            raise ContractViolation("excitatory weights must be non-negative")
        if self.w_inh >= 0:
            raise ContractViolation(f"inhibitory weight must be negative, got raw {self.w_inh}")
        fmt = self.membrane_format
        for name, values in (("weights", self.weights), ("theta", self.theta), ("v", self.v)):
            if values.size and (values.min() < fmt.min_raw or values.max() > fmt.max_raw):
                raise ContractViolation(f"{name} outside membrane format {fmt}")
        if not (fmt.contains(self.w_inh) and fmt.contains(self.v_reset)):
            raise ContractViolation(f"layer scalars outside membrane format {fmt}")
        self._by_input = np.ascontiguousarray(self.weights.T)

    @classmethod
    def from_codes(
        cls,
        weight_codes: np.ndarray,
        theta_codes: np.ndarray,
        w_inh: int,
        v_reset: int,
        weight_format: FixedFormat = WEIGHT_FORMAT,
        membrane_format: FixedFormat = MEMBRANE_FORMAT,
    ) -> "LayerState":
        """Build a layer from stored weight codes, aligning them to the membrane datapath."""
        extra = membrane_format.frac_bits - weight_format.frac_bits
        if extra < 0:
            raise ContractViolation(
                f"membrane {membrane_format} has fewer fractional bits than weights {weight_format}"
            )
        weights = np.asarray(weight_codes, dtype=np.int64) << extra
        n_neurons = weights.shape[0]
        return cls(
            v=np.zeros(n_neurons, dtype=np.int64),
            theta=theta_codes,
            weights=weights,
            w_inh=int(w_inh),
            v_reset=int(v_reset),
            membrane_format=membrane_format,
        )

    @property
    def n_neurons(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.weights.shape[1])

    @property
    def step_cost(self) -> int:
        """Clock cycles of an active step: every spike position is scanned."""
        return self.n_inputs + self.n_neurons

    @property
    def neurons(self) -> list[NeuronState]:
        fmt = self.membrane_format
        return [NeuronState(FixedPoint(int(v), fmt), FixedPoint(int(t), fmt))
                for v, t in zip(self.v, self.theta)]

    def rest_reset(self) -> None:
        self.v[:] = 0
        self.out_spikes[:] = False


def _step_bits(
    layer: LayerState,
    exc: np.ndarray,
    inh: np.ndarray,
    cfg: EngineConfig,
    shift: int,
    log: Optional[OverflowLog],
) -> tuple[np.ndarray, int]:
    fmt = layer.membrane_format
    mode = cfg.mode
    v = layer.v
    exc_idx = np.flatnonzero(exc)
    inh_idx = np.flatnonzero(inh)
    active = exc_idx.size > 0 or inh_idx.size > 0

    if active:
        for j in exc_idx:
            v = add_array(v, layer._by_input[j], fmt, mode, log)
        if inh_idx.size:
            delta = np.full(layer.n_neurons, layer.w_inh, dtype=np.int64)
            for k in inh_idx:
                delta[k] = 0
                v = add_array(v, delta, fmt, mode, log)
                delta[k] = layer.w_inh
        cycles = layer.step_cost
        if not cfg.decay_only_on_inactive:
            v = decay_array(v, shift, fmt, cfg.strict_leak, cfg.round_leak)
    else:
        v = decay_array(v, shift, fmt, cfg.strict_leak, cfg.round_leak)
        cycles = 1

    fired = v > layer.theta
    v = np.where(fired, layer.v_reset, v)
    layer.v = v
    layer.out_spikes = fired
    return fired, cycles


def layer_step(
    layer: LayerState,
    exc: SpikeVector,
    inh: SpikeVector,
    cfg: EngineConfig = EngineConfig(),
    log: Optional[OverflowLog] = None,
) -> tuple[SpikeVector, int, LayerState]:
    """
    Advance one layer by one elaboration step.

    `inh` is the layer's own output of the previous step; a neuron skips its
    own inhibitory bit. The layer is updated in place and also returned.
    """
    if len(exc) != layer.n_inputs:
        raise ContractViolation(f"exc has {len(exc)} bits, layer has {layer.n_inputs} inputs")
    if len(inh) != layer.n_neurons:
        raise ContractViolation(f"inh has {len(inh)} bits, layer has {layer.n_neurons} neurons")
    shift = cfg.decay_shift if cfg.decay_shift is not None else DEFAULT_DECAY_SHIFT
    fired, cycles = _step_bits(layer, exc.bits, inh.bits, cfg, shift, log)
    return SpikeVector(fired.copy()), cycles, layer


# ---------------------------------------------------------------------------
# Network
# ---------------------------------------------------------------------------

@dataclass
class CycleStats:
    active_steps: int = 0
    inactive_steps: int = 0
    clock_cycles: int = 0
    spikes_out: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))

    @property
    def total_steps(self) -> int:
        return self.active_steps + self.inactive_steps

    def classification_time(self, f_clk: float) -> float:
        if f_clk <= 0:
            raise ContractViolation("clock frequency must be positive")
        return self.clock_cycles / f_clk


@dataclass
class StepTrace:
    """Per-step set-bit counts of the first layer's excitatory and inhibitory inputs."""
    exc_counts: np.ndarray
    inh_counts: np.ndarray

    @property
    def exc_active(self) -> int:
        return int(np.count_nonzero(self.exc_counts))

    @property
    def inh_active(self) -> int:
        return int(np.count_nonzero(self.inh_counts))


@dataclass
class InferenceResult:
    label: int
    counts: np.ndarray
    stats: CycleStats
    overflow: OverflowLog
    zero_confidence: bool = False
    trace: Optional[StepTrace] = None


def classify(neuron_counts: np.ndarray, labels: np.ndarray, n_classes: Optional[int] = None) -> tuple[int, np.ndarray, bool]:
    """
    Sum output spikes per label and pick the largest total (lowest label on ties).

    Returns (label, per-label counts, zero_confidence) where zero_confidence
    means no output neuron fired at all.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = n_classes if n_classes is not None else int(labels.max()) + 1
    counts = np.bincount(labels, weights=np.asarray(neuron_counts, dtype=np.float64), minlength=n_classes)
    counts = counts.astype(np.int64)
    return int(np.argmax(counts)), counts, bool(counts.sum() == 0)


class Engine:
    """
    Network control unit over a chain of layers.

    Layer L's output feeds layer L+1 as excitatory input one step later, and
    layer L itself as inhibitory input one step later. A step costs as many
    cycles as its slowest layer.

    Usage:
        engine = Engine.from_network_file(net, EngineConfig())
        result = engine.infer(image, EncoderConfig())
    """

    def __init__(
        self,
        layers: Sequence[LayerState],
        cfg: EngineConfig = EngineConfig(),
        labels: Optional[np.ndarray] = None,
        decay_shift: int = DEFAULT_DECAY_SHIFT,
        n_classes: Optional[int] = None,
    ):
        if not layers:
            raise ConfigurationError("network has no layers")
        for prev, nxt in zip(layers, layers[1:]):
            if prev.n_neurons != nxt.n_inputs:
                raise ContractViolation(
                    f"layer with {prev.n_neurons} neurons cannot feed {nxt.n_inputs} inputs"
                )
        self.layers = list(layers)
        self.cfg = cfg
        self.labels = None if labels is None else np.asarray(labels, dtype=np.int64)
        self.shift = cfg.decay_shift if cfg.decay_shift is not None else decay_shift
        self.n_classes = n_classes

    @classmethod
    def from_network_file(cls, net: "NetworkFile", cfg: EngineConfig = EngineConfig()) -> "Engine":
        """
        Load an engine from a network file.

        If cfg overrides the membrane format, thresholds and layer scalars are
        re-quantized into it (saturating at its bounds).
        """
        membrane = cfg.membrane_format or net.membrane_format
        layers = []
        for params in net.layers:
            theta, w_inh, v_reset = _scalars_in(net, params.thresholds, membrane)
            layers.append(LayerState.from_codes(
                params.weights, theta, w_inh, v_reset, net.weight_format, membrane,
            ))
        return cls(layers, cfg, labels=net.labels, decay_shift=net.decay_shift)

    @property
    def n_inputs(self) -> int:
        return self.layers[0].n_inputs

    @property
    def output(self) -> LayerState:
        return self.layers[-1]

    def rest_reset(self) -> None:
        for layer in self.layers:
            layer.rest_reset()

    def run(self, train: SpikeTrain, log: Optional[OverflowLog] = None, record: bool = False) -> tuple[CycleStats, Optional[StepTrace]]:
        """Feed a spike train through the network from rest; potentials are back at rest afterwards."""
        if train.n_sources != self.n_inputs:
            raise ContractViolation(f"spike train has {train.n_sources} sources, network has {self.n_inputs} inputs")
        n_steps = len(train)
        stats = CycleStats(spikes_out=np.zeros(self.output.n_neurons, dtype=np.int64))
        exc_counts = np.zeros(n_steps, dtype=np.int64) if record else None
        inh_counts = np.zeros(n_steps, dtype=np.int64) if record else None
        self.rest_reset()

        for step in range(n_steps):
            previous = [layer.out_spikes for layer in self.layers]
            step_cycles = 0
            for index, layer in enumerate(self.layers):
                exc = train.bits[step] if index == 0 else previous[index - 1]
                _, cycles = _step_bits(layer, exc, previous[index], self.cfg, self.shift, log)
                step_cycles = max(step_cycles, cycles)
            if step_cycles > 1:
                stats.active_steps += 1
            else:
                stats.inactive_steps += 1
            stats.clock_cycles += step_cycles
            stats.spikes_out += self.output.out_spikes
            if record:
                exc_counts[step] = np.count_nonzero(train.bits[step])
                inh_counts[step] = np.count_nonzero(previous[0])

        self.rest_reset()
        trace = StepTrace(exc_counts, inh_counts) if record else None
        return stats, trace

    def spike_counts(self, image: np.ndarray, encoder_cfg: EncoderConfig) -> np.ndarray:
        """Output-layer spike counts for one image."""
        train = SpikeEncoder(encoder_cfg, image).encode(self.cfg.n_steps)
        stats, _ = self.run(train)
        return stats.spikes_out

    def infer(self, image: np.ndarray, encoder_cfg: EncoderConfig, record: bool = False) -> InferenceResult:
        if self.labels is None:
            raise ConfigurationError("network has no label assignment; run assign-labels first")
        if self.labels.shape[0] != self.output.n_neurons:
            raise ConfigurationError("label assignment does not match the output layer size")
        train = SpikeEncoder(encoder_cfg, image).encode(self.cfg.n_steps)
        log = OverflowLog()
        stats, trace = self.run(train, log, record=record)
        label, counts, zero = classify(stats.spikes_out, self.labels, self.n_classes)
        return InferenceResult(label, counts, stats, log, zero, trace)


def _scalars_in(net: "NetworkFile", thresholds: np.ndarray, membrane: FixedFormat) -> tuple[np.ndarray, int, int]:
    if membrane == net.membrane_format:
        return thresholds, net.w_inh, net.v_reset
    src = net.membrane_format
    theta = quantize_array(np.asarray(thresholds) * src.resolution, membrane)
    w_inh = int(quantize_array(np.array([net.w_inh * src.resolution]), membrane)[0])
    v_reset = int(quantize_array(np.array([net.v_reset * src.resolution]), membrane)[0])
    # The narrowest formats can round w_inh to 0; keep it inhibitory.
    w_inh = min(w_inh, -1)
    return theta, w_inh, v_reset


def infer(
    image: np.ndarray,
    net: "NetworkFile",
    cfg: EngineConfig = EngineConfig(),
    encoder_cfg: EncoderConfig = EncoderConfig(),
) -> InferenceResult:
    """Classify one image on the bit-accurate engine."""
    if net is None or not net.layers:
        raise ConfigurationError("no network weights loaded")
    return Engine.from_network_file(net, cfg).infer(image, encoder_cfg)
