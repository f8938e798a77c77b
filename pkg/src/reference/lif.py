"""
Full-precision current-based LIF model.

Potentials are in mV in the unshifted frame (rest at v_rest); times are in ms.
Each step first decays the potential with the exact exponential toward rest,
then adds the weights of the synapses that spiked, clips at v_floor, and
fires when the potential exceeds v_thresh_base + theta.

The layer simulation is event-driven: a step with no input spike and no
pending inhibition only moves potentials toward rest, so runs of such steps
collapse into one closed-form decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import TYPE_CHECKING, Iterable, Optional

import numpy as np

from ..core.encoding import SpikeTrain
from ..utils.errors import ContractViolation

if TYPE_CHECKING:
    from .stdp import StdpRule


@dataclass(frozen=True)
class StdpParams:
    eta_post: float = 0.01
    eta_pre: float = 0.0
    tau_pre: float = 20.0
    tau_post: float = 20.0
    x_offset: float = 0.4
    w_max: float = 1.0

    def __post_init__(self):
        if self.tau_pre <= 0 or self.tau_post <= 0:
            raise ContractViolation("trace time constants must be positive")
        if self.w_max <= 0:
            raise ContractViolation("w_max must be positive")
        if self.eta_post < 0 or self.eta_pre < 0:
            raise ContractViolation("learning rates must be non-negative")


@dataclass(frozen=True)
class ModelParams:
    v_rest: float = -65.0
    tau: float = 100.0
    dt: float = 0.1
    v_thresh_base: float = -52.0
    v_reset: float = -60.0
    v_floor: float = -100.0
    w_inh: float = -15.0
    theta_plus: float = 0.05
    tau_theta: float = 1e7
    stdp: StdpParams = field(default_factory=StdpParams)

    def __post_init__(self):
        if self.tau <= 0 or self.dt <= 0:
            raise ContractViolation("tau and dt must be positive")
        if self.dt >= self.tau:
            raise ContractViolation(f"dt ({self.dt} ms) must be much smaller than tau ({self.tau} ms)")
        if self.tau_theta <= 0:
            raise ContractViolation("tau_theta must be positive")
        if not self.v_floor <= self.v_rest < self.v_thresh_base:
            raise ContractViolation("expected v_floor <= v_rest < v_thresh_base")
        if self.v_reset >= self.v_thresh_base:
            raise ContractViolation("v_reset must lie below the threshold")
        if self.w_inh >= 0:
            raise ContractViolation("w_inh must be negative")

    @property
    def decay(self) -> float:
        """Per-step membrane decay factor exp(-dt/tau)."""
        return math.exp(-self.dt / self.tau)

    @property
    def theta_decay(self) -> float:
        return math.exp(-self.dt / self.tau_theta)

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__ if k != "stdp"}
        out.update({f"stdp_{k}": getattr(self.stdp, k) for k in self.stdp.__dataclass_fields__})
        return out

    @classmethod
    def from_dict(cls, values: dict) -> "ModelParams":
        stdp = StdpParams(**{k[5:]: v for k, v in values.items() if k.startswith("stdp_")})
        return cls(**{k: v for k, v in values.items() if not k.startswith("stdp_")}, stdp=stdp)


@dataclass(frozen=True)
class RefNeuron:
    """One neuron's state; pre-synaptic traces live on the layer, shared by all neurons."""
    v: float
    theta: float = 0.0
    post_trace: float = 0.0
    fired: bool = False

    @classmethod
    def at_rest(cls, params: ModelParams, theta: float = 0.0) -> "RefNeuron":
        return cls(v=params.v_rest, theta=theta)


def ref_step(
    neuron: RefNeuron,
    input_current_events: Iterable[float],
    params: ModelParams,
    adapt: bool = False,
) -> RefNeuron:
    """
    Advance one neuron by one dt.

    `input_current_events` are the weights (mV) of the synapses that spiked
    this step, inhibitory ones included. With `adapt`, theta decays with
    tau_theta and grows by theta_plus when the neuron fires.
    """
    p = params
    v = p.v_rest + (neuron.v - p.v_rest) * p.decay + math.fsum(input_current_events)
    v = max(v, p.v_floor)
    theta = neuron.theta * p.theta_decay if adapt else neuron.theta
    post_trace = neuron.post_trace * math.exp(-p.dt / p.stdp.tau_post)
    fired = v > p.v_thresh_base + theta
    if fired:
        v = p.v_reset
        post_trace = 1.0
        if adapt:
            theta += p.theta_plus
    return RefNeuron(v=v, theta=theta, post_trace=post_trace, fired=fired)


@dataclass(eq=False)
class RefNetwork:
    """
    One fully connected layer with lateral inhibition, in full precision.

    `weights` is (n_neurons, n_inputs), excitatory, in mV per input spike;
    `theta` holds the per-neuron adaptive threshold offsets.

    Usage:
        net = RefNetwork.initial(784, 400, params, seed=1)
        counts = net.run(train)
    """
    weights: np.ndarray
    theta: np.ndarray
    params: ModelParams = field(default_factory=ModelParams)

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        self.theta = np.asarray(self.theta, dtype=np.float64).reshape(-1).copy()
        if self.weights.ndim != 2 or self.theta.shape[0] != self.weights.shape[0]:
            raise ContractViolation("weights must be (n_neurons, n_inputs) with one theta per neuron")

    @classmethod
    def initial(
        cls,
        n_inputs: int,
        n_neurons: int,
        params: ModelParams = ModelParams(),
        w_init_max: float = 0.3,
        seed: int = 1,
    ) -> "RefNetwork":
        """Uniform weights in [0, w_init_max], thresholds at their base."""
        rng = np.random.default_rng(seed)
        weights = rng.uniform(0.0, w_init_max, size=(n_neurons, n_inputs))
        return cls(weights, np.zeros(n_neurons), params)

    @property
    def n_neurons(self) -> int:
        return int(self.weights.shape[0])

    @property
    def n_inputs(self) -> int:
        return int(self.weights.shape[1])

    def copy(self) -> "RefNetwork":
        return RefNetwork(self.weights.copy(), self.theta.copy(), self.params)

    def with_params(self, **changes) -> "RefNetwork":
        return RefNetwork(self.weights, self.theta, replace(self.params, **changes))

    def run(self, train: SpikeTrain, rule: Optional["StdpRule"] = None) -> np.ndarray:
        """
        Present one spike train from rest and return per-neuron spike counts.

        With a rule, the run also learns: traces are kept, weights change via
        the rule, and thresholds adapt. Without one, weights and thresholds
        are left untouched.
        """
        if train.n_sources != self.n_inputs:
            raise ContractViolation(f"spike train has {train.n_sources} sources, layer has {self.n_inputs} inputs")
        p = self.params
        learn = rule is not None
        bits = train.bits
        n_steps = len(train)
        input_steps = np.flatnonzero(bits.any(axis=1))

        weights = self.weights
        theta = self.theta
        v = np.full(self.n_neurons, p.v_rest)
        counts = np.zeros(self.n_neurons, dtype=np.int64)
        x_pre = np.zeros(self.n_inputs)
        x_post = np.zeros(self.n_neurons)
        prev_fired = np.zeros(self.n_neurons, dtype=bool)
        n_prev = 0

        decay = p.decay
        pre_decay = math.exp(-p.dt / p.stdp.tau_pre)
        post_decay = math.exp(-p.dt / p.stdp.tau_post)
        theta_decay = p.theta_decay

        last = -1
        step = 0
        while step < n_steps:
            if n_prev == 0:
                pos = np.searchsorted(input_steps, step)
                if pos == input_steps.size:
                    break
                step = int(input_steps[pos])
            gap = step - last
            v = p.v_rest + (v - p.v_rest) * decay ** gap
            if learn:
                x_pre *= pre_decay ** gap
                x_post *= post_decay ** gap
                theta *= theta_decay ** gap

            spiking = np.flatnonzero(bits[step])
            if spiking.size:
                v += weights[:, spiking].sum(axis=1)
                if learn:
                    x_pre[spiking] = 1.0
                    rule.on_pre(weights, x_post, spiking)
            if n_prev:
                v += p.w_inh * (n_prev - prev_fired)
            np.maximum(v, p.v_floor, out=v)

            fired = v > p.v_thresh_base + theta
            n_prev = int(np.count_nonzero(fired))
            if n_prev:
                v[fired] = p.v_reset
                counts += fired
                if learn:
                    theta[fired] += p.theta_plus
                    x_post[fired] = 1.0
                    rule.on_post(weights, x_pre, np.flatnonzero(fired))
            prev_fired = fired
            last = step
            step += 1

        if learn and n_steps - 1 > last:
            theta *= theta_decay ** (n_steps - 1 - last)
        return counts
