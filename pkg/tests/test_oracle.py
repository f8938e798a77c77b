"""
The vectorized engine against a one-neuron-at-a-time integer model.

The model below walks every neuron through the scalar fixed-point
operations in datapath order; the engine must match it bit for bit on
spike counts, cycle totals and overflow logs.
"""

import numpy as np
import pytest

from src.core.encoding import SpikeTrain
from src.core.engine import Engine, EngineConfig
from src.core.fixedpoint import AddSubOp, ArithmeticMode, FixedFormat, FixedPoint, OverflowLog, add_sub, decay_step
from src.data.network_file import LayerParams, NetworkFile

WEIGHTS = FixedFormat(5, 3)
MEMBRANE = FixedFormat(8, 3)
SHIFT = 4
WIDE = FixedFormat(16, 3)
WIDE_SHIFT = 10


def scalar_run(
    weights, theta, w_inh, v_reset, bits, mode, membrane=MEMBRANE, shift=SHIFT, round_leak=False,
):
    n_neurons, n_inputs = weights.shape
    v = [0] * n_neurons
    previous = [False] * n_neurons
    counts = [0] * n_neurons
    cycles = 0
    log = OverflowLog()
    for row in bits:
        exc = [j for j in range(n_inputs) if row[j]]
        inh = [k for k in range(n_neurons) if previous[k]]
        active = bool(exc or inh)
        fired = []
        for i in range(n_neurons):
            x = FixedPoint(v[i], membrane)
            for j in exc:
                x = add_sub(x, FixedPoint(int(weights[i, j]), membrane), AddSubOp.ADD, mode, log)
            for k in inh:
                if k != i:
                    x = add_sub(x, FixedPoint(w_inh, membrane), AddSubOp.ADD, mode, log)
            x = decay_step(x, shift, round_leak=round_leak)
            if x.raw > theta[i]:
                v[i] = v_reset
                fired.append(True)
                counts[i] += 1
            else:
                v[i] = x.raw
                fired.append(False)
        previous = fired
        cycles += n_inputs + n_neurons if active else 1
    return counts, cycles, log


def random_case(seed, membrane=MEMBRANE, shift=SHIFT, n_steps=60, theta_max=None, max_inputs=8):
    rng = np.random.default_rng(seed)
    n_inputs = int(rng.integers(1, max_inputs + 1))
    n_neurons = int(rng.integers(1, 6))
    weights = rng.integers(0, 16, size=(n_neurons, n_inputs))
    theta = rng.integers(5, (theta_max or membrane.max_raw) + 1, size=n_neurons)
    w_inh = int(rng.integers(-40, 0))
    v_reset = int(rng.integers(-20, 30))
    bits = rng.random((n_steps, n_inputs)) < rng.uniform(0.05, 0.6)
    net = NetworkFile(WEIGHTS, membrane, shift, w_inh, v_reset, [LayerParams(weights, theta)])
    return net, SpikeTrain(bits)


@pytest.mark.parametrize("mode", list(ArithmeticMode))
@pytest.mark.parametrize("seed", range(50))
def test_engine_matches_scalar_model(seed, mode):
    net, train = random_case(seed)
    layer = net.layers[0]
    engine = Engine.from_network_file(net, EngineConfig(mode=mode, n_steps=len(train)))
    log = OverflowLog()
    stats, _ = engine.run(train, log)

    counts, cycles, expected_log = scalar_run(
        layer.weights, layer.thresholds, net.w_inh, net.v_reset, train.bits, mode,
    )
    assert stats.spikes_out.tolist() == counts
    assert stats.clock_cycles == cycles
    assert (log.count, log.saturations) == (expected_log.count, expected_log.saturations)


def test_narrow_membrane_overflows_in_both_modes():
    """The random cases above must actually reach the range limits."""
    events = {mode: 0 for mode in ArithmeticMode}
    for seed in range(50):
        net, train = random_case(seed)
        for mode in ArithmeticMode:
            log = OverflowLog()
            Engine.from_network_file(net, EngineConfig(mode=mode)).run(train, log)
            events[mode] += log.count
    assert all(count > 0 for count in events.values())


@pytest.mark.parametrize("round_leak", [False, True])
@pytest.mark.parametrize("mode", list(ArithmeticMode))
@pytest.mark.parametrize("seed", range(50))
def test_sixteen_bit_engine_matches_scalar_model(seed, mode, round_leak):
    net, train = random_case(seed, WIDE, WIDE_SHIFT, n_steps=100, theta_max=300, max_inputs=10)
    layer = net.layers[0]
    cfg = EngineConfig(mode=mode, round_leak=round_leak, n_steps=len(train))
    log = OverflowLog()
    stats, _ = Engine.from_network_file(net, cfg).run(train, log)

    counts, cycles, expected_log = scalar_run(
        layer.weights, layer.thresholds, net.w_inh, net.v_reset, train.bits, mode,
        WIDE, WIDE_SHIFT, round_leak,
    )
    assert stats.spikes_out.tolist() == counts
    assert stats.clock_cycles == cycles
    assert (log.count, log.saturations) == (expected_log.count, expected_log.saturations)


def test_sixteen_bit_cases_fire():
    total = 0
    for seed in range(50):
        net, train = random_case(seed, WIDE, WIDE_SHIFT, n_steps=100, theta_max=300, max_inputs=10)
        stats, _ = Engine.from_network_file(net, EngineConfig(n_steps=len(train))).run(train)
        total += int(stats.spikes_out.sum())
    assert total > 0
