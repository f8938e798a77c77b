"""Tests for the full-precision LIF model, STDP training and quantization."""

import math
import unittest

import numpy as np
import pytest

from src.core.encoding import EncoderConfig, EncoderMode, SpikeTrain
from src.core.fixedpoint import MEMBRANE_FORMAT, WEIGHT_FORMAT, FixedFormat, OverflowLog
from src.data.idx import IdxDataset
from src.reference.lif import ModelParams, RefNetwork, RefNeuron, StdpParams, ref_step
from src.reference.quantize import quantize_network, shifted_thresholds
from src.reference.stdp import (
    PairStdpRule,
    epoch_accuracy,
    image_encoder_config,
    normalize_weights,
    stdp_train,
    train_network,
)
from src.utils.errors import ConfigurationError, ContractViolation

PARAMS = ModelParams()


def bright_dataset(n_images=3, side=4):
    images = np.full((n_images, side, side), 255, dtype=np.uint8)
    return IdxDataset(images, np.zeros(n_images, dtype=np.uint8))


# ----- single neuron -----

def test_rest_is_a_fixed_point():
    n = RefNeuron.at_rest(PARAMS)
    for _ in range(500):
        n = ref_step(n, [], PARAMS)
    assert n.v == PARAMS.v_rest


def test_decay_follows_closed_form():
    n = RefNeuron(v=PARAMS.v_rest + 10.0)
    for _ in range(1000):  # 100 ms
        n = ref_step(n, [], PARAMS)
    assert n.v - PARAMS.v_rest == pytest.approx(10.0 * math.exp(-1.0), abs=1e-6)
    assert n.v - PARAMS.v_rest == pytest.approx(3.679, abs=1e-3)


def test_potential_is_clipped_at_floor():
    n = ref_step(RefNeuron.at_rest(PARAMS), [-500.0], PARAMS)
    assert n.v == PARAMS.v_floor


def test_firing_resets_and_adapts():
    n = ref_step(RefNeuron.at_rest(PARAMS), [20.0], PARAMS, adapt=True)
    assert n.fired
    assert n.v == PARAMS.v_reset
    assert n.theta == pytest.approx(PARAMS.theta_plus)
    assert n.post_trace == 1.0


def test_threshold_includes_theta():
    n = RefNeuron.at_rest(PARAMS, theta=5.0)
    assert not ref_step(n, [15.0], PARAMS).fired
    assert ref_step(n, [19.0], PARAMS).fired


class TestModelParams(unittest.TestCase):
    def test_dict_round_trip_keeps_stdp(self):
        params = ModelParams(w_inh=-9.0, stdp=StdpParams(eta_post=0.02))
        self.assertEqual(ModelParams.from_dict(params.as_dict()), params)

    def test_invalid_params_rejected(self):
        with self.assertRaises(ContractViolation):
            ModelParams(w_inh=1.0)
        with self.assertRaises(ContractViolation):
            ModelParams(dt=200.0)
        with self.assertRaises(ContractViolation):
            ModelParams(v_reset=-40.0)


# ----- layer -----

def test_network_matches_per_neuron_steps():
    """The event-driven layer agrees with ref_step applied neuron by neuron."""
    rng = np.random.default_rng(5)
    n_inputs, n_neurons, n_steps = 10, 5, 400
    weights = rng.uniform(0.0, 5.0, size=(n_neurons, n_inputs))
    bits = rng.random((n_steps, n_inputs)) < 0.03
    net = RefNetwork(weights, np.zeros(n_neurons), PARAMS)
    counts = net.run(SpikeTrain(bits))

    neurons = [RefNeuron.at_rest(PARAMS) for _ in range(n_neurons)]
    expected = np.zeros(n_neurons, dtype=np.int64)
    previous = [False] * n_neurons
    for row in bits:
        spiking = np.flatnonzero(row)
        stepped = []
        for i, n in enumerate(neurons):
            events = list(weights[i, spiking]) + [PARAMS.w_inh for k in range(n_neurons) if previous[k] and k != i]
            stepped.append(ref_step(n, events, PARAMS))
        neurons = stepped
        previous = [n.fired for n in neurons]
        expected += np.array(previous)
    assert counts.tolist() == expected.tolist()
    assert counts.sum() > 0


def test_inference_run_does_not_learn():
    net = RefNetwork.initial(16, 4, PARAMS, seed=2)
    before = net.weights.copy()
    net.run(SpikeTrain(np.ones((50, 16), dtype=bool)))
    assert np.array_equal(net.weights, before)
    assert not net.theta.any()


def test_higher_threshold_never_fires_more():
    bits = np.ones((200, 4), dtype=bool)
    counts = [
        int(RefNetwork(np.full((1, 4), 2.0), np.array([theta]), PARAMS).run(SpikeTrain(bits))[0])
        for theta in (0.0, 4.0, 8.0, 16.0, 32.0)
    ]
    assert counts[0] > 0
    assert all(a >= b for a, b in zip(counts, counts[1:]))
    assert counts[-1] < counts[0]


# ----- training -----

def test_zero_epochs_returns_initial_weights():
    dataset = bright_dataset()
    result = train_network(dataset, PARAMS, epochs=0, n_neurons=5, seed=3, show_progress=False)
    initial = RefNetwork.initial(16, 5, PARAMS, 0.3, 3)
    assert np.array_equal(result.weights, initial.weights)
    assert result.log.empty


def test_training_moves_weights_and_adapts_thresholds():
    result = train_network(
        bright_dataset(), PARAMS, epochs=1, n_neurons=3, seed=1, weight_norm_sum=8.0, show_progress=False,
    )
    assert len(result.log) == 1
    assert result.log.loc[0, "images"] == 3
    assert result.theta.mean() > 0
    assert result.weights.min() >= 0.0
    assert result.weights.max() <= PARAMS.stdp.w_max


def test_training_log_reports_accuracy():
    result = train_network(
        bright_dataset(), PARAMS, epochs=2, n_neurons=3, seed=1, n_steps=300, show_progress=False,
    )
    assert list(result.log.columns) == ["epoch", "images", "mean_spikes", "accuracy", "mean_theta", "mean_weight"]
    assert result.log["accuracy"].tolist() == [1.0, 1.0]


def test_epoch_accuracy_scores_own_label_assignment():
    responses = np.array([[5, 0], [0, 3], [1, 1]])
    assert epoch_accuracy(responses, np.array([0, 1, 1])) == pytest.approx(2 / 3)
    assert epoch_accuracy(np.zeros((2, 2)), np.array([0, 0])) == 1.0


def test_training_on_empty_dataset_is_rejected():
    empty = IdxDataset(np.zeros((0, 4, 4), dtype=np.uint8), np.zeros(0, dtype=np.uint8))
    with pytest.raises(ConfigurationError):
        train_network(empty, PARAMS)


def test_stdp_train_returns_weights_and_thresholds():
    weights, theta = stdp_train(bright_dataset(1), PARAMS, epochs=1, n_neurons=2, n_steps=200, show_progress=False)
    assert weights.shape == (2, 16)
    assert theta.shape == (2,)


def test_post_rule_potentiates_recent_inputs_and_clips():
    rule = PairStdpRule(StdpParams(eta_post=0.5, x_offset=0.4, w_max=1.0))
    weights = np.full((2, 3), 0.9)
    rule.on_post(weights, np.array([1.0, 0.0, 0.4]), np.array([1]))
    assert weights[0].tolist() == [0.9, 0.9, 0.9]
    assert weights[1] == pytest.approx([1.0, 0.7, 0.9])


def test_pre_rule_is_off_by_default():
    weights = np.full((2, 3), 0.5)
    PairStdpRule().on_pre(weights, np.ones(2), np.array([0, 2]))
    assert np.all(weights == 0.5)


def test_normalize_weights_sets_row_sums():
    weights = np.array([[1.0, 1.0, 2.0], [0.0, 0.0, 0.0]])
    normalize_weights(weights, 2.0, w_max=10.0)
    assert weights[0].sum() == pytest.approx(2.0)
    assert weights[1].tolist() == [0.0, 0.0, 0.0]


def test_encoder_seed_varies_per_image_except_shared_lfsr():
    per_input = EncoderConfig(mode=EncoderMode.PER_INPUT_LFSR, seed=4)
    assert image_encoder_config(per_input, 3).seed == 7
    single = EncoderConfig(mode=EncoderMode.SINGLE_LFSR, seed=4)
    assert image_encoder_config(single, 3) is single


# ----- quantization -----

def test_shifted_threshold_is_relative_to_rest():
    assert shifted_thresholds(np.zeros(1), PARAMS).tolist() == [13.0]


def test_quantize_network_codes():
    weights = np.array([[0.0, 1.0, 3.0], [0.125, 0.5, 1.875]])
    net = quantize_network(weights, np.array([0.0, 0.5]), PARAMS, labels=np.array([1, 2]))
    assert net.weight_format == WEIGHT_FORMAT
    assert net.membrane_format == MEMBRANE_FORMAT
    assert net.layers[0].weights.tolist() == [[0, 8, 15], [1, 4, 15]]
    assert net.layers[0].thresholds.tolist() == [104, 108]
    assert net.w_inh == -120
    assert net.v_reset == 40
    assert net.decay_shift == 10
    assert net.labels.tolist() == [1, 2]


def test_quantize_network_logs_saturation():
    log = OverflowLog()
    quantize_network(np.array([[3.0, 4.0]]), np.zeros(1), PARAMS, log=log)
    assert log.saturations == 2


def test_coarse_membrane_keeps_inhibition_negative():
    params = ModelParams(w_inh=-0.1)
    net = quantize_network(np.zeros((1, 2)), np.zeros(1), params, FixedFormat(3, 0), FixedFormat(16, 0))
    assert net.w_inh == -1
