"""Tests for the cost model, memory report, activity statistics and batch evaluation."""

import numpy as np
import pytest

from src.analysis.activity import activity_stats
from src.analysis.cost import (
    CostModel,
    classification_time,
    cost_summary,
    cycle_count,
    memory_requirements,
    packing_table,
    speedup,
    weights_per_word,
)
from src.analysis.evaluation import EvalResult, accuracy_ladder, engine_eval, reference_eval
from src.core.encoding import EncoderConfig
from src.core.engine import CycleStats, Engine, EngineConfig
from src.core.fixedpoint import FixedFormat
from src.data.idx import IdxDataset
from src.data.model_file import ModelArchive
from src.data.network_file import LayerParams, NetworkFile
from src.reference.lif import ModelParams, RefNetwork
from src.utils.errors import ContractViolation

ENCODER = EncoderConfig(rate_scale=0.3 / 255, lfsr_width=16)


def tiny_dataset(n=6, side=3, seed=0):
    rng = np.random.default_rng(seed)
    images = rng.integers(0, 256, size=(n, side, side), dtype=np.uint8)
    return IdxDataset(images, (np.arange(n) % 10).astype(np.uint8))


def tiny_net(n_inputs=9, n_neurons=4, seed=0):
    rng = np.random.default_rng(seed)
    return NetworkFile(
        FixedFormat(5, 3), FixedFormat(16, 3), 10, -120, 40,
        [LayerParams(rng.integers(0, 16, size=(n_neurons, n_inputs)), rng.integers(20, 200, size=n_neurons))],
        labels=np.arange(n_neurons),
    )


# ----- cost model -----

def test_cycle_count_reported_case():
    assert cycle_count(CostModel(23, 784, 400, 3500)) == 30709


def test_cycle_count_extremes():
    assert cycle_count(CostModel(0, 784, 400, 3500)) == 3500
    assert cycle_count(CostModel(3500, 784, 400, 3500)) == 4_144_000


def test_fractional_average_is_kept():
    assert cycle_count(CostModel(22.5, 784, 400, 3500)) == pytest.approx(22.5 * 1184 + 3477.5)


def test_classification_time():
    assert classification_time(30709, 886e6) * 1e6 == pytest.approx(34.66, abs=0.005)
    assert classification_time(0, 886e6) == 0.0
    assert classification_time(8.86e8, 886e6) == pytest.approx(1.0)


def test_classification_time_needs_a_clock():
    with pytest.raises(ContractViolation):
        classification_time(10, 0)


def test_active_steps_cannot_exceed_total():
    with pytest.raises(ContractViolation):
        CostModel(3501, 784, 400, 3500)


def test_cost_model_from_engine_stats():
    stats = CycleStats(active_steps=23, inactive_steps=3477, clock_cycles=30709)
    model = CostModel.from_stats(stats, 784, 400)
    assert cycle_count(model) == stats.clock_cycles
    assert model.active_fraction == pytest.approx(23 / 3500)


def test_engine_cycles_match_cost_rule_per_image():
    net = tiny_net()
    engine = Engine.from_network_file(net, EngineConfig(n_steps=300))
    images = np.random.default_rng(8).integers(0, 256, size=(100, 9), dtype=np.uint8)
    active = []
    for image in images:
        stats = engine.infer(image, ENCODER).stats
        assert stats.total_steps == 300
        assert cycle_count(CostModel.from_stats(stats, 9, 4)) == stats.clock_cycles
        active.append(stats.active_steps)
    assert len(set(active)) > 1


def test_cost_summary_row():
    row = cost_summary(CostModel(23, 784, 400, 3500), software_time=0.2).iloc[0]
    assert row["cycles"] == 30709
    assert row["time_us"] == pytest.approx(34.66, abs=0.005)
    assert row["speedup"] == pytest.approx(0.2 / (30709 / 886e6))
    assert speedup(0.001, 0.2) == pytest.approx(200.0)


def test_memory_of_reported_layer():
    report = memory_requirements([(784, 400)], FixedFormat(5, 3), FixedFormat(16, 3), 32)
    assert report.weights_per_word == 6
    assert report.weight_bits == 313_600 * 5
    assert report.weight_words == 52_267
    assert report.register_bits == 2 * 400 * 16
    assert report.to_frame().iloc[0]["total_bits"] == report.total_bits


def test_weight_packing():
    assert weights_per_word(5) == 6
    assert weights_per_word(8) == 4
    with pytest.raises(ContractViolation):
        weights_per_word(33)
    table = packing_table(100, 32, range(4, 9))
    assert table["words"].tolist() == [13, 17, 20, 25, 25]
    assert packing_table(100, 8)["weight_bits"].tolist() == list(range(2, 9))


# ----- activity -----

def test_all_zero_dataset_is_inactive():
    dataset = IdxDataset(np.zeros((3, 3, 3), dtype=np.uint8), np.zeros(3, dtype=np.uint8))
    report = activity_stats(dataset, ENCODER, engine_cfg=EngineConfig(n_steps=200), show_progress=False)
    assert report.active_step_fraction == 0.0
    assert report.active_steps.tolist() == [0, 0, 0]
    assert report.simultaneous_spike_histogram().empty


def test_activity_without_network_counts_input_steps():
    dataset = tiny_dataset()
    report = activity_stats(dataset, ENCODER, engine_cfg=EngineConfig(n_steps=300), show_progress=False)
    assert report.n_images == len(dataset)
    assert report.exc_histogram.sum() == report.active_steps.sum()
    assert report.exc_histogram[0] == 0
    assert 0 < report.active_step_fraction < 1
    hist = report.active_steps_histogram()
    assert hist["images"].sum() == len(dataset)


def test_activity_with_network_includes_inhibition():
    dataset = tiny_dataset()
    net = tiny_net()
    cfg = EngineConfig(n_steps=300)
    with_net = activity_stats(dataset, ENCODER, net, cfg, show_progress=False)
    without = activity_stats(dataset, ENCODER, None, cfg, show_progress=False)
    assert np.all(with_net.active_steps >= without.active_steps)
    assert with_net.inh_histogram.shape[0] == 5
    assert with_net.summary().iloc[0]["images"] == len(dataset)


# ----- evaluation -----

def test_engine_eval_matches_single_inference():
    dataset = tiny_dataset()
    net = tiny_net()
    cfg = EngineConfig(n_steps=300)
    result = engine_eval(net, dataset, cfg, ENCODER, show_progress=False)
    engine = Engine.from_network_file(net, cfg)
    for i, image in enumerate(dataset.flat()):
        single = engine.infer(image, ENCODER)
        assert result.predictions[i] == single.label
        assert result.clock_cycles[i] == single.stats.clock_cycles
    assert result.n_images == len(dataset)


def test_eval_result_accuracy_and_confusion():
    result = EvalResult(
        predictions=np.array([1, 2, 2, 0]),
        labels=np.array([1, 2, 0, 0]),
        zero_confidence=np.zeros(4, dtype=bool),
        active_steps=np.array([1, 2, 3, 4]),
        clock_cycles=np.zeros(4, dtype=np.int64),
        overflow_events=np.array([0, 3, 0, 1]),
        saturations=np.zeros(4, dtype=np.int64),
    )
    assert result.accuracy == 0.75
    assert result.images_with_overflow == 2
    assert result.total_overflow == 4
    assert result.mean_active_steps == 2.5
    confusion = result.confusion()
    assert confusion.shape == (10, 10)
    assert confusion.loc[0, 2] == 1
    assert confusion.values.sum() == 4
    assert list(result.to_frame().columns[:3]) == ["image", "label", "prediction"]


def test_ladder_reports_three_rungs():
    rng = np.random.default_rng(1)
    network = RefNetwork(rng.uniform(0, 1.5, size=(4, 9)), np.zeros(4), ModelParams())
    archive = ModelArchive(network, labels=np.arange(4))
    dataset = tiny_dataset()
    table, results = accuracy_ladder(archive, dataset, ENCODER, EngineConfig(n_steps=300))
    assert table["rung"].tolist() == ["reference_per_input", "reference_single_lfsr", "engine_quantized"]
    assert table["images"].tolist() == [len(dataset)] * 3
    assert table.loc[0, "drop"] == 0.0
    assert set(results) == set(table["rung"])
    assert results["engine_quantized"].clock_cycles.min() >= 300


def test_reference_eval_leaves_cycle_columns_empty():
    rng = np.random.default_rng(2)
    network = RefNetwork(rng.uniform(0, 1.5, size=(4, 9)), np.zeros(4), ModelParams())
    result = reference_eval(network, np.arange(4), tiny_dataset(), ENCODER, 200, show_progress=False)
    assert not result.clock_cycles.any()
    assert result.predictions.shape == (6,)
