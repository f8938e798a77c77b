"""Test that all public exports are importable."""

import pytest


def test_import_main():
    """Test importing main module."""
    import src
    assert hasattr(src, 'Engine')
    assert hasattr(src, '__version__')


def test_import_fixed_point():
    from src import FixedFormat, FixedPoint, ArithmeticMode, OverflowLog, quantize, dequantize
    assert quantize(1.0, FixedFormat(5, 3)).raw == 8
    assert dequantize(quantize(1.0, FixedFormat(5, 3))) == 1.0
    assert all([FixedPoint, ArithmeticMode, OverflowLog])


def test_import_encoding_and_engine():
    from src import (
        EncoderConfig,
        EncoderMode,
        SpikeEncoder,
        SpikeTrain,
        Lfsr,
        encode_image,
        Engine,
        EngineConfig,
        InferenceResult,
        CycleStats,
        infer,
    )
    assert all([EncoderConfig, EncoderMode, SpikeEncoder, SpikeTrain, Lfsr, encode_image])
    assert all([Engine, EngineConfig, InferenceResult, CycleStats, infer])


def test_import_reference_and_data():
    from src import (
        ModelParams,
        RefNetwork,
        train_network,
        assign_labels,
        quantize_network,
        load_mnist,
        load_network,
        save_network,
        load_model,
        save_model,
        export_table,
        RunConfig,
        load_run_config,
    )
    assert all([ModelParams, RefNetwork, train_network, assign_labels, quantize_network])
    assert all([load_mnist, load_network, save_network, load_model, save_model, export_table])
    assert RunConfig().n_steps == 3500
    assert load_run_config is not None


def test_import_analysis():
    from src import (
        CostModel,
        cycle_count,
        classification_time,
        engine_eval,
        accuracy_ladder,
        activity_stats,
        overflow_sweep,
        quant_sweep,
    )
    assert cycle_count(CostModel(23, 784, 400, 3500)) == 30709
    assert all([classification_time, engine_eval, accuracy_ladder, activity_stats, overflow_sweep, quant_sweep])


def test_unknown_attribute():
    import src
    with pytest.raises(AttributeError):
        src.no_such_export


def test_version_format():
    """Test version string format."""
    from src import __version__
    parts = __version__.split('.')
    assert len(parts) >= 2
    assert all(p.isdigit() for p in parts[:2])
