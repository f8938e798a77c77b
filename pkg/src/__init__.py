"""
snnsim - bit-accurate simulator of a spiking neural network accelerator.

Fixed-point LIF layer, LFSR spike encoding, cycle-level engine, and the
full-precision STDP reference model it is checked against.

Usage:
    from src import Engine, load_network, load_mnist, EncoderConfig

    net = load_network("network.snnw")
    engine = Engine.from_network_file(net)
    result = engine.infer(load_mnist("test").images[0], EncoderConfig())
    print(result.label, result.stats.clock_cycles)
"""

__version__ = "1.0.0"


def __getattr__(name):
    """Lazy imports: numpy/pandas modules are only loaded on first access."""
    # Fixed point
    _fixed_names = ("FixedFormat", "FixedPoint", "ArithmeticMode", "OverflowLog", "quantize", "dequantize")
    if name in _fixed_names:
        from .core.fixedpoint import FixedFormat, FixedPoint, ArithmeticMode, OverflowLog, quantize, dequantize
        _imports = locals()
        for _n in _fixed_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Encoding
    _encoding_names = ("EncoderConfig", "EncoderMode", "SpikeEncoder", "SpikeTrain", "Lfsr", "encode_image")
    if name in _encoding_names:
        from .core.encoding import EncoderConfig, EncoderMode, SpikeEncoder, SpikeTrain, Lfsr, encode_image
        _imports = locals()
        for _n in _encoding_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Engine
    _engine_names = ("Engine", "EngineConfig", "InferenceResult", "CycleStats", "infer")
    if name in _engine_names:
        from .core.engine import Engine, EngineConfig, InferenceResult, CycleStats, infer
        _imports = locals()
        for _n in _engine_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Configuration
    _config_names = ("RunConfig", "load_run_config")
    if name in _config_names:
        from .core.config import RunConfig, load_run_config
        _imports = locals()
        for _n in _config_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Reference model
    _reference_names = ("ModelParams", "RefNetwork", "train_network", "assign_labels", "quantize_network")
    if name in _reference_names:
        from .reference.lif import ModelParams, RefNetwork
        from .reference.stdp import train_network
        from .reference.labels import assign_labels
        from .reference.quantize import quantize_network
        _imports = locals()
        for _n in _reference_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Data files
    _data_names = (
        "load_mnist", "load_network", "save_network", "load_model", "save_model", "export_table",
    )
    if name in _data_names:
        from .data.idx import load_mnist
        from .data.network_file import load_network, save_network
        from .data.model_file import load_model, save_model
        from .data.export import export_table
        _imports = locals()
        for _n in _data_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    # Analysis
    _analysis_names = (
        "CostModel", "cycle_count", "classification_time", "engine_eval",
        "accuracy_ladder", "activity_stats", "overflow_sweep", "quant_sweep",
    )
    if name in _analysis_names:
        from .analysis.cost import CostModel, cycle_count, classification_time
        from .analysis.evaluation import engine_eval, accuracy_ladder
        from .analysis.activity import activity_stats
        from .analysis.sweeps import overflow_sweep, quant_sweep
        _imports = locals()
        for _n in _analysis_names:
            globals()[_n] = _imports[_n]
        return globals()[name]

    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


__all__ = [
    # Fixed point
    "FixedFormat",
    "FixedPoint",
    "ArithmeticMode",
    "OverflowLog",
    "quantize",
    "dequantize",
    # Encoding
    "EncoderConfig",
    "EncoderMode",
    "SpikeEncoder",
    "SpikeTrain",
    "Lfsr",
    "encode_image",
    # Engine
    "Engine",
    "EngineConfig",
    "InferenceResult",
    "CycleStats",
    "infer",
    # Configuration
    "RunConfig",
    "load_run_config",
    # Reference model
    "ModelParams",
    "RefNetwork",
    "train_network",
    "assign_labels",
    "quantize_network",
    # Data files
    "load_mnist",
    "load_network",
    "save_network",
    "load_model",
    "save_model",
    "export_table",
    # Analysis
    "CostModel",
    "cycle_count",
    "classification_time",
    "engine_eval",
    "accuracy_ladder",
    "activity_stats",
    "overflow_sweep",
    "quant_sweep",
]
