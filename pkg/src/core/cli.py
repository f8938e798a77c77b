"""
snnsim CLI - train, quantize, run and analyse the accelerator model.

Results go to stdout as plain tables; logs and timing lines go to stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

import pandas as pd

from .config import RunConfig, default_config_text, load_run_config
from .engine import Engine
from ..analysis.activity import activity_stats
from ..analysis.cost import (
    CostModel,
    classification_time,
    cost_summary,
    cycle_count,
    memory_requirements,
    packing_table,
)
from ..analysis.evaluation import accuracy_ladder, engine_eval, reference_responses
from ..analysis.sweeps import overflow_sweep, quant_sweep
from ..data.export import export_table
from ..data.idx import N_CLASSES, load_mnist
from ..data.model_file import ModelArchive, load_model, save_model
from ..data.network_file import load_network, save_network
from ..reference.labels import assign_labels
from ..reference.quantize import quantize_network
from ..reference.stdp import train_network
from ..utils.env import load_project_env, parse_bool_env, parse_int_env
from ..utils.errors import ConfigurationError, exit_status_for, handle_errors
from ..utils.logging_helpers import setup_logging, timed_step

COMMANDS = (
    "train", "assign-labels", "quantize", "infer", "batch-eval",
    "stats", "sweep-parallelism", "sweep-quant", "cycles",
)

DEFAULT_MODEL = "model.npz"
DEFAULT_NET = "network.snnw"


def _print_table(df: pd.DataFrame, title: Optional[str] = None) -> None:
    if title:
        print(f"# {title}")
    print(df.to_string(index=False, float_format=lambda x: f"{x:.6g}"))


def _export(df: pd.DataFrame, path: Optional[str]) -> None:
    if path:
        written = export_table(df, path)
        print(f"✅ Exported {len(df):,} rows to {written}")


def _config(args: argparse.Namespace) -> RunConfig:
    workers = args.workers if args.workers is not None else (parse_int_env("SNNSIM_WORKERS") or None)
    overrides = {"seed": args.seed, "n_steps": args.steps, "workers": workers}
    if args.full:
        overrides["n_images"] = 0
    elif args.images is not None:
        overrides["n_images"] = args.images
    return load_run_config(Path(args.config) if args.config else None, **overrides)


def _test_set(args: argparse.Namespace, cfg: RunConfig, split: str = "test"):
    data_dir = Path(args.data_dir) if args.data_dir else None
    return load_mnist(split, data_dir, limit=cfg.n_images)


def _require(value: Optional[str], flag: str, command: str) -> str:
    if not value:
        raise ConfigurationError(f"{command} needs {flag}")
    return value


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

@handle_errors(default_return=exit_status_for)
def cmd_train(args: argparse.Namespace) -> int:
    cfg = _config(args)
    data_dir = Path(args.data_dir) if args.data_dir else None
    dataset = load_mnist("train", data_dir, limit=cfg.train_images)
    with timed_step("train"):
        result = train_network(
            dataset,
            cfg.model_params(),
            epochs=args.epochs if args.epochs is not None else cfg.epochs,
            encoder_cfg=cfg.encoder_config(training=True),
            n_neurons=cfg.n_neurons,
            seed=cfg.seed,
            w_init_max=cfg.w_init_max,
            weight_norm_sum=cfg.weight_norm_sum,
            n_steps=cfg.n_steps,
        )
    path = save_model(ModelArchive(result.network), args.model)
    _print_table(result.log, "training log")
    _export(result.log, args.out)
    print(f"✅ Saved model to {path}")
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_assign_labels(args: argparse.Namespace) -> int:
    cfg = _config(args)
    archive = load_model(args.model)
    dataset = _test_set(args, cfg, split=args.split)
    with timed_step("assign-labels"):
        responses = reference_responses(
            archive.network, dataset, cfg.encoder_config(training=True), cfg.n_steps, cfg.workers,
        )
    label_map = assign_labels(responses, dataset.labels, N_CLASSES)
    archive.labels = label_map.labels
    archive.mean_responses = label_map.mean_responses
    path = save_model(archive, args.model)
    if args.net:
        net_path = save_network(load_network(args.net).with_labels(label_map.labels), args.net)
        print(f"✅ Updated labels in {net_path}")
    sizes = label_map.class_sizes().reset_index()
    _print_table(sizes, "neurons per label")
    print(f"flagged {label_map.n_flagged} of {len(label_map.labels)} neurons (tied responses)")
    _export(sizes, args.out)
    print(f"✅ Saved labels to {path}")
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_quantize(args: argparse.Namespace) -> int:
    cfg = _config(args)
    archive = load_model(args.model)
    net = quantize_network(
        archive.network.weights, archive.network.theta, archive.params,
        cfg.weight_format, cfg.membrane_format,
        labels=archive.labels, decay_shift=cfg.resolved_decay_shift,
    )
    path = save_network(net, args.net or DEFAULT_NET)
    memory = memory_requirements(net.dims, net.weight_format, net.membrane_format, cfg.memory_word_bits)
    _print_table(memory.to_frame(), "memory requirements")
    _export(memory.to_frame(), args.out)
    if net.labels is None:
        print("note: model has no labels yet; run assign-labels before infer")
    print(f"✅ Saved network to {path}")
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_infer(args: argparse.Namespace) -> int:
    cfg = _config(args)
    net = load_network(_require(args.net, "--net", "infer"))
    data_dir = Path(args.data_dir) if args.data_dir else None
    dataset = load_mnist(args.split, data_dir)
    if not 0 <= args.index < len(dataset):
        raise ConfigurationError(f"image index {args.index} outside 0..{len(dataset) - 1}")
    engine = Engine.from_network_file(net, cfg.engine_config())
    result = engine.infer(dataset.images[args.index], cfg.encoder_config())
    stats = result.stats
    flag = " (zero confidence)" if result.zero_confidence else ""
    print(f"label {result.label} true {int(dataset.labels[args.index])}{flag}")
    table = pd.DataFrame([{
        "active_steps": stats.active_steps,
        "inactive_steps": stats.inactive_steps,
        "clock_cycles": stats.clock_cycles,
        "time_us": stats.classification_time(cfg.f_clk) * 1e6,
        "output_spikes": int(stats.spikes_out.sum()),
        "overflow_events": result.overflow.count,
        "saturations": result.overflow.saturations,
    }])
    _print_table(table)
    _export(table, args.out)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_batch_eval(args: argparse.Namespace) -> int:
    cfg = _config(args)
    dataset = _test_set(args, cfg)
    with timed_step("batch-eval"):
        if args.model:
            archive = load_model(args.model)
            table, results = accuracy_ladder(
                archive, dataset, cfg.encoder_config(), cfg.engine_config(),
                cfg.weight_format, cfg.membrane_format, cfg.workers,
            )
            engine_result = results["engine_quantized"]
        else:
            net = load_network(_require(args.net, "--net or --model", "batch-eval"))
            engine_result = engine_eval(net, dataset, cfg.engine_config(), cfg.encoder_config(), cfg.workers)
            table = pd.DataFrame([{
                "rung": "engine", "images": engine_result.n_images,
                "accuracy": 100.0 * engine_result.accuracy, "drop": 0.0,
                "zero_confidence": int(engine_result.zero_confidence.sum()),
            }])
    _print_table(table, "accuracy (%)")
    mean_cycles = float(engine_result.clock_cycles.mean())
    print(f"engine: mean {engine_result.mean_active_steps:.2f} active steps, "
          f"{mean_cycles:.1f} cycles, {classification_time(mean_cycles, cfg.f_clk) * 1e6:.2f} us per image")
    confusion = engine_result.confusion()
    _print_table(confusion.reset_index(), "engine confusion (rows: label)")
    _export(table, args.out)
    if args.confusion:
        _export(confusion.reset_index(), args.confusion)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_stats(args: argparse.Namespace) -> int:
    cfg = _config(args)
    dataset = _test_set(args, cfg)
    net = load_network(args.net) if args.net else None
    with timed_step("stats"):
        report = activity_stats(dataset, cfg.encoder_config(), net, cfg.engine_config(), cfg.workers)
    _print_table(report.summary(), "activity")
    n_exc = dataset.flat().shape[1]
    n_inh = net.layers[0].n_neurons if net is not None else cfg.n_neurons
    model = CostModel(report.mean_active_steps, n_exc, n_inh, cfg.n_steps, cfg.f_clk)
    _print_table(cost_summary(model, cfg.software_time), "cost at the measured activity")
    spikes = report.simultaneous_spike_histogram()
    _print_table(spikes, "simultaneous spikes per active step")
    _export(report.active_steps_histogram(), args.out)
    if args.spikes_out:
        _export(spikes, args.spikes_out)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_sweep_parallelism(args: argparse.Namespace) -> int:
    cfg = _config(args)
    net = load_network(_require(args.net, "--net", "sweep-parallelism"))
    dataset = _test_set(args, cfg)
    low = args.min_bits if args.min_bits is not None else cfg.sweep_min_bits
    high = args.max_bits if args.max_bits is not None else cfg.sweep_max_bits
    with timed_step("sweep-parallelism"):
        result = overflow_sweep(
            dataset, net, range(low, high + 1), cfg.engine_config(), cfg.encoder_config(), cfg.workers,
        )
    _print_table(result.to_frame(), "overflow events per membrane width")
    print(f"minimal zero-overflow width: {result.threshold if result.threshold is not None else 'not reached'}")
    _export(result.to_frame(), args.out)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_sweep_quant(args: argparse.Namespace) -> int:
    cfg = _config(args)
    archive = load_model(_require(args.model, "--model", "sweep-quant"))
    dataset = _test_set(args, cfg)
    if args.frac_bits:
        try:
            frac_bits = [int(part) for part in args.frac_bits.split(",") if part.strip()]
        except ValueError:
            raise ConfigurationError(f"--frac-bits expects comma-separated integers, got {args.frac_bits!r}") from None
    else:
        frac_bits = cfg.quant_frac_bits
    with timed_step("sweep-quant"):
        result = quant_sweep(
            dataset, archive, frac_bits, cfg.membrane_format,
            cfg.engine_config(), cfg.encoder_config(), cfg.workers,
        )
    _print_table(result.to_frame(), "engine accuracy (%) per fractional weight width")
    print(f"plateau from: {result.threshold if result.threshold is not None else 'not reached'} fractional bits")
    _export(result.to_frame(), args.out)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_cycles(args: argparse.Namespace) -> int:
    cfg = _config(args)
    f_clk = args.fclk if args.fclk is not None else cfg.f_clk
    software_time = args.software_time if args.software_time is not None else cfg.software_time
    model = CostModel(args.active, args.exc, args.inh, cfg.n_steps, f_clk)
    cycles = cycle_count(model)
    summary = cost_summary(model, software_time)
    print(f"{cycles} cycles")
    print(f"{classification_time(cycles, f_clk) * 1e6:.2f} us per classification")
    _print_table(summary)
    memory = memory_requirements([(args.exc, args.inh)], cfg.weight_format, cfg.membrane_format, cfg.memory_word_bits)
    _print_table(memory.to_frame(), "memory requirements")
    _print_table(packing_table(args.exc * args.inh, cfg.memory_word_bits), "weight packing")
    _export(summary, args.out)
    return 0


@handle_errors(default_return=exit_status_for)
def cmd_config(args: argparse.Namespace) -> int:
    if args.config:
        _config(args)
        print(f"✅ {args.config} is valid")
    else:
        sys.stdout.write(default_config_text())
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Run configuration file (key = value).")
    common.add_argument("--net", help="Quantized network file (.snnw).")
    common.add_argument("--seed", type=int, help="Override the configured seed.")
    common.add_argument("--steps", type=int, help="Override the configured steps per image.")
    common.add_argument("--workers", type=int, help="Worker processes.")
    common.add_argument("--images", type=int, help="Images to use (0 = whole set).")
    common.add_argument("--full", action="store_true", help="Use the whole dataset.")
    common.add_argument("--data-dir", help="MNIST directory (default: SNNSIM_DATA_DIR or ./data).")
    common.add_argument("--out", help="Write the result table to this path (.tsv or .csv).")
    common.add_argument("--verbose", "-v", action="store_true", help="Debug logging and progress bars.")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    ap = argparse.ArgumentParser(
        prog="snnsim",
        description="Bit-accurate simulator of a spiking neural network accelerator.",
    )
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("train", parents=[common], help="Train the full-precision layer with STDP.")
    p.add_argument("--model", default=DEFAULT_MODEL, help=f"Model archive to write (default: {DEFAULT_MODEL}).")
    p.add_argument("--epochs", type=int, help="Override the configured epochs.")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("assign-labels", parents=[common], help="Label neurons from calibration responses.")
    p.add_argument("--model", default=DEFAULT_MODEL, help="Model archive to update.")
    p.add_argument("--split", default="train", choices=["train", "test"], help="Calibration split.")
    p.set_defaults(func=cmd_assign_labels)

    p = sub.add_parser("quantize", parents=[common], help="Quantize a model into a network file.")
    p.add_argument("--model", default=DEFAULT_MODEL, help="Model archive to read.")
    p.set_defaults(func=cmd_quantize)

    p = sub.add_parser("infer", parents=[common], help="Classify one image on the engine.")
    p.add_argument("--index", type=int, default=0, help="Image index (default: 0).")
    p.add_argument("--split", default="test", choices=["train", "test"])
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("batch-eval", parents=[common], help="Accuracy on many images.")
    p.add_argument("--model", help="Model archive: evaluate the full accuracy ladder.")
    p.add_argument("--confusion", help="Write the engine confusion matrix to this path.")
    p.set_defaults(func=cmd_batch_eval)

    p = sub.add_parser("stats", parents=[common], help="Spike activity statistics.")
    p.add_argument("--spikes-out", help="Write the simultaneous-spike histogram to this path.")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sweep-parallelism", parents=[common], help="Overflow events vs membrane width.")
    p.add_argument("--min-bits", type=int, help="Narrowest width.")
    p.add_argument("--max-bits", type=int, help="Widest width.")
    p.set_defaults(func=cmd_sweep_parallelism)

    p = sub.add_parser("sweep-quant", parents=[common], help="Accuracy vs fractional weight bits.")
    p.add_argument("--model", default=DEFAULT_MODEL, help="Model archive with labels.")
    p.add_argument("--frac-bits", help="Comma-separated fractional widths.")
    p.set_defaults(func=cmd_sweep_quant)

    p = sub.add_parser("cycles", parents=[common], help="Cycle count and classification time.")
    p.add_argument("--active", type=float, required=True, help="Active steps per image.")
    p.add_argument("--exc", type=int, default=784, help="Excitatory inputs (default: 784).")
    p.add_argument("--inh", type=int, default=400, help="Inhibitory inputs, i.e. neurons (default: 400).")
    p.add_argument("--fclk", type=float, help="Clock frequency in Hz.")
    p.add_argument("--software-time", type=float, help="Software seconds per image for the speedup.")
    p.set_defaults(func=cmd_cycles)

    p = sub.add_parser("config", parents=[common], help="Print the default configuration or check --config.")
    p.set_defaults(func=cmd_config)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    load_project_env()
    setup_logging(verbose=args.verbose or parse_bool_env("SNNSIM_VERBOSE"))
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
