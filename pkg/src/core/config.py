"""
Run configuration: single source of truth for every tunable.

A run configuration is a flat UTF-8 text document, one `key = value` per line,
`#` starting a comment. Every key is declared once in RUN_OPTIONS; the parser,
the rendered defaults document and the CLI overrides are all derived from it.
Keys left out of a document take the defaults below.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from .encoding import DEFAULT_N_STEPS, DEFAULT_RATE_SCALE, DEFAULT_SINGLE_WIDTH, EncoderConfig, EncoderMode
from .engine import EngineConfig
from .fixedpoint import ArithmeticMode, FixedFormat, decay_shift_for
from ..utils.errors import ConfigurationError, ContractViolation

# -----------------------------------------------------------------------------
# Option definition: (key, default, kind, help, choices, section)
# -----------------------------------------------------------------------------

KINDS = ("int", "float", "bool", "str", "choice", "int_list")

_TRUE = ("true", "1", "yes", "on")
_FALSE = ("false", "0", "no", "off")


@dataclass
class RunOption:
    """One configurable option."""
    key: str
    default: Any
    kind: str                         # one of KINDS
    help_text: str = ""
    choices: Optional[List[str]] = None
    section: str = "run"              # run | encoder | engine | model | stdp | analysis


def _opts() -> List[RunOption]:
    modes = [m.value for m in EncoderMode]
    return [
        # ----- Run -----
        RunOption("seed", 1, "int", "Seed for encoders and weight initialization.", section="run"),
        RunOption("n_steps", DEFAULT_N_STEPS, "int", "Elaboration steps per image.", section="run"),
        RunOption("n_images", 1000, "int", "Test images per evaluation or sweep (0 = whole set).", section="run"),
        RunOption("workers", 1, "int", "Worker processes for batch evaluation and sweeps.", section="run"),
        # ----- Encoder -----
        RunOption("encoder_mode", EncoderMode.SINGLE_LFSR.value, "choice",
                  "Inference encoder randomness.", modes, section="encoder"),
        RunOption("train_encoder_mode", EncoderMode.PER_INPUT_LFSR.value, "choice",
                  "Training encoder randomness.", modes, section="encoder"),
        RunOption("rate_scale", DEFAULT_RATE_SCALE, "float",
                  "Spike probability per step per pixel level.", section="encoder"),
        RunOption("lfsr_width", 0, "int", "LFSR width in bits (0 = mode default).", section="encoder"),
        RunOption("lfsr_taps", [], "int_list", "Feedback taps, comma separated (empty = built-in table).",
                  section="encoder"),
        RunOption("draw_shifts", 0, "int", "Register shifts between draws (0 = LFSR width).", section="encoder"),
        # ----- Engine -----
        RunOption("arithmetic_mode", ArithmeticMode.SATURATE.value, "choice",
                  "Out-of-range handling of the membrane adder.", [m.value for m in ArithmeticMode],
                  section="engine"),
        RunOption("weight_bits", 5, "int", "Stored weight width, sign included.", section="engine"),
        RunOption("weight_frac_bits", 3, "int", "Fractional bits of stored weights.", section="engine"),
        RunOption("membrane_bits", 16, "int", "Membrane register width, sign included.", section="engine"),
        RunOption("membrane_frac_bits", 3, "int", "Fractional bits of the membrane register.", section="engine"),
        RunOption("decay_shift", 0, "int", "Leak shift (0 = derived from dt and tau).", section="engine"),
        RunOption("strict_leak", False, "bool", "Small positive potentials still leak one unit.", section="engine"),
        RunOption("round_leak", False, "bool", "Round the leak term to nearest instead of truncating.", section="engine"),
        RunOption("decay_only_on_inactive", False, "bool", "Skip the leak on active steps.", section="engine"),
        RunOption("f_clk", 886e6, "float", "Accelerator clock frequency in Hz.", section="engine"),
        # ----- Model (mV, ms) -----
        RunOption("v_rest", -65.0, "float", "Rest potential (mV).", section="model"),
        RunOption("tau", 100.0, "float", "Membrane time constant (ms).", section="model"),
        RunOption("dt", 0.1, "float", "Elaboration step (ms).", section="model"),
        RunOption("v_thresh_base", -52.0, "float", "Threshold before adaptation (mV).", section="model"),
        RunOption("v_reset", -60.0, "float", "Potential after a spike (mV).", section="model"),
        RunOption("v_floor", -100.0, "float", "Lower clip of the potential (mV).", section="model"),
        RunOption("w_inh", -15.0, "float", "Lateral inhibitory weight (mV, negative).", section="model"),
        RunOption("theta_plus", 0.05, "float", "Threshold increment per spike (mV).", section="model"),
        RunOption("tau_theta", 1e7, "float", "Threshold adaptation time constant (ms).", section="model"),
        RunOption("n_neurons", 400, "int", "Excitatory neurons in the layer.", section="model"),
        # ----- STDP -----
        RunOption("epochs", 1, "int", "Passes over the training set.", section="stdp"),
        RunOption("train_images", 0, "int", "Training images per epoch (0 = whole set).", section="stdp"),
        RunOption("eta_post", 0.01, "float", "Learning rate on post-synaptic spikes.", section="stdp"),
        RunOption("eta_pre", 0.0, "float", "Depression rate on pre-synaptic spikes (0 = off).", section="stdp"),
        RunOption("tau_pre", 20.0, "float", "Pre-synaptic trace time constant (ms).", section="stdp"),
        RunOption("tau_post", 20.0, "float", "Post-synaptic trace time constant (ms).", section="stdp"),
        RunOption("x_offset", 0.4, "float", "Trace offset of the post-spike update.", section="stdp"),
        RunOption("w_max", 1.0, "float", "Upper weight clip.", section="stdp"),
        RunOption("w_init_max", 0.3, "float", "Initial weights are uniform in [0, w_init_max].", section="stdp"),
        RunOption("weight_norm_sum", 78.0, "float", "Per-neuron weight sum before each image (0 = off).",
                  section="stdp"),
        # ----- Analysis -----
        RunOption("software_time", 0.2, "float", "Software baseline seconds per image.", section="analysis"),
        RunOption("memory_word_bits", 32, "int", "Memory word width for weight packing.", section="analysis"),
        RunOption("sweep_min_bits", 5, "int", "Narrowest membrane width of the overflow sweep.", section="analysis"),
        RunOption("sweep_max_bits", 32, "int", "Widest membrane width of the overflow sweep.", section="analysis"),
        RunOption("quant_frac_bits", [0, 1, 2, 3, 4, 5, 6, 8, 12], "int_list",
                  "Fractional weight widths of the quantization sweep.", section="analysis"),
    ]


RUN_OPTIONS: List[RunOption] = _opts()
OPTIONS_BY_KEY: Dict[str, RunOption] = {o.key: o for o in RUN_OPTIONS}


def options_by_section() -> dict:
    """Group options by section, in declaration order."""
    out = {}
    for o in RUN_OPTIONS:
        out.setdefault(o.section, []).append(o)
    return out


def _render(value: Any, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int_list":
        return ", ".join(str(v) for v in value)
    return str(value)


def default_config_text() -> str:
    """The defaults as a run configuration document."""
    lines = ["# snnsim run configuration"]
    for section, options in options_by_section().items():
        lines += ["", f"# ----- {section} -----"]
        for o in options:
            lines.append(f"# {o.help_text}")
            lines.append(f"{o.key} = {_render(o.default, o.kind)}")
    return "\n".join(lines) + "\n"


def _convert(option: RunOption, text: str, line: Optional[int]) -> Any:
    kind = option.kind
    try:
        if kind == "int":
            return int(text, 0) if text.lower().startswith(("0x", "0b")) else int(text)
        if kind == "float":
            return float(text)
        if kind == "bool":
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(f"not a boolean: {text!r}")
        if kind == "int_list":
            return [int(part) for part in text.split(",") if part.strip()]
        if kind == "choice":
            if text not in option.choices:
                raise ValueError(f"must be one of {', '.join(option.choices)}")
            return text
        return text
    except ValueError as e:
        raise ConfigurationError(f"{option.key}: {e}", line) from None


@dataclass
class RunConfig:
    """
    Parsed run configuration.

    Usage:
        cfg = RunConfig.from_file(Path("run.cfg"))
        engine_cfg = cfg.engine_config()
    """
    values: Dict[str, Any] = field(default_factory=lambda: {o.key: _copy(o.default) for o in RUN_OPTIONS})
    source: Optional[str] = None

    def __getattr__(self, key: str) -> Any:
        values = self.__dict__.get("values")
        if values is not None and key in values:
            return values[key]
        raise AttributeError(key)

    @classmethod
    def parse(cls, text: str, source: Optional[str] = None) -> "RunConfig":
        """Parse a document; any problem becomes one ConfigurationError naming the line."""
        cfg = cls(source=source)
        seen: Dict[str, int] = {}
        for number, raw_line in enumerate(text.splitlines(), start=1):
            line = raw_line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"expected 'key = value', got {raw_line.strip()!r}", number)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigurationError("missing key before '='", number)
            option = OPTIONS_BY_KEY.get(key)
            if option is None:
                raise ConfigurationError(f"unknown key {key!r}", number)
            if key in seen:
                raise ConfigurationError(f"duplicate key {key!r} (first set on line {seen[key]})", number)
            seen[key] = number
            cfg.values[key] = _convert(option, value, number)
        cfg.validate(seen)
        return cfg

    @classmethod
    def from_file(cls, path: Path) -> "RunConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except UnicodeDecodeError as e:
            raise ConfigurationError(f"{path}: not UTF-8 text ({e.reason})") from None
        return cls.parse(text, source=str(path))

    def override(self, **values: Any) -> "RunConfig":
        """Apply CLI overrides; None means 'not given'."""
        for key, value in values.items():
            if value is None:
                continue
            if key not in OPTIONS_BY_KEY:
                raise ConfigurationError(f"unknown key {key!r}")
            self.values[key] = value
        self.validate()
        return self

    def validate(self, lines: Optional[Dict[str, int]] = None) -> None:
        """Range checks across keys; the error names the offending key's line when known."""
        lines = lines or {}
        v = self.values

        def fail(key: str, message: str) -> None:
            raise ConfigurationError(f"{key}: {message}", lines.get(key))

        for key in ("n_steps", "workers", "epochs", "n_neurons", "memory_word_bits"):
            if v[key] < (0 if key == "epochs" else 1):
                fail(key, "out of range")
        for key in ("n_images", "train_images", "lfsr_width", "draw_shifts", "decay_shift"):
            if v[key] < 0:
                fail(key, "must be >= 0")
        if not 0 <= v["rate_scale"] * 255 <= 1:
            fail("rate_scale", "rate_scale * 255 must be a probability")
        if v["tau"] <= 0 or v["dt"] <= 0:
            fail("tau" if v["tau"] <= 0 else "dt", "must be positive")
        if v["dt"] >= v["tau"]:
            fail("dt", "must be much smaller than tau")
        if v["w_inh"] >= 0:
            fail("w_inh", "must be negative")
        if v["w_max"] <= 0 or not 0 <= v["w_init_max"] <= v["w_max"]:
            fail("w_init_max", "must lie in [0, w_max] with w_max > 0")
        if v["f_clk"] <= 0 or v["software_time"] < 0:
            fail("f_clk", "clock must be positive and software time non-negative")
        if not v["sweep_min_bits"] <= v["sweep_max_bits"]:
            fail("sweep_min_bits", "must not exceed sweep_max_bits")
        if v["seed"] < 0:
            fail("seed", "must be >= 0")
        if EncoderMode.SINGLE_LFSR.value in (v["encoder_mode"], v["train_encoder_mode"]):
            width = v["lfsr_width"] or DEFAULT_SINGLE_WIDTH
            if 2 <= width <= 32 and v["seed"] & ((1 << width) - 1) == 0:
                fail("seed", f"the low {width} bits must not all be zero (LFSR seed)")
        try:
            self.weight_format
            self.membrane_format
            FixedFormat(v["sweep_min_bits"], v["membrane_frac_bits"])
            FixedFormat(v["sweep_max_bits"], v["membrane_frac_bits"])
            if v["membrane_frac_bits"] < v["weight_frac_bits"]:
                raise ContractViolation("membrane needs at least as many fractional bits as weights")
            if v["decay_shift"] and v["decay_shift"] >= v["membrane_bits"]:
                raise ContractViolation("decay_shift must be below membrane_bits")
            for mode in (EncoderMode.SINGLE_LFSR, EncoderMode.PER_INPUT_LFSR):
                self.encoder_config(mode)
        except ContractViolation as e:
            raise ConfigurationError(str(e)) from None

    # ----- typed per-module views -----

    @property
    def weight_format(self) -> FixedFormat:
        return FixedFormat(self.values["weight_bits"], self.values["weight_frac_bits"])

    @property
    def membrane_format(self) -> FixedFormat:
        return FixedFormat(self.values["membrane_bits"], self.values["membrane_frac_bits"])

    @property
    def resolved_decay_shift(self) -> int:
        v = self.values
        return v["decay_shift"] or decay_shift_for(v["dt"], v["tau"])

    def encoder_config(self, mode: Optional[EncoderMode] = None, training: bool = False) -> EncoderConfig:
        v = self.values
        if mode is None:
            mode = v["train_encoder_mode"] if training else v["encoder_mode"]
        return EncoderConfig(
            mode=EncoderMode(mode),
            rate_scale=v["rate_scale"],
            lfsr_width=v["lfsr_width"] or None,
            taps=tuple(v["lfsr_taps"]) or None,
            seed=v["seed"],
            draw_shifts=v["draw_shifts"] or None,
        )

    def engine_config(self, **changes: Any) -> EngineConfig:
        """
        Engine settings for a loaded network file: the membrane format and a
        decay_shift of 0 defer to what the file declares.
        """
        v = self.values
        params = dict(
            membrane_format=None,
            mode=ArithmeticMode(v["arithmetic_mode"]),
            decay_shift=v["decay_shift"] or None,
            strict_leak=v["strict_leak"],
            round_leak=v["round_leak"],
            decay_only_on_inactive=v["decay_only_on_inactive"],
            n_steps=v["n_steps"],
        )
        params.update(changes)
        return EngineConfig(**params)

    def model_params(self):
        from ..reference.lif import ModelParams, StdpParams

        v = self.values
        stdp = StdpParams(
            eta_post=v["eta_post"], eta_pre=v["eta_pre"], tau_pre=v["tau_pre"], tau_post=v["tau_post"],
            x_offset=v["x_offset"], w_max=v["w_max"],
        )
        return ModelParams(
            v_rest=v["v_rest"], tau=v["tau"], dt=v["dt"], v_thresh_base=v["v_thresh_base"],
            v_reset=v["v_reset"], v_floor=v["v_floor"], w_inh=v["w_inh"],
            theta_plus=v["theta_plus"], tau_theta=v["tau_theta"], stdp=stdp,
        )


def _copy(value: Any) -> Any:
    return list(value) if isinstance(value, list) else value


def load_run_config(path: Optional[Path] = None, **overrides: Any) -> RunConfig:
    """Defaults, or the document at `path`, with CLI overrides applied."""
    if path is None:
        cfg = RunConfig()
    else:
        if not Path(path).exists():
            raise ConfigurationError(f"config file not found: {path}")
        cfg = RunConfig.from_file(Path(path))
    return cfg.override(**overrides)
