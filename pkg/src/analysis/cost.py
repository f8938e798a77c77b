"""
Cycle and throughput cost model of the accelerator.

An inactive step costs one clock cycle; an active step scans every spike
position, n_exc + n_inh cycles. Classification time is cycles / f_clk.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Union

import pandas as pd

from ..core.encoding import DEFAULT_N_STEPS
from ..core.engine import CycleStats
from ..core.fixedpoint import MEMBRANE_FORMAT, WEIGHT_FORMAT, FixedFormat
from ..utils.errors import ContractViolation

DEFAULT_F_CLK = 886e6
# Per-image time of the software simulation the accelerator is compared to.
DEFAULT_SOFTWARE_TIME = 0.2

Number = Union[int, float]


@dataclass(frozen=True)
class CostModel:
    avg_active_steps: Number
    n_exc: int = 784
    n_inh: int = 400
    total_steps: int = DEFAULT_N_STEPS
    f_clk: float = DEFAULT_F_CLK

    def __post_init__(self):
        if self.n_exc < 0 or self.n_inh < 0 or self.total_steps < 0:
            raise ContractViolation("sizes and step counts must be non-negative")
        if not 0 <= self.avg_active_steps <= self.total_steps:
            raise ContractViolation(
                f"avg_active_steps {self.avg_active_steps} outside 0..{self.total_steps}"
            )
        if self.f_clk <= 0:
            raise ContractViolation("f_clk must be positive")

    @classmethod
    def from_stats(cls, stats: CycleStats, n_exc: int, n_inh: int, f_clk: float = DEFAULT_F_CLK) -> "CostModel":
        return cls(stats.active_steps, n_exc, n_inh, stats.total_steps, f_clk)

    @property
    def active_fraction(self) -> float:
        return self.avg_active_steps / self.total_steps if self.total_steps else 0.0


def cycle_count(m: CostModel) -> Number:
    cycles = m.avg_active_steps * (m.n_exc + m.n_inh) + (m.total_steps - m.avg_active_steps)
    return int(cycles) if float(cycles).is_integer() else cycles


def classification_time(cycles: Number, f_clk: float) -> float:
    """Seconds per classification."""
    if f_clk <= 0:
        raise ContractViolation("f_clk must be positive")
    return cycles / f_clk


def speedup(accelerator_time: float, software_time: float = DEFAULT_SOFTWARE_TIME) -> float:
    if accelerator_time <= 0:
        raise ContractViolation("accelerator time must be positive")
    return software_time / accelerator_time


def cost_summary(m: CostModel, software_time: float = DEFAULT_SOFTWARE_TIME) -> pd.DataFrame:
    """One-row table: cycles, time and speedup over the software baseline."""
    cycles = cycle_count(m)
    seconds = classification_time(cycles, m.f_clk)
    return pd.DataFrame([{
        "active_steps": m.avg_active_steps,
        "n_exc": m.n_exc,
        "n_inh": m.n_inh,
        "total_steps": m.total_steps,
        "f_clk_hz": m.f_clk,
        "cycles": cycles,
        "time_us": seconds * 1e6,
        "images_per_s": 1.0 / seconds if seconds else float("inf"),
        "speedup": speedup(seconds, software_time) if seconds else float("inf"),
    }])


# ---------------------------------------------------------------------------
# Memory footprint
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MemoryReport:
    weight_bits: int          # all stored weights
    weights_per_word: int
    weight_words: int
    register_bits: int        # V_REG + V_TH_REG of every neuron
    scalar_bits: int          # w_inh + v_reset of every layer

    @property
    def total_bits(self) -> int:
        return self.weight_bits + self.register_bits + self.scalar_bits

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([{
            "weight_bits": self.weight_bits,
            "weights_per_word": self.weights_per_word,
            "weight_words": self.weight_words,
            "register_bits": self.register_bits,
            "scalar_bits": self.scalar_bits,
            "total_bits": self.total_bits,
            "total_kib": self.total_bits / 8 / 1024,
        }])


def weights_per_word(weight_bits: int, word_bits: int = 32) -> int:
    if weight_bits < 1 or word_bits < weight_bits:
        raise ContractViolation(f"cannot pack {weight_bits}-bit weights into {word_bits}-bit words")
    return word_bits // weight_bits


def memory_requirements(
    dims: Sequence[tuple[int, int]],
    weight_format: FixedFormat = WEIGHT_FORMAT,
    membrane_format: FixedFormat = MEMBRANE_FORMAT,
    word_bits: int = 32,
) -> MemoryReport:
    """
    Storage of a network with layer dims [(n_inputs, n_neurons), ...].

    Each neuron keeps its potential and threshold in membrane-format registers.
    """
    n_weights = sum(n_in * n_out for n_in, n_out in dims)
    n_neurons = sum(n_out for _, n_out in dims)
    per_word = weights_per_word(weight_format.total_bits, word_bits)
    return MemoryReport(
        weight_bits=n_weights * weight_format.total_bits,
        weights_per_word=per_word,
        weight_words=-(-n_weights // per_word),
        register_bits=2 * n_neurons * membrane_format.total_bits,
        scalar_bits=2 * len(dims) * membrane_format.total_bits,
    )


def packing_table(
    n_weights: int, word_bits: int = 32, bit_range: Optional[Sequence[int]] = None,
) -> pd.DataFrame:
    """Memory words needed for `n_weights` weights as the weight width varies (2..16 bits by default)."""
    if bit_range is None:
        bit_range = range(2, min(16, word_bits) + 1)
    rows = []
    for bits in bit_range:
        per_word = weights_per_word(bits, word_bits)
        rows.append({"weight_bits": bits, "weights_per_word": per_word, "words": -(-n_weights // per_word)})
    return pd.DataFrame(rows)
