"""
Bit-exact two's-complement fixed-point arithmetic.

Scalar operations (quantize, add_sub, align, decay_step) model the neuron's
adder/subtractor and shifter one value at a time. The *_array kernels apply the
same rules to a whole vector of neurons and are what the engine runs on; both
paths share the range and overflow rules below, so they agree bit for bit.

Raw values are plain Python ints (scalar path) or int64 numpy arrays (vector
path). Formats are at most 32 bits wide, so every intermediate sum of two
in-range values fits in int64.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

from ..utils.errors import ContractViolation

MAX_TOTAL_BITS = 32

DEFAULT_DECAY_SHIFT = 10


class ArithmeticMode(str, Enum):
    """What happens when an exact result leaves the format's range."""
    SATURATE = "saturate"
    WRAP = "wrap"


class AddSubOp(str, Enum):
    ADD = "add"
    SUB = "sub"


@dataclass(frozen=True)
class FixedFormat:
    """Signed fixed-point format: `total_bits` including sign, `frac_bits` after the point."""
    total_bits: int
    frac_bits: int

    def __post_init__(self):
        if not 2 <= self.total_bits <= MAX_TOTAL_BITS:
            raise ContractViolation(f"total_bits must be in 2..{MAX_TOTAL_BITS}, got {self.total_bits}")
        if not 0 <= self.frac_bits <= self.total_bits - 1:
            raise ContractViolation(
                f"frac_bits must be in 0..{self.total_bits - 1}, got {self.frac_bits}"
            )

    @property
    def min_raw(self) -> int:
        return -(1 << (self.total_bits - 1))

    @property
    def max_raw(self) -> int:
        return (1 << (self.total_bits - 1)) - 1

    @property
    def resolution(self) -> float:
        return 2.0 ** -self.frac_bits

    @property
    def min_value(self) -> float:
        return self.min_raw * self.resolution

    @property
    def max_value(self) -> float:
        return self.max_raw * self.resolution

    def contains(self, raw: int) -> bool:
        return self.min_raw <= raw <= self.max_raw

    def wrap(self, raw: int) -> int:
        """Reduce an exact integer into range modulo 2**total_bits."""
        span = 1 << self.total_bits
        return ((raw - self.min_raw) % span) + self.min_raw

    def clamp(self, raw: int) -> int:
        return max(self.min_raw, min(self.max_raw, raw))

    def __str__(self) -> str:
        return f"{{{self.total_bits},{self.frac_bits}}}"


# Defaults: 16-bit membrane, 5-bit weights with 3 fractional bits.
MEMBRANE_FORMAT = FixedFormat(16, 3)
WEIGHT_FORMAT = FixedFormat(5, 3)


@dataclass
class OverflowLog:
    """
    Out-of-range events of one engine run.

    `count` counts every operation whose exact result left the format's range,
    in either mode; `saturations` counts the subset that was clamped. Both only
    ever grow.
    """
    count: int = 0
    saturations: int = 0

    def record(self, events: int, saturated: bool) -> None:
        if events <= 0:
            return
        self.count += events
        if saturated:
            self.saturations += events

    def merge(self, other: "OverflowLog") -> "OverflowLog":
        self.count += other.count
        self.saturations += other.saturations
        return self

    @property
    def clean(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class FixedPoint:
    raw: int
    format: FixedFormat

    def __post_init__(self):
        if not self.format.contains(self.raw):
            raise ContractViolation(f"raw {self.raw} outside {self.format} range")

    @property
    def value(self) -> float:
        """Represented value in model units."""
        return self.raw * self.format.resolution

    def __float__(self) -> float:
        return self.value


def _fit(exact: int, fmt: FixedFormat, mode: ArithmeticMode, log: Optional[OverflowLog]) -> int:
    if fmt.contains(exact):
        return exact
    saturate = ArithmeticMode(mode) is ArithmeticMode.SATURATE
    if log is not None:
        log.record(1, saturated=saturate)
    return fmt.clamp(exact) if saturate else fmt.wrap(exact)


def quantize(
    value: float,
    fmt: FixedFormat,
    mode: ArithmeticMode = ArithmeticMode.SATURATE,
    log: Optional[OverflowLog] = None,
) -> FixedPoint:
    """
    Quantize a real value (model units) to the nearest code of `fmt`.

    Rounding is round-half-to-even. Out-of-range values are clamped or wrapped
    according to `mode`, and the event is recorded in `log` when given.
    """
    exact = int(round(value * (1 << fmt.frac_bits)))
    return FixedPoint(_fit(exact, fmt, mode, log), fmt)


def dequantize(x: FixedPoint) -> float:
    return x.value


def add_sub(
    a: FixedPoint,
    b: FixedPoint,
    op: AddSubOp = AddSubOp.ADD,
    mode: ArithmeticMode = ArithmeticMode.SATURATE,
    log: Optional[OverflowLog] = None,
) -> FixedPoint:
    """
    Signed add/subtract in `a`'s format.

    `b` must already be aligned to `a`'s fractional bits (see align).
    """
    if a.format.frac_bits != b.format.frac_bits:
        raise ContractViolation(
            f"operands not aligned: frac_bits {a.format.frac_bits} vs {b.format.frac_bits}"
        )
    exact = a.raw + b.raw if AddSubOp(op) is AddSubOp.ADD else a.raw - b.raw
    return FixedPoint(_fit(exact, a.format, mode, log), a.format)


def align(w: FixedPoint, target: FixedFormat) -> FixedPoint:
    """Re-express `w` in `target` without changing its value (sign-extend, then shift left)."""
    extra = target.frac_bits - w.format.frac_bits
    if extra < 0:
        raise ContractViolation(
            f"cannot align {w.format} to {target}: target has fewer fractional bits"
        )
    raw = w.raw << extra
    if not target.contains(raw):
        raise ContractViolation(f"value {w.value} not representable in {target}")
    return FixedPoint(raw, target)


def decay_step(v: FixedPoint, shift: int, strict_leak: bool = False, round_leak: bool = False) -> FixedPoint:
    """
    One leak step: v - (v >> shift) with an arithmetic shift.

    The result never has a larger magnitude than v, so it cannot overflow.
    With `strict_leak`, a positive value whose shifted term truncates to 0
    still loses one raw unit; by default it stays put, as the shifter does.
    With `round_leak`, the shifted term is rounded to nearest (half up)
    instead of truncated.
    """
    _check_shift(shift, v.format)
    return FixedPoint(_decay_raw(v.raw, shift, strict_leak, round_leak), v.format)


def _check_shift(shift: int, fmt: FixedFormat) -> None:
    if not 0 < shift < fmt.total_bits:
        raise ContractViolation(f"decay shift must be in 1..{fmt.total_bits - 1}, got {shift}")


def _decay_raw(raw: int, shift: int, strict_leak: bool, round_leak: bool = False) -> int:
    leak = (raw + (1 << (shift - 1))) >> shift if round_leak else raw >> shift
    if strict_leak and leak == 0 and raw > 0:
        leak = 1
    return raw - leak


# ---------------------------------------------------------------------------
# Vector kernels (one entry per neuron)
# ---------------------------------------------------------------------------

def quantize_array(
    values: np.ndarray,
    fmt: FixedFormat,
    mode: ArithmeticMode = ArithmeticMode.SATURATE,
    log: Optional[OverflowLog] = None,
) -> np.ndarray:
    """Vector form of quantize; returns int64 raw codes."""
    exact = np.rint(np.asarray(values, dtype=np.float64) * (1 << fmt.frac_bits)).astype(np.int64)
    return fit_array(exact, fmt, mode, log)


def fit_array(
    exact: np.ndarray,
    fmt: FixedFormat,
    mode: ArithmeticMode,
    log: Optional[OverflowLog],
) -> np.ndarray:
    """Bring exact int64 results into range, logging one event per out-of-range entry."""
    out_of_range = (exact < fmt.min_raw) | (exact > fmt.max_raw)
    events = int(np.count_nonzero(out_of_range))
    if events == 0:
        return exact
    saturate = ArithmeticMode(mode) is ArithmeticMode.SATURATE
    if log is not None:
        log.record(events, saturated=saturate)
    if saturate:
        return np.clip(exact, fmt.min_raw, fmt.max_raw)
    span = np.int64(1) << np.int64(fmt.total_bits)
    return ((exact - fmt.min_raw) % span) + fmt.min_raw


def add_array(
    v: np.ndarray,
    w: np.ndarray,
    fmt: FixedFormat,
    mode: ArithmeticMode,
    log: Optional[OverflowLog],
) -> np.ndarray:
    """Element-wise v + w (both raw, same fractional bits) fitted into `fmt`."""
    return fit_array(v + w, fmt, mode, log)


def decay_array(
    v: np.ndarray,
    shift: int,
    fmt: FixedFormat,
    strict_leak: bool = False,
    round_leak: bool = False,
) -> np.ndarray:
    """
    Vector form of decay_step.

    Shifts of total_bits or more are accepted here, as a wide shifter sees them:
    the leak is 0 for non-negative values and -1 for negative ones.
    """
    if not 0 < shift < 64:
        raise ContractViolation(f"decay shift must be in 1..63, got {shift}")
    leak = (v + (np.int64(1) << np.int64(shift - 1))) >> shift if round_leak else v >> shift
    if strict_leak:
        leak = np.where((leak == 0) & (v > 0), 1, leak)
    return v - leak


def decay_shift_for(dt: float, tau: float) -> int:
    """Power-of-two exponent k with 2**-k closest to dt/tau (in log scale)."""
    if dt <= 0 or tau <= 0:
        raise ContractViolation("dt and tau must be positive")
    return max(1, int(round(float(np.log2(tau / dt)))))
