"""
Rate-coded spike generation driven by Fibonacci LFSRs.

Each elaboration step compares a pseudorandom draw against a per-pixel
threshold: a source fires when the draw falls below its pixel's spike
probability. Three randomness modes are supported:

- single_lfsr: one register shared by all sources (inference). Sources with
  equal pixel values get identical trains, and a brighter pixel's spikes are
  a superset of a dimmer one's.
- per_input_lfsr: one register per source (training).
- random: numpy Generator draws, for runs that do not need LFSR fidelity.

Uniform draws from an LFSR of width N are the register states 1..2**N-1; a
source with threshold T = round(p * 2**N) fires iff state <= T, i.e. iff
(state - 1) < T, which happens with probability T / (2**N - 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Iterator, Optional, Sequence

import numpy as np

from ..utils.errors import ContractViolation

# Maximal-length Fibonacci taps (register bits numbered 1..N), widths 3..32.
LFSR_TAPS: dict[int, tuple[int, ...]] = {
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 6, 4, 1),
    13: (13, 4, 3, 1),
    14: (14, 5, 3, 1),
    15: (15, 14),
    16: (16, 15, 13, 4),
    17: (17, 14),
    18: (18, 11),
    19: (19, 6, 2, 1),
    20: (20, 17),
    21: (21, 19),
    22: (22, 21),
    23: (23, 18),
    24: (24, 23, 22, 17),
    25: (25, 22),
    26: (26, 6, 2, 1),
    27: (27, 5, 2, 1),
    28: (28, 25),
    29: (29, 27),
    30: (30, 6, 4, 1),
    31: (31, 28),
    32: (32, 22, 2, 1),
}

# 63.75 Hz at pixel 255 with dt = 0.1 ms.
DEFAULT_DT_SECONDS = 1e-4
MAX_RATE_HZ = 63.75
DEFAULT_RATE_SCALE = MAX_RATE_HZ * DEFAULT_DT_SECONDS / 255

DEFAULT_SINGLE_WIDTH = 32
DEFAULT_PER_INPUT_WIDTH = 16
DEFAULT_N_STEPS = 3500

# Widths up to this get a precomputed full-period state table.
TABLE_MAX_WIDTH = 20


class EncoderMode(str, Enum):
    SINGLE_LFSR = "single_lfsr"
    PER_INPUT_LFSR = "per_input_lfsr"
    RANDOM = "random"


def tap_mask(taps: Sequence[int]) -> int:
    mask = 0
    for t in taps:
        mask |= 1 << (t - 1)
    return mask


@dataclass(frozen=True)
class Lfsr:
    """Fibonacci XOR LFSR: shifts left, feedback enters bit 1."""
    state: int
    width: int
    taps: tuple[int, ...]

    def __post_init__(self):
        if self.width < 2 or self.width > 64:
            raise ContractViolation(f"LFSR width must be in 2..64, got {self.width}")
        if not self.taps or any(not 1 <= t <= self.width for t in self.taps):
            raise ContractViolation(f"taps {self.taps} must lie in 1..{self.width}")
        if self.state == 0:
            raise ContractViolation("LFSR state must be nonzero (all-zero is the lock-up state)")
        if not 0 < self.state < (1 << self.width):
            raise ContractViolation(f"LFSR state {self.state} does not fit in {self.width} bits")

    @classmethod
    def seeded(cls, width: int, seed: int, taps: Optional[Sequence[int]] = None) -> "Lfsr":
        return cls(state=seed, width=width, taps=tuple(taps) if taps else default_taps(width))

    @property
    def mask(self) -> int:
        return (1 << self.width) - 1

    def advance(self, n: int = 1) -> "Lfsr":
        """State after n shifts."""
        return replace(self, state=_shift(self.state, tap_mask(self.taps), self.mask, n))


def default_taps(width: int) -> tuple[int, ...]:
    try:
        return LFSR_TAPS[width]
    except KeyError:
        raise ContractViolation(f"no shipped taps for LFSR width {width}") from None


def _shift(state: int, taps_mask: int, mask: int, n: int) -> int:
    for _ in range(n):
        feedback = (state & taps_mask).bit_count() & 1
        state = ((state << 1) | feedback) & mask
    return state


def lfsr_next(l: Lfsr) -> tuple[Lfsr, int]:
    """Advance one shift; the new state is also the random word."""
    if l.state == 0:
        raise ContractViolation("LFSR state must be nonzero")
    nxt = l.advance(1)
    return nxt, nxt.state


def lfsr_period(width: int, taps: Optional[Sequence[int]] = None, seed: int = 1) -> int:
    """Number of shifts until the register returns to `seed` (exhaustive)."""
    taps = tuple(taps) if taps else default_taps(width)
    Lfsr(seed, width, taps)
    mask = (1 << width) - 1
    taps_mask = tap_mask(taps)
    state = _shift(seed, taps_mask, mask, 1)
    period = 1
    while state != seed:
        state = _shift(state, taps_mask, mask, 1)
        period += 1
        if period > mask:
            break
    return period


@lru_cache(maxsize=8)
def _state_table(width: int, taps: tuple[int, ...]) -> tuple[np.ndarray, np.ndarray]:
    """Full period starting at state 1, plus the inverse (state -> position) index."""
    if width > TABLE_MAX_WIDTH:
        raise ContractViolation(f"state tables are limited to width <= {TABLE_MAX_WIDTH}")
    mask = (1 << width) - 1
    taps_mask = tap_mask(taps)
    sequence = np.empty(mask, dtype=np.int64)
    state = 1
    for i in range(mask):
        sequence[i] = state
        state = _shift(state, taps_mask, mask, 1)
    if state != 1:
        raise ContractViolation(f"taps {taps} are not maximal-length for width {width}")
    position = np.full(mask + 1, -1, dtype=np.int64)
    position[sequence] = np.arange(mask, dtype=np.int64)
    return sequence, position


@dataclass(eq=False)
class SpikeVector:
    """One step's spike bits, one per source."""
    bits: np.ndarray

    @classmethod
    def zeros(cls, n: int) -> "SpikeVector":
        return cls(np.zeros(n, dtype=bool))

    @classmethod
    def from_indices(cls, n: int, indices: Sequence[int]) -> "SpikeVector":
        bits = np.zeros(n, dtype=bool)
        bits[list(indices)] = True
        return cls(bits)

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    def __eq__(self, other: object) -> bool:
        return isinstance(other, SpikeVector) and np.array_equal(self.bits, other.bits)

    def any(self) -> bool:
        return bool(self.bits.any())

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.bits)


@dataclass(eq=False)
class SpikeTrain:
    """Spike bits of a whole presentation, shape (n_steps, n_sources)."""
    bits: np.ndarray

    def __len__(self) -> int:
        return int(self.bits.shape[0])

    def __getitem__(self, step: int) -> SpikeVector:
        return SpikeVector(self.bits[step])

    def __iter__(self) -> Iterator[SpikeVector]:
        for row in self.bits:
            yield SpikeVector(row)

    @property
    def n_sources(self) -> int:
        return int(self.bits.shape[1])

    @property
    def active_steps(self) -> int:
        return int(np.count_nonzero(self.bits.any(axis=1)))


@dataclass(frozen=True)
class EncoderConfig:
    """How pixels become spikes."""
    mode: EncoderMode = EncoderMode.SINGLE_LFSR
    rate_scale: float = DEFAULT_RATE_SCALE
    lfsr_width: Optional[int] = None
    taps: Optional[tuple[int, ...]] = None
    seed: int = 1
    seeds: Optional[tuple[int, ...]] = None
    draw_shifts: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "mode", EncoderMode(self.mode))
        if self.rate_scale < 0 or self.rate_scale * 255 > 1:
            raise ContractViolation(f"rate_scale * 255 must be a probability, got {self.rate_scale * 255}")
        if self.mode is not EncoderMode.RANDOM:
            width = self.width
            if not 2 <= width <= 32:
                raise ContractViolation(f"LFSR width must be in 2..32, got {width}")
            taps = self.tap_list
            if any(not 1 <= t <= width for t in taps):
                raise ContractViolation(f"taps {taps} must lie in 1..{width}")
            if self.shifts_per_draw < 1:
                raise ContractViolation("draw_shifts must be >= 1")

    @property
    def width(self) -> int:
        if self.lfsr_width is not None:
            return self.lfsr_width
        if self.mode is EncoderMode.PER_INPUT_LFSR:
            return DEFAULT_PER_INPUT_WIDTH
        return DEFAULT_SINGLE_WIDTH

    @property
    def tap_list(self) -> tuple[int, ...]:
        return tuple(self.taps) if self.taps else default_taps(self.width)

    @property
    def shifts_per_draw(self) -> int:
        """Register shifts between draws; a full word by default so draws do not overlap."""
        return self.draw_shifts if self.draw_shifts is not None else self.width

    def with_mode(self, mode: EncoderMode) -> "EncoderConfig":
        return replace(self, mode=EncoderMode(mode), lfsr_width=None, taps=None, seeds=None)


def spike_thresholds(pixels: np.ndarray, cfg: EncoderConfig) -> np.ndarray:
    """Per-source comparator thresholds in draw units."""
    p = np.asarray(pixels, dtype=np.float64).reshape(-1) * cfg.rate_scale
    if cfg.mode is EncoderMode.RANDOM:
        return p
    return np.rint(p * float(1 << cfg.width)).astype(np.int64)


def per_input_seeds(cfg: EncoderConfig, n_sources: int) -> np.ndarray:
    """Nonzero seeds for every source: explicit `seeds`, or derived from `seed`."""
    mask = (1 << cfg.width) - 1
    if cfg.seeds is not None:
        if len(cfg.seeds) != n_sources:
            raise ContractViolation(f"{len(cfg.seeds)} seeds given for {n_sources} sources")
        seeds = np.asarray(cfg.seeds, dtype=np.int64) & mask
    else:
        rng = np.random.default_rng(cfg.seed)
        seeds = rng.integers(1, mask + 1, size=n_sources, dtype=np.int64)
    if np.any(seeds == 0):
        raise ContractViolation("per-input LFSR seeds must be nonzero")
    return seeds


@dataclass
class EncoderState:
    """Randomness state of one run; owned by a single encoder."""
    mode: EncoderMode
    state: int = 0
    positions: Optional[np.ndarray] = None
    states: Optional[np.ndarray] = None
    rng: Optional[np.random.Generator] = field(default=None, repr=False)

    @classmethod
    def initial(cls, cfg: EncoderConfig, n_sources: int) -> "EncoderState":
        if cfg.mode is EncoderMode.RANDOM:
            return cls(cfg.mode, rng=np.random.default_rng(cfg.seed))
        if cfg.mode is EncoderMode.SINGLE_LFSR:
            seed = cfg.seed & ((1 << cfg.width) - 1)
            return cls(cfg.mode, state=Lfsr.seeded(cfg.width, seed, cfg.tap_list).state)
        seeds = per_input_seeds(cfg, n_sources)
        if cfg.width <= TABLE_MAX_WIDTH:
            _, position = _state_table(cfg.width, cfg.tap_list)
            return cls(cfg.mode, positions=position[seeds])
        return cls(cfg.mode, states=seeds.astype(np.uint64))

    def copy(self) -> "EncoderState":
        rng = None
        if self.rng is not None:
            rng = np.random.default_rng()
            rng.bit_generator.state = self.rng.bit_generator.state
        return EncoderState(
            self.mode,
            self.state,
            None if self.positions is None else self.positions.copy(),
            None if self.states is None else self.states.copy(),
            rng,
        )


def _shift_array(states: np.ndarray, taps: Sequence[int], width: int, n: int) -> np.ndarray:
    mask = np.uint64((1 << width) - 1)
    one = np.uint64(1)
    for _ in range(n):
        feedback = np.zeros_like(states)
        for t in taps:
            feedback ^= (states >> np.uint64(t - 1)) & one
        states = ((states << one) | feedback) & mask
    return states


class SpikeEncoder:
    """
    Turns one image into spikes, step by step or all at once.

    Usage:
        encoder = SpikeEncoder(cfg, image)
        first = encoder.step()
        rest = encoder.encode(3499)
    """

    def __init__(self, cfg: EncoderConfig, pixels: np.ndarray, state: Optional[EncoderState] = None):
        self.cfg = cfg
        self.pixels = np.asarray(pixels).reshape(-1)
        self.n_sources = int(self.pixels.shape[0])
        self.thresholds = spike_thresholds(self.pixels, cfg)
        self.state = state if state is not None else EncoderState.initial(cfg, self.n_sources)

    def step(self) -> SpikeVector:
        return SpikeVector(self.encode(1).bits[0])

    def encode(self, n_steps: int) -> SpikeTrain:
        """Next n_steps spike vectors; identical to calling step() n_steps times."""
        if n_steps < 1:
            raise ContractViolation(f"n_steps must be >= 1, got {n_steps}")
        cfg = self.cfg
        st = self.state

        if cfg.mode is EncoderMode.RANDOM:
            draws = st.rng.random((n_steps, self.n_sources))
            return SpikeTrain(draws < self.thresholds[None, :])

        shifts = cfg.shifts_per_draw
        if cfg.mode is EncoderMode.SINGLE_LFSR:
            mask = (1 << cfg.width) - 1
            taps_mask = tap_mask(cfg.tap_list)
            draws = np.empty(n_steps, dtype=np.int64)
            state = st.state
            for i in range(n_steps):
                state = _shift(state, taps_mask, mask, shifts)
                draws[i] = state
            st.state = state
            return SpikeTrain(draws[:, None] <= self.thresholds[None, :])

        if st.positions is not None:
            sequence, _ = _state_table(cfg.width, cfg.tap_list)
            period = sequence.shape[0]
            offsets = shifts * np.arange(1, n_steps + 1, dtype=np.int64)
            index = (st.positions[None, :] + offsets[:, None]) % period
            st.positions = (st.positions + shifts * n_steps) % period
            return SpikeTrain(sequence[index] <= self.thresholds[None, :])

        bits = np.empty((n_steps, self.n_sources), dtype=bool)
        thresholds = self.thresholds.astype(np.uint64)
        for i in range(n_steps):
            st.states = _shift_array(st.states, cfg.tap_list, cfg.width, shifts)
            bits[i] = st.states <= thresholds
        return SpikeTrain(bits)


def encode_step(
    pixels: np.ndarray,
    cfg: EncoderConfig,
    rng_state: Optional[EncoderState] = None,
) -> tuple[SpikeVector, EncoderState]:
    """One step of spikes plus the advanced randomness state; the input state is not modified."""
    n_sources = int(np.asarray(pixels).size)
    state = rng_state.copy() if rng_state is not None else EncoderState.initial(cfg, n_sources)
    encoder = SpikeEncoder(cfg, pixels, state)
    return encoder.step(), encoder.state


def encode_image(pixels: np.ndarray, cfg: EncoderConfig, n_steps: int = DEFAULT_N_STEPS) -> SpikeTrain:
    """Whole presentation from the configured seeds; deterministic."""
    return SpikeEncoder(cfg, pixels).encode(n_steps)
