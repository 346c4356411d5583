"""Quantized phase shifters and twin-resolution array patterns.

A shifter network is described by a per-cell resolution label grid (the
"pattern", one cell per antenna/RF-chain pair) plus one quantizer per
resolution class.  Fixed patterns are static layouts; the dynamic network
reassigns the pattern per channel realization (see :mod:`twinshift.design`).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi


class NetworkKind(enum.Enum):
    """Supported analog-network architectures."""

    HORIZONTAL = "Fixed-Horizontal"
    VERTICAL = "Fixed-Vertical"
    INTERLACED = "Fixed-Interlaced"
    RANDOM_FIXED = "Fixed-Random"
    DYNAMIC = "Dynamic-Twin"
    UNIFORM_HIGH = "UniformHigh"
    UNIFORM_MODERATE = "UniformModerate"
    UNIFORM_LOW = "UniformLow"


#: Kinds whose network mixes one high- and one low-resolution quantizer.
TWIN_KINDS = frozenset(
    {
        NetworkKind.HORIZONTAL,
        NetworkKind.VERTICAL,
        NetworkKind.INTERLACED,
        NetworkKind.RANDOM_FIXED,
        NetworkKind.DYNAMIC,
    }
)

#: Kinds built from a single quantizer applied to every cell.
UNIFORM_KINDS = frozenset(
    {
        NetworkKind.UNIFORM_HIGH,
        NetworkKind.UNIFORM_MODERATE,
        NetworkKind.UNIFORM_LOW,
    }
)


@dataclass(frozen=True)
class QuantizerSpec:
    """A B-bit phase quantizer with levels 2*pi*k / 2**B, k = 0..2**B - 1."""

    bits: int

    def __post_init__(self) -> None:
        if not 1 <= self.bits <= 16:
            raise ValueError(f"quantizer bits must be in [1, 16], got {self.bits}")

    @property
    def n_levels(self) -> int:
        return 1 << self.bits

    @property
    def step(self) -> float:
        return TWO_PI / self.n_levels

    @property
    def levels(self) -> np.ndarray:
        return np.arange(self.n_levels) * self.step


def wrap_to_pi(phi):
    """Wrap angles into [-pi, pi)."""
    return np.mod(np.asarray(phi) + np.pi, TWO_PI) - np.pi


def nearest_level_index(phi, q: QuantizerSpec) -> np.ndarray:
    """Vectorized nearest-level lookup with a deterministic tie rule.

    A phase exactly halfway between two levels snaps to the smaller level
    value (index 0 when the upper neighbor wraps around to zero).
    """
    phi = np.mod(np.asarray(phi, dtype=float), TWO_PI)
    kf = phi / q.step
    k_lo = np.floor(kf)
    frac = kf - k_lo
    k = np.where(frac > 0.5, k_lo + 1.0, k_lo)
    # exact half step: prefer the lower index unless the upper wraps to 0
    tie = frac == 0.5
    if np.any(tie):
        upper = k_lo + 1.0
        k = np.where(tie & (upper == q.n_levels), upper, k)
    return np.mod(k, q.n_levels).astype(int)


def quantization_error(phi, q: QuantizerSpec) -> np.ndarray:
    """Circular distance from each phase to its nearest quantizer level."""
    idx = nearest_level_index(phi, q)
    return np.abs(wrap_to_pi(np.asarray(phi, dtype=float) - idx * q.step))


def quantize_phase(phi: float, q: QuantizerSpec) -> tuple[float, float]:
    """Snap one phase to the quantizer grid.

    Returns ``(level, error)`` where ``level`` is the grid phase in [0, 2*pi)
    minimizing the circular distance to ``phi`` and ``error`` is that
    distance (never exceeding half the level spacing, pi / 2**B).
    """
    if not np.isfinite(phi):
        raise ValueError("phase must be finite")
    idx = int(nearest_level_index(phi, q))
    level = idx * q.step
    error = float(np.abs(wrap_to_pi(phi - level)))
    return level, error


@dataclass
class PatternAssignment:
    """Resolution label grid: ``high_mask[i, j]`` is True for a high-resolution
    cell at antenna ``i``, RF chain ``j``."""

    high_mask: np.ndarray

    def __post_init__(self) -> None:
        self.high_mask = np.asarray(self.high_mask, dtype=bool)
        if self.high_mask.ndim != 2:
            raise ValueError("pattern grid must be 2-D (antennas x RF chains)")

    @property
    def n_antennas(self) -> int:
        return self.high_mask.shape[0]

    @property
    def n_chains(self) -> int:
        return self.high_mask.shape[1]

    @property
    def n_high(self) -> int:
        return int(self.high_mask.sum())

    @property
    def n_low(self) -> int:
        return int(self.high_mask.size - self.high_mask.sum())

    def is_twin_balanced(self) -> bool:
        """True when high and low cells each cover half the grid."""
        return self.n_high == self.n_low

    def is_column_balanced(self) -> bool:
        """True when every column holds exactly half high cells."""
        per_col = self.high_mask.sum(axis=0)
        return bool(np.all(per_col * 2 == self.n_antennas))

    def validate_twin(self) -> "PatternAssignment":
        if not self.is_twin_balanced():
            raise ValueError(
                f"twin pattern must have equal high/low counts, "
                f"got {self.n_high} high / {self.n_low} low"
            )
        return self

    @classmethod
    def uniform(cls, n_antennas: int, n_chains: int, high: bool = True) -> "PatternAssignment":
        """Single-resolution grid used by the uniform baseline networks."""
        return cls(np.full((n_antennas, n_chains), bool(high)))

    def to_text(self) -> str:
        """Compact grid form, one row per antenna, 'H'/'L' per cell."""
        rows = ["".join("H" if h else "L" for h in row) for row in self.high_mask]
        return "\n".join(rows)

    @classmethod
    def from_text(cls, text: str) -> "PatternAssignment":
        rows = [line.strip() for line in text.strip().splitlines() if line.strip()]
        if not rows or any(set(r) - {"H", "L"} for r in rows):
            raise ValueError("pattern text must be lines of 'H'/'L' characters")
        if len({len(r) for r in rows}) != 1:
            raise ValueError("pattern text rows must have equal length")
        mask = np.array([[c == "H" for c in row] for row in rows])
        return cls(mask)


def build_fixed_pattern(
    kind: NetworkKind,
    n_bs: int,
    n_k: int,
    rng: np.random.Generator | None = None,
    *,
    high_first: bool = True,
) -> PatternAssignment:
    """Build one of the static twin-resolution layouts.

    ``high_first`` puts the high-resolution half in the top rows (horizontal)
    or left columns (vertical); flip it to use the other half.
    """
    if n_bs % 2 != 0:
        raise ValueError(f"fixed twin patterns require an even antenna count, got {n_bs}")
    mask = np.zeros((n_bs, n_k), dtype=bool)
    if kind is NetworkKind.HORIZONTAL:
        rows = slice(0, n_bs // 2) if high_first else slice(n_bs // 2, n_bs)
        mask[rows, :] = True
    elif kind is NetworkKind.VERTICAL:
        if n_k % 2 != 0:
            raise ValueError(f"vertical pattern requires an even RF-chain count, got {n_k}")
        cols = slice(0, n_k // 2) if high_first else slice(n_k // 2, n_k)
        mask[:, cols] = True
    elif kind is NetworkKind.INTERLACED:
        i, j = np.indices((n_bs, n_k))
        mask = (i + j) % 2 == (0 if high_first else 1)
    elif kind is NetworkKind.RANDOM_FIXED:
        if rng is None:
            raise ValueError("random fixed pattern requires an rng")
        flat = np.zeros(n_bs * n_k, dtype=bool)
        flat[rng.permutation(n_bs * n_k)[: n_bs * n_k // 2]] = True
        mask = flat.reshape(n_bs, n_k)
    else:
        raise ValueError(f"{kind} is not a fixed twin pattern kind")
    return PatternAssignment(mask).validate_twin()
