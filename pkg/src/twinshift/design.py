"""Point-to-point hybrid precoder design.

The analog matrix is designed greedily against the combiner-compressed
target ``h_hat`` (streams x antennas): per RF-chain column, the entries with
the cheapest circular quantization error are committed to the low-resolution
grid first, one per round, re-deriving the remaining entries' objective-
maximizing phases after every commitment.  A second pass fills the rest on
the high-resolution grid.  The dynamic variant chooses which entries go low;
the fixed variant is told by a static pattern.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .shifters import (
    PatternAssignment,
    QuantizerSpec,
    nearest_level_index,
    quantization_error,
)

LN2 = np.log(2.0)

#: Absolute floor added to the relative column regularizer so degenerate
#: (empty-submatrix) columns stay invertible.
XI_FLOOR = 1e-30


def as_matrix(channel) -> np.ndarray:
    """Accept a raw complex matrix or any object carrying one in ``.matrix``."""
    return np.asarray(getattr(channel, "matrix", channel), dtype=complex)


@dataclass
class AnalogPrecoder:
    """Unit-modulus analog matrix with its pattern and quantizer pair."""

    matrix: np.ndarray
    pattern: PatternAssignment
    quantizers: tuple[QuantizerSpec, QuantizerSpec]  # (high, low)

    @property
    def n_antennas(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_chains(self) -> int:
        return self.matrix.shape[1]

    def magnitude_error(self) -> float:
        """Worst-case deviation of entry magnitudes from 1/sqrt(N)."""
        return float(np.max(np.abs(np.abs(self.matrix) - 1.0 / np.sqrt(self.n_antennas))))

    def grid_error(self) -> float:
        """Worst-case circular distance of entry phases from their grid."""
        high, low = self.quantizers
        angles = np.angle(self.matrix)
        err_high = quantization_error(angles, high)
        err_low = quantization_error(angles, low)
        return float(np.max(np.where(self.pattern.high_mask, err_high, err_low)))

    def validate(self, tol: float = 1e-12) -> "AnalogPrecoder":
        if self.magnitude_error() > tol:
            raise ValueError("analog precoder entries are not unit modulus")
        if self.grid_error() > tol:
            raise ValueError("analog precoder phases are off the quantizer grids")
        return self

    def to_json_dict(self) -> dict:
        return {
            "matrix_re": self.matrix.real.tolist(),
            "matrix_im": self.matrix.imag.tolist(),
            "pattern": self.pattern.to_text(),
            "bits_high": self.quantizers[0].bits,
            "bits_low": self.quantizers[1].bits,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, data: dict) -> "AnalogPrecoder":
        matrix = np.array(data["matrix_re"]) + 1j * np.array(data["matrix_im"])
        return cls(
            matrix=matrix,
            pattern=PatternAssignment.from_text(data["pattern"]),
            quantizers=(QuantizerSpec(data["bits_high"]), QuantizerSpec(data["bits_low"])),
        )


@dataclass
class DigitalPrecoder:
    """Baseband precoder, normalized so the hybrid product carries N_s power."""

    matrix: np.ndarray

    @property
    def n_streams(self) -> int:
        return self.matrix.shape[1]


def optimal_fully_digital(channel, n_s: int) -> tuple[np.ndarray, np.ndarray]:
    """Top singular-vector precoder/combiner pair of the channel.

    Returns ``(f_opt, w_opt)``: the n_s dominant right and left singular
    vectors, both with orthonormal columns.
    """
    h = as_matrix(channel)
    if n_s > min(h.shape):
        raise ValueError(f"n_s={n_s} exceeds the channel rank bound {min(h.shape)}")
    u, _, vh = np.linalg.svd(h, full_matrices=False)
    return vh.conj().T[:, :n_s], u[:, :n_s]


def analog_objective(h_hat: np.ndarray, f_rf: np.ndarray) -> float:
    """High-SNR design objective log2 |h_hat F F^H h_hat^H|."""
    a = np.asarray(h_hat) @ np.asarray(f_rf)
    sign, logdet = np.linalg.slogdet(a @ a.conj().T)
    if sign == 0:
        return float("-inf")
    return float(logdet / LN2)


def compute_column_state(
    h_hat: np.ndarray, f_rf: np.ndarray, j: int, xi: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-column quadratic state for the greedy phase updates.

    ``c = h_hat F_bar F_bar^H h_hat^H`` over the other columns and
    ``g = h_hat^H (xi I + c)^{-1} h_hat``, returned explicitly Hermitian.
    """
    h_hat = np.asarray(h_hat, dtype=complex)
    f_rf = np.asarray(f_rf, dtype=complex)
    if not 0 <= j < f_rf.shape[1]:
        raise ValueError(f"column index {j} out of range")
    if xi <= 0:
        raise ValueError("regularizer must be positive")
    others = np.delete(f_rf, j, axis=1)
    hf = h_hat @ others
    c = hf @ hf.conj().T
    c = 0.5 * (c + c.conj().T)
    n_s = h_hat.shape[0]
    g = h_hat.conj().T @ np.linalg.solve(xi * np.eye(n_s) + c, h_hat)
    g = 0.5 * (g + g.conj().T)
    return c, g


def _column_state_scaled(
    h_hat: np.ndarray, f_rf: np.ndarray, j: int, xi_rel: float
) -> np.ndarray:
    """Column state with the regularizer scaled to trace(c)/n_s."""
    others = np.delete(f_rf, j, axis=1)
    hf = h_hat @ others
    c = hf @ hf.conj().T
    n_s = h_hat.shape[0]
    xi = xi_rel * float(np.trace(c).real) / n_s + XI_FLOOR
    g = h_hat.conj().T @ np.linalg.solve(xi * np.eye(n_s) + c, h_hat)
    return 0.5 * (g + g.conj().T)


def phi_max(g: np.ndarray, f_col: np.ndarray, i: int) -> float:
    """Phase of entry ``i`` maximizing the column quadratic form.

    The optimum aligns the entry with the cross-term
    ``sum_{m != i} f[m] * g[i, m]``; a zero cross-term leaves the objective
    flat, in which case the entry's current phase is kept.
    """
    s = g[i, :] @ f_col - g[i, i] * f_col[i]
    if s == 0:
        return float(np.angle(f_col[i]))
    return float(np.angle(s))


def _phi_max_rows(g: np.ndarray, f_col: np.ndarray, rows: np.ndarray) -> np.ndarray:
    """Vectorized :func:`phi_max` over several rows of one column."""
    s = g[rows, :] @ f_col - np.diag(g)[rows] * f_col[rows]
    out = np.angle(s)
    flat = s == 0
    if np.any(flat):
        out = np.where(flat, np.angle(f_col[rows]), out)
    return out


def _canonical_column(col: np.ndarray) -> np.ndarray:
    """Rotate a vector so its largest-magnitude entry is real positive.

    Singular vectors are only defined up to a unit phase; pinning it makes
    the design a deterministic function of the target matrix alone.
    """
    k = int(np.argmax(np.abs(col)))
    ref = col[k]
    if ref == 0:
        return col.copy()
    return col * np.exp(-1j * np.angle(ref))


def initial_analog_matrix(h_hat: np.ndarray, n_k: int) -> np.ndarray:
    """Start matrix: dominant right singular vectors of the target, cycled
    across columns and phase-canonicalized."""
    h_hat = np.asarray(h_hat, dtype=complex)
    n_s = h_hat.shape[0]
    _, _, vh = np.linalg.svd(h_hat, full_matrices=False)
    v = vh.conj().T
    cols = [_canonical_column(v[:, j % n_s]) for j in range(n_k)]
    return np.stack(cols, axis=1)


def _greedy_column_pass(
    f_rf: np.ndarray,
    g: np.ndarray,
    j: int,
    candidates: np.ndarray,
    count: int,
    quantizer: QuantizerSpec,
    scale: float,
    refresh_phases_first: bool,
) -> list[int]:
    """Quantize ``count`` of the candidate entries of column ``j`` in place.

    Each round commits the candidate whose pending phase has the smallest
    circular quantization error, then refreshes the remaining candidates'
    objective-maximizing phases from the updated column.  Returns the rows
    quantized, in commitment order.
    """
    remaining = list(int(r) for r in candidates)
    phases = np.angle(f_rf[:, j]).copy()
    if refresh_phases_first and remaining:
        rows = np.array(remaining)
        phases[rows] = _phi_max_rows(g, f_rf[:, j], rows)
    chosen: list[int] = []
    for _ in range(count):
        rows = np.array(remaining)
        errs = quantization_error(phases[rows], quantizer)
        pick = int(rows[np.argmin(errs)])  # lowest row index wins ties
        level = int(nearest_level_index(phases[pick], quantizer)) * quantizer.step
        f_rf[pick, j] = scale * np.exp(1j * level)
        remaining.remove(pick)
        chosen.append(pick)
        if remaining:
            rows = np.array(remaining)
            phases[rows] = _phi_max_rows(g, f_rf[:, j], rows)
    return chosen


def _check_target(h_hat: np.ndarray, n_bs: int, n_k: int) -> np.ndarray:
    h_hat = np.asarray(h_hat, dtype=complex)
    if h_hat.ndim != 2 or h_hat.shape[1] != n_bs:
        raise ValueError(f"design target must be (n_s, {n_bs}), got {h_hat.shape}")
    if h_hat.shape[0] > n_k:
        raise ValueError(
            f"stream count {h_hat.shape[0]} exceeds RF-chain count {n_k}"
        )
    return h_hat


def design_analog_dynamic(
    h_hat: np.ndarray,
    n_bs: int,
    n_k: int,
    high: QuantizerSpec,
    low: QuantizerSpec,
    xi_rel: float = 1e-6,
    *,
    low_fraction: float = 0.5,
    initial: np.ndarray | None = None,
) -> AnalogPrecoder:
    """Jointly pick the per-column low-resolution set and all entry phases.

    Two passes per the greedy scheme: the low pass selects
    ``n_bs * low_fraction`` entries per column (the ones quantizing most
    cheaply) and commits them on the low grid; the high pass then fills the
    complement on the high grid.  Column states are derived once per column
    per pass from the current matrix.
    """
    h_hat = _check_target(h_hat, n_bs, n_k)
    n_low = round(n_bs * low_fraction)
    if abs(n_bs * low_fraction - n_low) > 1e-9 or not 0 <= n_low <= n_bs:
        raise ValueError(
            f"low_fraction={low_fraction} does not split {n_bs} antennas evenly"
        )
    f_rf = initial_analog_matrix(h_hat, n_k) if initial is None else np.array(initial, dtype=complex)
    scale = 1.0 / np.sqrt(n_bs)
    all_rows = np.arange(n_bs)
    high_mask = np.ones((n_bs, n_k), dtype=bool)
    for j in range(n_k):
        g = _column_state_scaled(h_hat, f_rf, j, xi_rel)
        low_rows = _greedy_column_pass(
            f_rf, g, j, all_rows, n_low, low, scale, refresh_phases_first=False
        )
        high_mask[low_rows, j] = False
    for j in range(n_k):
        g = _column_state_scaled(h_hat, f_rf, j, xi_rel)
        rows = np.flatnonzero(high_mask[:, j])
        _greedy_column_pass(
            f_rf, g, j, rows, len(rows), high, scale, refresh_phases_first=True
        )
    return AnalogPrecoder(f_rf, PatternAssignment(high_mask), (high, low))


def design_analog_fixed(
    h_hat: np.ndarray,
    pattern: PatternAssignment,
    high: QuantizerSpec,
    low: QuantizerSpec,
    xi_rel: float = 1e-6,
    *,
    initial: np.ndarray | None = None,
) -> AnalogPrecoder:
    """Same greedy phase design with entry eligibility pinned by ``pattern``."""
    n_bs, n_k = pattern.high_mask.shape
    h_hat = _check_target(h_hat, n_bs, n_k)
    f_rf = initial_analog_matrix(h_hat, n_k) if initial is None else np.array(initial, dtype=complex)
    if f_rf.shape != (n_bs, n_k):
        raise ValueError(
            f"pattern {pattern.high_mask.shape} does not match matrix {f_rf.shape}"
        )
    scale = 1.0 / np.sqrt(n_bs)
    for j in range(n_k):
        rows = np.flatnonzero(~pattern.high_mask[:, j])
        if len(rows) == 0:
            continue
        g = _column_state_scaled(h_hat, f_rf, j, xi_rel)
        _greedy_column_pass(
            f_rf, g, j, rows, len(rows), low, scale, refresh_phases_first=False
        )
    for j in range(n_k):
        rows = np.flatnonzero(pattern.high_mask[:, j])
        if len(rows) == 0:
            continue
        g = _column_state_scaled(h_hat, f_rf, j, xi_rel)
        _greedy_column_pass(
            f_rf, g, j, rows, len(rows), high, scale, refresh_phases_first=True
        )
    return AnalogPrecoder(f_rf, pattern, (high, low))


def design_analog_uniform(
    h_hat: np.ndarray,
    n_bs: int,
    n_k: int,
    spec: QuantizerSpec,
    xi_rel: float = 1e-6,
) -> AnalogPrecoder:
    """Single-resolution baseline: the twin greedy with both grids equal."""
    return design_analog_dynamic(h_hat, n_bs, n_k, spec, spec, xi_rel)


def design_digital(channel, w: np.ndarray, f_rf: np.ndarray, n_s: int) -> DigitalPrecoder:
    """SVD baseband precoder of the effective channel, power-normalized.

    ``f_bb = sqrt(n_s / ||F_RF V_eff||_F^2) V_eff`` over the ``n_s`` dominant
    right singular vectors of ``w^H H F_RF``, so ``||F_RF f_bb||_F^2 == n_s``.
    """
    h = as_matrix(channel)
    h_eff = w.conj().T @ h @ f_rf
    if not np.any(h_eff):
        raise ValueError("effective channel is zero; digital normalization undefined")
    _, _, vh = np.linalg.svd(h_eff, full_matrices=False)
    v = vh.conj().T[:, :n_s]
    denom = np.linalg.norm(f_rf @ v)
    if denom == 0:
        raise ValueError("analog precoder nulls the effective directions")
    return DigitalPrecoder(np.sqrt(n_s) / denom * v)
