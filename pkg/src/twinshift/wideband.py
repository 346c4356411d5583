"""Wideband OFDM extension: one frequency-flat analog precoder designed
against the subcarrier-averaged covariance (a concavity upper bound on the
average rate), with per-subcarrier digital precoders on top."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import WidebandChannel
from .design import (
    AnalogPrecoder,
    DigitalPrecoder,
    design_analog_dynamic,
    design_digital,
    optimal_fully_digital,
)
from .metrics import bandwidth_efficiency
from .shifters import QuantizerSpec

LN2 = np.log(2.0)


def average_covariance(targets: list[np.ndarray]) -> np.ndarray:
    """Subcarrier-averaged transmit-side covariance (Hermitian PSD)."""
    if not targets:
        raise ValueError("need at least one per-subcarrier target")
    targets = [np.asarray(t, dtype=complex) for t in targets]
    if len({t.shape for t in targets}) != 1:
        raise ValueError("per-subcarrier targets disagree on shape")
    acc = sum(t.conj().T @ t for t in targets) / len(targets)
    return 0.5 * (acc + acc.conj().T)


def covariance_sqrt_factor(r_wb: np.ndarray, rank: int | None = None) -> np.ndarray:
    """Eigen square root ``f`` with ``f f^H`` reconstructing the covariance.

    Negative eigenvalues (numerical noise) are clamped to zero; ``rank``
    truncates to the dominant directions.
    """
    lam, q = np.linalg.eigh(np.asarray(r_wb, dtype=complex))
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    q = q[:, order]
    if rank is not None:
        lam = lam[:rank]
        q = q[:, :rank]
    return q * np.sqrt(lam)[None, :]


@dataclass
class WidebandDesignInput:
    """Per-subcarrier design targets plus their averaged covariance factor."""

    per_subcarrier_targets: list[np.ndarray]
    average_cov: np.ndarray
    sqrt_factor: np.ndarray

    @classmethod
    def from_targets(cls, targets: list[np.ndarray]) -> "WidebandDesignInput":
        r_wb = average_covariance(targets)
        return cls(
            per_subcarrier_targets=[np.asarray(t, dtype=complex) for t in targets],
            average_cov=r_wb,
            sqrt_factor=covariance_sqrt_factor(r_wb),
        )

    @property
    def subcarrier_count(self) -> int:
        return len(self.per_subcarrier_targets)


def targets_from_channel(channel: WidebandChannel, n_s: int) -> list[np.ndarray]:
    """Combiner-compressed targets, one per subcarrier, each using that
    subcarrier's own optimal combiner."""
    targets = []
    for h_p in channel.per_subcarrier:
        _, w_p = optimal_fully_digital(h_p, n_s)
        targets.append(w_p.conj().T @ h_p)
    return targets


def jensen_bound(
    wb: WidebandDesignInput, f_rf: np.ndarray, rho: float, sigma2: float, n_s: int
) -> float:
    """Upper bound on the analog-only average rate via the averaged covariance."""
    f_rf = np.asarray(f_rf, dtype=complex)
    c = rho / (n_s * sigma2)
    a = np.eye(f_rf.shape[1]) + c * f_rf.conj().T @ wb.average_cov @ f_rf
    _, logdet = np.linalg.slogdet(a)
    return float(logdet / LN2)


def analog_average_rate(
    wb: WidebandDesignInput, f_rf: np.ndarray, rho: float, sigma2: float, n_s: int
) -> float:
    """Subcarrier-averaged analog-only rate (the quantity the bound caps)."""
    f_rf = np.asarray(f_rf, dtype=complex)
    c = rho / (n_s * sigma2)
    total = 0.0
    for t in wb.per_subcarrier_targets:
        a = np.eye(t.shape[0]) + c * (t @ f_rf) @ (t @ f_rf).conj().T
        _, logdet = np.linalg.slogdet(a)
        total += float(logdet / LN2)
    return total / wb.subcarrier_count


@dataclass
class WidebandDesign:
    """Frequency-flat analog precoder with per-subcarrier digital precoders."""

    analog: AnalogPrecoder
    per_subcarrier_digital: list[DigitalPrecoder]
    average_rate: float


def hybrid_average_rate(
    wb: WidebandDesignInput,
    f_rf: np.ndarray,
    digitals: list[DigitalPrecoder],
    rho: float,
    sigma2: float,
) -> float:
    """Subcarrier-averaged hybrid rate with each subcarrier's own baseband."""
    n_s = digitals[0].matrix.shape[1]
    eye = np.eye(n_s)
    total = 0.0
    for t, d in zip(wb.per_subcarrier_targets, digitals):
        total += bandwidth_efficiency(t, f_rf, d.matrix, eye, rho, sigma2)
    return total / wb.subcarrier_count


def design_wideband(
    wb: WidebandDesignInput,
    n_k: int,
    high: QuantizerSpec,
    low: QuantizerSpec,
    xi_rel: float = 1e-6,
    rho: float = 1.0,
    sigma2: float = 1.0,
    n_s: int | None = None,
    *,
    target_rank: int | None = None,
) -> WidebandDesign:
    """Design the flat analog precoder against the averaged covariance.

    The design target is the conjugate-transposed covariance square root,
    truncated to ``target_rank`` dominant directions (default ``n_s``) so it
    matches the narrowband target shape; each subcarrier then gets its own
    normalized SVD baseband precoder, and the reported rate is the
    subcarrier average.
    """
    if n_s is None:
        n_s = wb.per_subcarrier_targets[0].shape[0]
    n_bs = wb.average_cov.shape[0]
    rank = n_s if target_rank is None else target_rank
    design_target = covariance_sqrt_factor(wb.average_cov, rank=rank).conj().T
    analog = design_analog_dynamic(design_target, n_bs, n_k, high, low, xi_rel)
    eye = np.eye(n_s)
    digitals = [
        design_digital(t, eye, analog.matrix, n_s) for t in wb.per_subcarrier_targets
    ]
    avg = hybrid_average_rate(wb, analog.matrix, digitals, rho, sigma2)
    return WidebandDesign(analog=analog, per_subcarrier_digital=digitals, average_rate=avg)
