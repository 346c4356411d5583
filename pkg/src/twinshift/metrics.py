"""Bandwidth-efficiency and energy-efficiency evaluation.

Rates are determinant log-forms under Gaussian signaling; multi-user rates
always charge the full interference-plus-noise covariance so imperfectly
quantized precoders are penalized honestly.  Energy efficiency divides the
rate by an affine power budget counting shifters, switches, RF chains and
baseband processing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import as_matrix
from .shifters import TWIN_KINDS, NetworkKind

LN2 = np.log(2.0)


@dataclass(frozen=True)
class PowerModel:
    """Component power draws in watts, plus transmit and noise power.

    Defaults are the reference hardware figures: 15 mW high-resolution and
    10 mW 1-bit shifters, 14 mW moderate, 1 mW per active switch, 250 mW
    baseband, 300 mW per RF chain.
    """

    p_h: float = 0.015
    p_m: float = 0.014
    p_l: float = 0.010
    p_sw: float = 0.001
    p_bb: float = 0.250
    p_rf: float = 0.300
    rho: float = 1.0
    sigma2: float = 1.0

    def __post_init__(self) -> None:
        for name in ("p_h", "p_m", "p_l", "p_sw", "p_bb", "p_rf", "rho", "sigma2"):
            if getattr(self, name) < 0:
                raise ValueError(f"power model field {name} must be nonnegative")


def _logdet2(a: np.ndarray) -> float:
    """log2 |a| via slogdet; the determinants here are real positive."""
    _, logdet = np.linalg.slogdet(a)
    return float(logdet / LN2)


def bandwidth_efficiency(
    channel,
    f_rf: np.ndarray,
    f_bb: np.ndarray,
    w: np.ndarray,
    rho: float,
    sigma2: float,
) -> float:
    """Achievable rate in bits/s/Hz of the combined hybrid link.

    Evaluates ``log2 |I + rho/(N_s sigma2) R^{-1} (W^H H F)(W^H H F)^H|``
    with ``R = W^H W`` and ``F = F_RF F_BB``; requires a full-column-rank
    combiner.  For a fully digital precoder pass ``f_bb`` as the identity.
    """
    h = as_matrix(channel)
    w = np.asarray(w, dtype=complex)
    n_s = f_bb.shape[1]
    r_noise = w.conj().T @ w
    if np.linalg.matrix_rank(r_noise) < w.shape[1]:
        raise ValueError("combiner must have full column rank")
    a = w.conj().T @ h @ f_rf @ f_bb
    m = np.eye(n_s) + rho / (n_s * sigma2) * np.linalg.solve(r_noise, a) @ a.conj().T
    return _logdet2(m)


def mu_sum_rate(scene, precoders, rho: float, sigma2: float) -> float:
    """Sum rate over users with the true interference-plus-noise covariance."""
    f_rf = precoders.analog.matrix
    n_s = scene.n_s
    total = 0.0
    for u, channel in enumerate(scene.channels):
        h = as_matrix(channel)
        w = precoders.per_user_combiner[u]
        m_s = w.shape[1]
        own = w.conj().T @ h @ f_rf @ precoders.per_user_digital[u]
        cov = sigma2 * (w.conj().T @ w)
        for i, f_bb_i in enumerate(precoders.per_user_digital):
            if i == u:
                continue
            cross = w.conj().T @ h @ f_rf @ f_bb_i
            cov = cov + rho / n_s * (cross @ cross.conj().T)
        m = np.eye(m_s) + rho / n_s * np.linalg.solve(cov, own) @ own.conj().T
        total += _logdet2(m)
    return total


def power_denominator(
    model: PowerModel,
    arch: NetworkKind,
    n_bs: int,
    n_s: int,
    users: int = 1,
    m_s: int | None = None,
) -> float:
    """Total consumed power in watts for the given network architecture.

    Multi-user systems substitute ``users * m_s`` for the stream count; the
    twin networks split the shifter budget between the two resolutions and
    add one active switch per antenna/stream pair.
    """
    streams = users * m_s if m_s is not None else n_s
    base = model.rho + model.p_bb + streams * model.p_rf
    if arch in TWIN_KINDS:
        shifters = n_bs * streams / 2 * (model.p_h + model.p_l)
        switches = n_bs * streams * model.p_sw
        return base + shifters + switches
    per_shifter = {
        NetworkKind.UNIFORM_HIGH: model.p_h,
        NetworkKind.UNIFORM_MODERATE: model.p_m,
        NetworkKind.UNIFORM_LOW: model.p_l,
    }
    if arch not in per_shifter:
        raise ValueError(f"no power model for architecture {arch}")
    return base + n_bs * streams * per_shifter[arch]


def energy_efficiency(
    rate: float,
    model: PowerModel,
    arch: NetworkKind,
    n_bs: int,
    n_s: int,
    users: int = 1,
    m_s: int | None = None,
) -> float:
    """Rate divided by total consumed power, in bits/Hz/J."""
    if rate < 0:
        raise ValueError("rate must be nonnegative")
    return rate / power_denominator(model, arch, n_bs, n_s, users, m_s)
