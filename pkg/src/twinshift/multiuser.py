"""Multi-user downlink: block-diagonalization baseband over a shared analog
precoder, with the sum rate split into an interference-free part plus the
erosion caused by residual inter-user coupling."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization
from .design import (
    AnalogPrecoder,
    as_matrix,
    design_analog_dynamic,
    optimal_fully_digital,
)
from .shifters import PatternAssignment, QuantizerSpec

LN2 = np.log(2.0)


class InfeasibleBDError(ValueError):
    """Raised when an interference stack is rank deficient, so no null-space
    directions can carry the blocked user's streams."""


@dataclass
class MultiUserScene:
    """Per-user channels plus the stream split."""

    channels: list
    per_user_streams: int

    def __post_init__(self) -> None:
        if not self.channels:
            raise ValueError("scene needs at least one user channel")
        shapes = {as_matrix(ch).shape for ch in self.channels}
        if len(shapes) != 1:
            raise ValueError(f"user channels disagree on dimensions: {shapes}")
        if self.per_user_streams < 1:
            raise ValueError("per-user stream count must be >= 1")

    @property
    def users(self) -> int:
        return len(self.channels)

    @property
    def n_s(self) -> int:
        return self.users * self.per_user_streams

    @property
    def n_bs(self) -> int:
        return as_matrix(self.channels[0]).shape[1]

    def to_json_dict(self) -> dict:
        return {
            "per_user_streams": self.per_user_streams,
            "channels": [ch.to_json_dict() for ch in self.channels],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "MultiUserScene":
        channels = [ChannelRealization.from_json_dict(c) for c in data["channels"]]
        return cls(channels=channels, per_user_streams=data["per_user_streams"])


@dataclass
class MuPrecoderSet:
    """Shared analog precoder plus per-user digital precoders and combiners."""

    analog: AnalogPrecoder
    per_user_digital: list[np.ndarray]
    per_user_combiner: list[np.ndarray]

    def to_json_dict(self) -> dict:
        return {
            "analog": self.analog.to_json_dict(),
            "per_user_digital": [
                {"re": m.real.tolist(), "im": m.imag.tolist()} for m in self.per_user_digital
            ],
            "per_user_combiner": [
                {"re": m.real.tolist(), "im": m.imag.tolist()} for m in self.per_user_combiner
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, data: dict) -> "MuPrecoderSet":
        def mat(d):
            return np.array(d["re"]) + 1j * np.array(d["im"])

        return cls(
            analog=AnalogPrecoder.from_json_dict(data["analog"]),
            per_user_digital=[mat(d) for d in data["per_user_digital"]],
            per_user_combiner=[mat(d) for d in data["per_user_combiner"]],
        )


def per_user_combiner(channel, m_s: int) -> np.ndarray:
    """Top left singular vectors of one user's channel (orthonormal columns)."""
    _, w = optimal_fully_digital(channel, m_s)
    return w


def _null_basis(eff_channels: list[np.ndarray], u: int) -> tuple[np.ndarray, np.ndarray]:
    """Interference null-space basis for user ``u``.

    Returns ``(v_bar, basis)``: the full right singular matrix of the stacked
    interferer effective channels and its trailing ``m_s`` columns (the
    directions user ``u`` may transmit in).  A single-user scene has no
    interferers; the basis is then the whole space.
    """
    m_s = eff_channels[u].shape[0]
    n_rf = eff_channels[u].shape[1]
    others = [eff_channels[i] for i in range(len(eff_channels)) if i != u]
    if not others:
        identity = np.eye(n_rf, dtype=complex)
        return identity, identity
    stacked = np.vstack(others)
    _, s, vh = np.linalg.svd(stacked, full_matrices=True)
    v_bar = vh.conj().T
    required = stacked.shape[0]
    tol = max(stacked.shape) * np.finfo(float).eps * (s[0] if s.size else 0.0)
    if int(np.sum(s > tol)) < required:
        raise InfeasibleBDError(
            f"interference stack for user {u} is rank deficient "
            f"({int(np.sum(s > tol))} < {required}); cannot block-diagonalize"
        )
    return v_bar, v_bar[:, -m_s:]


def block_diag_baseband(eff_channels: list[np.ndarray]) -> list[np.ndarray]:
    """Null-space baseband precoders, one per user, before power scaling.

    Each user's precoder lives in the null space of every other user's
    effective channel (the trailing right singular directions of the
    interferer stack), rotated onto the user's own dominant directions.
    """
    eff_channels = [np.asarray(h, dtype=complex) for h in eff_channels]
    users = len(eff_channels)
    m_s, n_rf = eff_channels[0].shape
    if n_rf < users * m_s:
        raise InfeasibleBDError(
            f"{n_rf} RF chains cannot block-diagonalize {users} users x {m_s} streams"
        )
    out = []
    for u in range(users):
        _, basis = _null_basis(eff_channels, u)
        _, _, vh = np.linalg.svd(eff_channels[u] @ basis, full_matrices=False)
        v_tilde = vh.conj().T
        out.append(basis @ v_tilde[:, :m_s])
    return out


def design_mu(
    scene: MultiUserScene,
    high: QuantizerSpec,
    low: QuantizerSpec,
    xi_rel: float = 1e-6,
    rho: float = 1.0,
    sigma2: float = 1.0,
) -> MuPrecoderSet:
    """Full multi-user design: per-user analog submatrices, then BD baseband.

    The analog matrix carries ``users * per_user_streams`` RF chains; user
    ``u``'s submatrix is designed against its own combiner-compressed target,
    making the joint problem a set of independent point-to-point designs.
    ``rho``/``sigma2`` are accepted for interface stability; the analog
    design maximizes a high-SNR objective independent of them.
    """
    del rho, sigma2
    m_s = scene.per_user_streams
    n_bs = scene.n_bs
    combiners = [per_user_combiner(ch, m_s) for ch in scene.channels]
    sub_matrices = []
    sub_masks = []
    for u, channel in enumerate(scene.channels):
        h_hat_u = combiners[u].conj().T @ as_matrix(channel)
        sub = design_analog_dynamic(h_hat_u, n_bs, m_s, high, low, xi_rel)
        sub_matrices.append(sub.matrix)
        sub_masks.append(sub.pattern.high_mask)
    f_rf = np.hstack(sub_matrices)
    pattern = PatternAssignment(np.hstack(sub_masks))
    analog = AnalogPrecoder(f_rf, pattern, (high, low))

    eff = [combiners[u].conj().T @ as_matrix(ch) @ f_rf for u, ch in enumerate(scene.channels)]
    tilde = block_diag_baseband(eff)
    n_s = scene.n_s
    digitals = [np.sqrt(n_s) / np.linalg.norm(f_rf @ ft) * ft for ft in tilde]
    return MuPrecoderSet(analog, digitals, combiners)


def rate_decomposition(
    scene: MultiUserScene,
    precoders: MuPrecoderSet,
    rho: float,
    sigma2: float,
    *,
    scalar_variant: str = "streams",
) -> tuple[float, float, float]:
    """Split the BD design objective into ideal and interference-loss parts.

    Returns ``(r_ideal, r_loss, direct_of)`` where ``r_ideal`` is the sum
    rate with all inter-user coupling projected away, ``r_loss`` the
    (negative) erosion term, and ``direct_of`` the objective evaluated in one
    piece; ``r_ideal + r_loss == direct_of`` holds algebraically for any
    precoder set.  ``scalar_variant`` picks the SNR scaling
    ``rho * gamma_u / (N_s sigma2)`` (``"streams"``, the consistent choice)
    or ``rho * gamma_u / sigma2`` (``"plain"``).
    """
    if scalar_variant not in ("streams", "plain"):
        raise ValueError(f"unknown scalar_variant {scalar_variant!r}")
    f_rf = precoders.analog.matrix
    n_s = scene.n_s
    m_s = scene.per_user_streams
    r_ideal = 0.0
    r_loss = 0.0
    direct = 0.0
    eff = [
        precoders.per_user_combiner[u].conj().T @ as_matrix(ch) @ f_rf
        for u, ch in enumerate(scene.channels)
    ]
    for u in range(scene.users):
        v_bar, basis = _null_basis(eff, u)
        _, _, vh = np.linalg.svd(eff[u] @ basis, full_matrices=False)
        f_tilde = basis @ vh.conj().T[:, :m_s]
        gamma = n_s / np.linalg.norm(f_rf @ f_tilde) ** 2
        c = rho * gamma / (n_s * sigma2) if scalar_variant == "streams" else rho * gamma / sigma2
        h_eff = eff[u]
        if scene.users > 1:
            kept = v_bar[:, : (scene.users - 1) * m_s]
            proj_intf = kept @ kept.conj().T
        else:
            proj_intf = np.zeros((f_rf.shape[1], f_rf.shape[1]), dtype=complex)
        gram = h_eff @ h_eff.conj().T
        t_u = np.eye(m_s) + c * gram
        loss_arg = np.eye(m_s) - np.linalg.solve(
            t_u, c * h_eff @ proj_intf @ h_eff.conj().T
        )
        full_proj = v_bar @ v_bar.conj().T - proj_intf
        direct_arg = np.eye(m_s) + c * h_eff @ full_proj @ h_eff.conj().T
        r_ideal += _logdet2(t_u)
        r_loss += _logdet2(loss_arg)
        direct += _logdet2(direct_arg)
    return r_ideal, r_loss, direct


def _logdet2(a: np.ndarray) -> float:
    _, logdet = np.linalg.slogdet(a)
    return float(logdet / LN2)
