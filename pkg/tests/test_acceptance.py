"""Acceptance suite: desk-scale property and ordering checks.

Each test prints one PASS line with its measured evidence; run with
``pytest tests/test_acceptance.py -v -s`` to see them inline.
"""

import itertools
import time
from fractions import Fraction

import numpy as np
import pytest

from twinshift.channel import ArrayGeometry, sample_channel, sample_wideband_channel
from twinshift.design import (
    analog_objective,
    design_analog_dynamic,
    design_analog_fixed,
    design_analog_uniform,
    design_digital,
    optimal_fully_digital,
)
from twinshift.experiments import bootstrap_ci, trial_rng
from twinshift.gap import direct_rate, gap_trace
from twinshift.metrics import PowerModel, bandwidth_efficiency, power_denominator
from twinshift.multiuser import (
    MuPrecoderSet,
    MultiUserScene,
    block_diag_baseband,
    design_mu,
    per_user_combiner,
    rate_decomposition,
)
from twinshift.design import AnalogPrecoder
from twinshift.shifters import (
    NetworkKind,
    PatternAssignment,
    QuantizerSpec,
    build_fixed_pattern,
)
from twinshift.wideband import (
    WidebandDesignInput,
    analog_average_rate,
    design_wideband,
    jensen_bound,
    targets_from_channel,
)
from tests.test_design import collect_decomposition_residuals

# desk-scale dimensions shared by the Monte-Carlo criteria
N_BS, N_MS, N_RF, N_S, PATHS = 16, 8, 4, 4, 4
B_H, B_L, B_M = QuantizerSpec(3), QuantizerSpec(1), QuantizerSpec(2)
TX, RX = ArrayGeometry.square(N_BS), ArrayGeometry.square(N_MS)

# frozen from the pre-registered exhaustive oracle run (seed 20260810,
# 50 instances): observed mean optimality ratio 0.996235, floor = minus 0.05
GREEDY_RATIO_FLOOR = 0.946235


def desk_instance(trial, seed=31_337):
    rng = trial_rng(seed, trial)
    ch = sample_channel(TX, RX, PATHS, rng)
    f_opt, w_opt = optimal_fully_digital(ch, N_S)
    return rng, ch, f_opt, w_opt, w_opt.conj().T @ ch.matrix


def test_gap_identity_200_trials():
    """Closed-form replacement steps sum to the direct rate gap, every trial."""
    rho, sigma2 = 1.0, 1.0  # SNR 0 dB
    t0 = time.perf_counter()
    worst = 0.0
    for trial in range(200):
        _, ch, f_opt, w_opt, h_hat = desk_instance(trial)
        analog = design_analog_dynamic(h_hat, N_BS, N_RF, B_H, B_L)
        f_bb = design_digital(ch, w_opt, analog.matrix, N_S).matrix
        f_hybrid = analog.matrix @ f_bb
        trace = gap_trace(ch, w_opt, f_opt, f_hybrid, rho, sigma2)
        direct = direct_rate(ch, w_opt, f_opt, rho, sigma2) - direct_rate(
            ch, w_opt, f_hybrid, rho, sigma2
        )
        err = abs(trace.total - direct)
        worst = max(worst, err)
        assert err <= 1e-8, f"trial {trial}: gap identity error {err:.3e}"
    elapsed = time.perf_counter() - t0
    assert elapsed < 60.0, f"gap identity run took {elapsed:.1f}s"
    print(f"\nPASS gap identity: 200/200 trials, worst |error| {worst:.3e}, {elapsed:.1f}s")


def test_architecture_ordering_200_trials():
    """Mean-rate ordering across architectures with paired bootstrap CIs."""
    rho, sigma2 = 10.0, 1.0  # SNR 10 dB
    labels = ["FullDigital", "UniformHigh", "Dynamic-Twin", "UniformModerate",
              "UniformLow", "Fixed-Horizontal", "Fixed-Vertical",
              "Fixed-Interlaced", "Fixed-Random"]
    rates = {k: [] for k in labels}
    for trial in range(200):
        rng, ch, f_opt, w_opt, h_hat = desk_instance(trial, seed=808)

        def hybrid_rate(f_rf):
            f_bb = design_digital(ch, w_opt, f_rf, N_S).matrix
            return bandwidth_efficiency(ch, f_rf, f_bb, w_opt, rho, sigma2)

        rates["FullDigital"].append(
            bandwidth_efficiency(ch, f_opt, np.eye(N_S), w_opt, rho, sigma2)
        )
        rates["Dynamic-Twin"].append(
            hybrid_rate(design_analog_dynamic(h_hat, N_BS, N_RF, B_H, B_L).matrix)
        )
        for label, spec in [("UniformHigh", B_H), ("UniformModerate", B_M),
                            ("UniformLow", B_L)]:
            rates[label].append(
                hybrid_rate(design_analog_uniform(h_hat, N_BS, N_RF, spec).matrix)
            )
        for label, kind in [
            ("Fixed-Horizontal", NetworkKind.HORIZONTAL),
            ("Fixed-Vertical", NetworkKind.VERTICAL),
            ("Fixed-Interlaced", NetworkKind.INTERLACED),
            ("Fixed-Random", NetworkKind.RANDOM_FIXED),
        ]:
            pattern = build_fixed_pattern(kind, N_BS, N_RF, rng)
            rates[label].append(
                hybrid_rate(design_analog_fixed(h_hat, pattern, B_H, B_L).matrix)
            )

    means = {k: float(np.mean(v)) for k, v in rates.items()}
    boot = np.random.default_rng(424242)

    def margin_ci_low(upper, lower):
        diff = np.array(rates[upper]) - np.array(rates[lower])
        lo, _ = bootstrap_ci(diff, boot)
        return lo

    chain = [
        ("FullDigital", "UniformHigh"),
        ("UniformHigh", "Dynamic-Twin"),
        ("Dynamic-Twin", "UniformModerate"),
        ("Dynamic-Twin", "UniformLow"),
    ]
    for upper, lower in chain:
        lo = margin_ci_low(upper, lower)
        assert lo >= 0.0, f"{upper} vs {lower}: 95% CI lower bound {lo:.4f} < 0"
    for fixed in ["Fixed-Horizontal", "Fixed-Vertical", "Fixed-Interlaced", "Fixed-Random"]:
        assert means["Dynamic-Twin"] >= means[fixed], (
            f"dynamic mean {means['Dynamic-Twin']:.4f} below {fixed} {means[fixed]:.4f}"
        )
    ordered = " >= ".join(f"{k}:{means[k]:.3f}" for k in
                          ["FullDigital", "UniformHigh", "Dynamic-Twin",
                           "UniformModerate", "UniformLow"])
    print(f"\nPASS architecture ordering: {ordered}; dynamic beats all fixed patterns")


def test_greedy_vs_exhaustive_50_instances():
    """The greedy never exceeds the exhaustive optimum on tiny instances and
    stays above the pre-registered mean optimality-ratio floor."""
    n_bs = 4
    scale = 1 / np.sqrt(n_bs)
    tx_small, rx_small = ArrayGeometry.square(n_bs), ArrayGeometry.square(4)
    ratios = []
    for trial in range(50):
        rng = trial_rng(20_260_810, trial)
        ch = sample_channel(tx_small, rx_small, 2, rng)
        _, w = optimal_fully_digital(ch, 1)
        h_hat = w.conj().T @ ch.matrix
        best = -np.inf
        for low_rows in itertools.combinations(range(n_bs), 2):
            grids = [B_L.levels if i in low_rows else B_M.levels for i in range(n_bs)]
            for phases in itertools.product(*grids):
                f = scale * np.exp(1j * np.array(phases))[:, None]
                best = max(best, float(np.abs(h_hat @ f)[0, 0]) ** 2)
        pre = design_analog_dynamic(h_hat, n_bs, 1, B_M, B_L)
        got = float(np.abs(h_hat @ pre.matrix)[0, 0]) ** 2
        assert got <= best * (1 + 1e-12), f"trial {trial}: greedy beat the oracle"
        ratios.append(got / best)
    mean_ratio = float(np.mean(ratios))
    assert mean_ratio >= GREEDY_RATIO_FLOOR, (
        f"mean optimality ratio {mean_ratio:.6f} below floor {GREEDY_RATIO_FLOOR}"
    )
    print(
        f"\nPASS greedy vs exhaustive: 50/50 within optimum, mean ratio "
        f"{mean_ratio:.6f} (floor {GREEDY_RATIO_FLOOR}), min {min(ratios):.6f}"
    )


def test_bd_correctness_100_scenes():
    """Null-space leakage and the additive rate decomposition on random scenes."""
    users, m_s, n_rf = 2, 2, 8
    worst_leak, worst_identity = 0.0, 0.0
    for trial in range(100):
        rng = trial_rng(777, trial)
        channels = [sample_channel(TX, RX, PATHS, rng) for _ in range(users)]
        scene = MultiUserScene(channels, per_user_streams=m_s)
        levels = B_H.levels
        f_rf = np.exp(1j * levels[rng.integers(0, len(levels), (N_BS, n_rf))]) / np.sqrt(N_BS)
        combiners = [per_user_combiner(ch, m_s) for ch in channels]
        eff = [combiners[u].conj().T @ channels[u].matrix @ f_rf for u in range(users)]
        tilde = block_diag_baseband(eff)
        n_s = scene.n_s
        digitals = [np.sqrt(n_s) / np.linalg.norm(f_rf @ ft) * ft for ft in tilde]
        for u in range(users):
            for i in range(users):
                if i != u:
                    worst_leak = max(worst_leak, float(np.linalg.norm(eff[i] @ digitals[u])))
        precoders = MuPrecoderSet(
            analog=AnalogPrecoder(f_rf, PatternAssignment.uniform(N_BS, n_rf), (B_H, B_H)),
            per_user_digital=digitals,
            per_user_combiner=combiners,
        )
        r_ideal, r_loss, direct = rate_decomposition(scene, precoders, 10.0, 1.0)
        worst_identity = max(worst_identity, abs(r_ideal + r_loss - direct))
    assert worst_leak <= 1e-9, f"max leakage {worst_leak:.3e}"
    assert worst_identity <= 1e-8, f"max decomposition error {worst_identity:.3e}"
    print(
        f"\nPASS BD correctness: 100 scenes, max leakage {worst_leak:.3e}, "
        f"max identity error {worst_identity:.3e}"
    )


def test_structural_invariants_on_designed_precoders():
    """Unit modulus, grid membership, column balance and power constraint on
    a batch of dynamic, fixed, uniform, multi-user and wideband designs."""
    checked = 0
    worst_mag, worst_grid, worst_power = 0.0, 0.0, 0.0

    def check(analog, f_bb=None, column_balanced=True):
        nonlocal checked, worst_mag, worst_grid, worst_power
        worst_mag = max(worst_mag, analog.magnitude_error())
        worst_grid = max(worst_grid, analog.grid_error())
        assert analog.magnitude_error() <= 1e-12
        assert analog.grid_error() <= 1e-12
        if column_balanced:
            assert analog.pattern.is_column_balanced()
        if f_bb is not None:
            n_s = f_bb.shape[1]
            power = float(np.linalg.norm(analog.matrix @ f_bb) ** 2)
            worst_power = max(worst_power, abs(power - n_s))
            assert power == pytest.approx(n_s, abs=1e-9)
        checked += 1

    for trial in range(20):
        rng, ch, _, w_opt, h_hat = desk_instance(trial, seed=9090)
        analog = design_analog_dynamic(h_hat, N_BS, N_RF, B_H, B_L)
        check(analog, design_digital(ch, w_opt, analog.matrix, N_S).matrix)
        uniform = design_analog_uniform(h_hat, N_BS, N_RF, B_M)
        check(uniform, design_digital(ch, w_opt, uniform.matrix, N_S).matrix)
        pattern = build_fixed_pattern(NetworkKind.RANDOM_FIXED, N_BS, N_RF, rng)
        fixed = design_analog_fixed(h_hat, pattern, B_H, B_L)
        check(fixed, design_digital(ch, w_opt, fixed.matrix, N_S).matrix,
              column_balanced=False)

        scene = MultiUserScene(
            [sample_channel(TX, RX, PATHS, rng) for _ in range(2)], per_user_streams=2
        )
        mu = design_mu(scene, B_H, B_L)
        check(mu.analog)
        for f_bb in mu.per_user_digital:
            power = float(np.linalg.norm(mu.analog.matrix @ f_bb) ** 2)
            assert power == pytest.approx(scene.n_s, abs=1e-9)

        wb = WidebandDesignInput.from_targets(
            targets_from_channel(sample_wideband_channel(TX, RX, PATHS, 4, 2, rng), N_S)
        )
        wide = design_wideband(wb, N_RF, B_H, B_L, n_s=N_S)
        check(wide.analog, wide.per_subcarrier_digital[0].matrix)
    print(
        f"\nPASS structural invariants: {checked} precoders, worst magnitude "
        f"error {worst_mag:.2e}, grid error {worst_grid:.2e}, power error {worst_power:.2e}"
    )


def test_energy_efficiency_exact_arithmetic():
    """Twin and uniform-high power denominators match exact rational sums."""
    model = PowerModel(rho=1.0)
    twin = power_denominator(model, NetworkKind.DYNAMIC, 64, 4)
    high = power_denominator(model, NetworkKind.UNIFORM_HIGH, 64, 4)
    twin_exact = (
        Fraction(1) + Fraction(1, 4) + 4 * Fraction(3, 10)
        + 128 * Fraction(15, 1000) + 128 * Fraction(10, 1000)
        + 256 * Fraction(1, 1000)
    )
    high_exact = (
        Fraction(1) + Fraction(1, 4) + 4 * Fraction(3, 10) + 256 * Fraction(15, 1000)
    )
    assert twin_exact == Fraction(5906, 1000)
    assert high_exact == Fraction(6290, 1000)
    assert twin == pytest.approx(float(twin_exact), abs=1e-12)
    assert high == pytest.approx(float(high_exact), abs=1e-12)
    print(
        f"\nPASS energy-efficiency arithmetic: twin denominator {twin:.3f} W "
        f"== 5.906, uniform-high {high:.3f} W == 6.290"
    )


def test_wideband_bound_and_degeneracies():
    """Flat-channel equality, bound satisfaction, and the P=1 reduction."""
    # flat channel: averaging identical targets meets the bound exactly
    rng = trial_rng(555, 0)
    ch = sample_channel(TX, RX, PATHS, rng)
    _, w = optimal_fully_digital(ch, N_S)
    t = w.conj().T @ ch.matrix
    wb_flat = WidebandDesignInput.from_targets([t] * 6)
    design = design_wideband(wb_flat, N_RF, B_H, B_L, n_s=N_S)
    eq_err = abs(
        analog_average_rate(wb_flat, design.analog.matrix, 2.0, 1.0, N_S)
        - jensen_bound(wb_flat, design.analog.matrix, 2.0, 1.0, N_S)
    )
    assert eq_err <= 1e-8

    # frequency-selective draws never violate the bound
    worst_slack = np.inf
    for trial in range(20):
        rng = trial_rng(556, trial)
        wbch = sample_wideband_channel(TX, RX, PATHS, 8, 4, rng)
        wb = WidebandDesignInput.from_targets(targets_from_channel(wbch, N_S))
        d = design_wideband(wb, N_RF, B_H, B_L, n_s=N_S)
        for rho in (0.5, 1.0, 10.0):
            avg = analog_average_rate(wb, d.analog.matrix, rho, 1.0, N_S)
            bound = jensen_bound(wb, d.analog.matrix, rho, 1.0, N_S)
            assert avg <= bound + 1e-9
            worst_slack = min(worst_slack, bound - avg)

    # P=1 wideband design reaches the narrowband objective value
    worst_p1 = 0.0
    for trial in range(10):
        rng = trial_rng(557, trial)
        ch = sample_channel(TX, RX, PATHS, rng)
        _, w = optimal_fully_digital(ch, N_S)
        h_hat = w.conj().T @ ch.matrix
        wide = design_wideband(
            WidebandDesignInput.from_targets([h_hat]), N_RF, B_H, B_L, n_s=N_S
        )
        narrow = design_analog_dynamic(h_hat, N_BS, N_RF, B_H, B_L)
        worst_p1 = max(
            worst_p1,
            abs(
                analog_objective(h_hat, wide.analog.matrix)
                - analog_objective(h_hat, narrow.matrix)
            ),
        )
    assert worst_p1 <= 1e-8
    print(
        f"\nPASS wideband: flat equality error {eq_err:.2e}, min bound slack "
        f"{worst_slack:.3e} >= 0, P=1 objective mismatch {worst_p1:.2e}"
    )


def test_appendix_decomposition_residual_100_states():
    """Per-column objective split residual at the relative regularizer."""
    residuals = collect_decomposition_residuals(100)
    worst = max(residuals)
    assert worst <= 1e-4
    print(f"\nPASS column-split residual: 100 states, worst {worst:.3e} <= 1e-4")
