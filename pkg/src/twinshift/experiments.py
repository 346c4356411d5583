"""Deterministic Monte-Carlo experiment harness.

Each scenario draws per-trial channels from a child stream derived from
``(master_seed, trial)``, designs every requested architecture on the same
draw (paired comparisons), and emits one schema-stable record per
(trial, architecture, sweep point).  Identical configs reproduce identical
records except for wall-clock timings.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .channel import ArrayGeometry, sample_channel, sample_wideband_channel
from .design import (
    as_matrix,
    design_analog_dynamic,
    design_analog_fixed,
    design_analog_uniform,
    design_digital,
    optimal_fully_digital,
)
from .gap import direct_rate, gap_trace
from .metrics import PowerModel, bandwidth_efficiency, energy_efficiency, mu_sum_rate
from .multiuser import MultiUserScene, design_mu
from .shifters import NetworkKind, QuantizerSpec, build_fixed_pattern
from .wideband import (
    WidebandDesignInput,
    design_wideband,
    hybrid_average_rate,
    targets_from_channel,
)

SCHEMA_VERSION = "1"

CSV_COLUMNS = [
    "scenario",
    "seed",
    "trial",
    "arch",
    "sweep_name",
    "sweep_value",
    "rate_bps_hz",
    "ee_bits_hz_j",
    "gap_bits",
    "wall_ms",
    "schema_version",
]

SCENARIOS = (
    "su-sweep",
    "mu-sweep",
    "ee-sweep",
    "mu-ee-sweep",
    "users-sweep",
    "wideband-sweep",
    "gap-verify",
    "pattern-compare",
)

ARCH_FULL_DIGITAL = "FullDigital"
ARCH_THEORY = "Theory"
ARCH_SIMULATION = "Simulation"

#: Cited third-party baseline systems (switch-based OMP, partially-connected
#: SIC) are out of scope; their labels are reserved so downstream consumers
#: can merge external results into the same schema.
RESERVED_ARCH_LABELS = ("SwitchOMP", "PartialSIC")

FIXED_KINDS = (
    NetworkKind.HORIZONTAL,
    NetworkKind.VERTICAL,
    NetworkKind.INTERLACED,
    NetworkKind.RANDOM_FIXED,
)


class ConfigError(ValueError):
    """Invalid experiment configuration, with a user-actionable message."""


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    n_bs: int = 16
    n_ms: int = 8
    n_rf: int = 4
    n_s: int = 4
    users: int = 2
    m_s: int = 2
    paths: int = 4
    subcarriers: int = 16
    cp_length: int = 4
    bits_high: int = 3
    bits_low: int = 1
    bits_moderate: int = 2
    snr_grid_db: tuple[float, ...] = (-10.0, -5.0, 0.0, 5.0, 10.0)
    rho_grid_w: tuple[float, ...] = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)
    users_grid: tuple[int, ...] = (2, 3, 4)
    users_snr_db: float = 20.0
    users_rho_w: float = 1.0
    trials: int = 20
    master_seed: int = 2026
    xi_rel: float = 1e-6
    power: PowerModel = field(default_factory=PowerModel)
    workers: int = 1
    record_wall_time: bool = True

    def validate(self) -> "ExperimentConfig":
        if self.scenario not in SCENARIOS:
            raise ConfigError(
                f"unknown scenario {self.scenario!r}; choose one of {', '.join(SCENARIOS)}"
            )
        for name in ("n_bs", "n_ms", "n_rf", "n_s", "users", "m_s", "paths",
                     "subcarriers", "cp_length"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer, got {getattr(self, name)}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        for name in ("bits_high", "bits_low", "bits_moderate"):
            if not 1 <= getattr(self, name) <= 16:
                raise ConfigError(f"{name} must be in [1, 16], got {getattr(self, name)}")
        if self.n_bs % 2 != 0:
            raise ConfigError(f"n_bs must be even for twin networks, got {self.n_bs}")
        if self.n_s > min(self.n_ms, self.n_bs):
            raise ConfigError(
                f"n_s={self.n_s} exceeds min(n_ms, n_bs)={min(self.n_ms, self.n_bs)}"
            )
        if self.n_s > self.n_rf:
            raise ConfigError(f"n_s={self.n_s} exceeds n_rf={self.n_rf}")
        if self.scenario in ("mu-sweep", "mu-ee-sweep"):
            if self.n_rf != self.users * self.m_s:
                raise ConfigError(
                    f"multi-user scenarios need n_rf == users*m_s "
                    f"({self.users}*{self.m_s}={self.users * self.m_s}), got n_rf={self.n_rf}"
                )
            if self.m_s > self.n_ms:
                raise ConfigError(f"m_s={self.m_s} exceeds n_ms={self.n_ms}")
        if self.scenario == "users-sweep":
            if any(u < 1 for u in self.users_grid):
                raise ConfigError("users_grid entries must be >= 1")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1, got {self.workers}")
        if not self.snr_grid_db:
            raise ConfigError("snr_grid_db must not be empty")
        if not self.rho_grid_w:
            raise ConfigError("rho_grid_w must not be empty")
        return self


def default_config(scenario: str, paper_scale: bool = False) -> ExperimentConfig:
    """Desk-scale defaults per scenario; ``paper_scale`` restores the full
    published dimensions."""
    cfg = ExperimentConfig(scenario=scenario)
    if scenario in ("mu-sweep", "mu-ee-sweep"):
        cfg = replace(cfg, users=2, m_s=2, n_rf=4, n_s=4)
    if paper_scale:
        cfg = replace(cfg, n_bs=64, n_ms=16, paths=8)
        if scenario in ("mu-sweep", "mu-ee-sweep"):
            cfg = replace(cfg, users=2, m_s=4, n_rf=8, n_s=8)
        if scenario == "users-sweep":
            cfg = replace(cfg, users_grid=(2, 3, 4, 5, 6))
        if scenario == "wideband-sweep":
            cfg = replace(cfg, subcarriers=128, cp_length=32)
    return cfg


def load_config_file(path) -> dict:
    with open(path) as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a mapping, got {type(data).__name__}")
    return data


def apply_overrides(cfg: ExperimentConfig, overrides: dict) -> ExperimentConfig:
    """Overlay a config-file/CLI mapping onto a config, rejecting unknown keys."""
    field_names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(overrides) - field_names
    if unknown:
        raise ConfigError(
            f"unknown config keys: {', '.join(sorted(unknown))}; "
            f"valid keys: {', '.join(sorted(field_names))}"
        )
    clean = dict(overrides)
    if "power" in clean and isinstance(clean["power"], dict):
        power_fields = {f.name for f in dataclasses.fields(PowerModel)}
        bad = set(clean["power"]) - power_fields
        if bad:
            raise ConfigError(f"unknown power model keys: {', '.join(sorted(bad))}")
        clean["power"] = replace(cfg.power, **clean["power"])
    for key in ("snr_grid_db", "rho_grid_w", "users_grid"):
        if key in clean:
            clean[key] = tuple(clean[key])
    return replace(cfg, **clean)


@dataclass(frozen=True)
class MetricRecord:
    scenario: str
    seed: int
    trial: int
    arch: str
    sweep_name: str
    sweep_value: float
    rate_bps_hz: float
    ee_bits_hz_j: float | None
    gap_bits: float | None
    wall_ms: float
    schema_version: str = SCHEMA_VERSION

    def to_row(self) -> list[str]:
        return [
            self.scenario,
            str(self.seed),
            str(self.trial),
            self.arch,
            self.sweep_name,
            repr(float(self.sweep_value)),
            repr(float(self.rate_bps_hz)),
            "" if self.ee_bits_hz_j is None else repr(float(self.ee_bits_hz_j)),
            "" if self.gap_bits is None else repr(float(self.gap_bits)),
            repr(float(self.wall_ms)),
            self.schema_version,
        ]


@dataclass(frozen=True)
class AggregateRow:
    arch: str
    sweep_name: str
    sweep_value: float
    n: int
    rate_mean: float
    rate_ci_low: float
    rate_ci_high: float
    ee_mean: float | None
    gap_mean: float | None


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[MetricRecord]
    aggregates: list[AggregateRow]


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, trial])))


def bootstrap_ci(
    values: np.ndarray,
    rng: np.random.Generator,
    n_boot: int = 1000,
    alpha: float = 0.05,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    values = np.asarray(values, dtype=float)
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    means = values[idx].mean(axis=1)
    return float(np.quantile(means, alpha / 2)), float(np.quantile(means, 1 - alpha / 2))


def _snr_to_rho(snr_db: float, sigma2: float) -> float:
    return 10.0 ** (snr_db / 10.0) * sigma2


class _Timer:
    def __init__(self, enabled: bool):
        self.enabled = enabled
        self._t0 = time.perf_counter()

    def restart(self) -> None:
        self._t0 = time.perf_counter()

    def ms(self) -> float:
        return (time.perf_counter() - self._t0) * 1e3 if self.enabled else 0.0


def _su_architectures(config: ExperimentConfig) -> list[str]:
    if config.scenario == "pattern-compare":
        return [NetworkKind.DYNAMIC.value] + [k.value for k in FIXED_KINDS]
    if config.scenario == "ee-sweep":
        return [
            NetworkKind.DYNAMIC.value,
            NetworkKind.UNIFORM_HIGH.value,
            NetworkKind.UNIFORM_MODERATE.value,
            NetworkKind.UNIFORM_LOW.value,
        ]
    return [
        ARCH_FULL_DIGITAL,
        NetworkKind.UNIFORM_HIGH.value,
        NetworkKind.DYNAMIC.value,
        NetworkKind.UNIFORM_MODERATE.value,
        NetworkKind.UNIFORM_LOW.value,
    ]


def _mu_architectures() -> list[str]:
    return [
        ARCH_FULL_DIGITAL,
        NetworkKind.UNIFORM_HIGH.value,
        NetworkKind.DYNAMIC.value,
        NetworkKind.UNIFORM_LOW.value,
    ]


def _quantizers(config: ExperimentConfig, arch: str) -> tuple[QuantizerSpec, QuantizerSpec]:
    """(high, low) pair used by the given architecture label."""
    b_h = QuantizerSpec(config.bits_high)
    b_m = QuantizerSpec(config.bits_moderate)
    b_l = QuantizerSpec(config.bits_low)
    kind = NetworkKind(arch)
    if kind in FIXED_KINDS or kind is NetworkKind.DYNAMIC:
        return b_h, b_l
    return {
        NetworkKind.UNIFORM_HIGH: (b_h, b_h),
        NetworkKind.UNIFORM_MODERATE: (b_m, b_m),
        NetworkKind.UNIFORM_LOW: (b_l, b_l),
    }[kind]


def _design_su_arch(config, arch, h_hat, rng) -> np.ndarray:
    """Analog matrix for one single-link architecture label."""
    kind = NetworkKind(arch)
    high, low = _quantizers(config, arch)
    if kind is NetworkKind.DYNAMIC:
        return design_analog_dynamic(
            h_hat, config.n_bs, config.n_rf, high, low, config.xi_rel
        ).matrix
    if kind in FIXED_KINDS:
        pattern = build_fixed_pattern(kind, config.n_bs, config.n_rf, rng)
        return design_analog_fixed(h_hat, pattern, high, low, config.xi_rel).matrix
    return design_analog_uniform(h_hat, config.n_bs, config.n_rf, high, config.xi_rel).matrix


def _geometries(config: ExperimentConfig) -> tuple[ArrayGeometry, ArrayGeometry]:
    return ArrayGeometry.square(config.n_bs), ArrayGeometry.square(config.n_ms)


def _sweep(config: ExperimentConfig) -> tuple[str, list[float]]:
    if config.scenario in ("ee-sweep", "mu-ee-sweep"):
        return "rho_w", list(config.rho_grid_w)
    if config.scenario == "users-sweep":
        return "users", [float(u) for u in config.users_grid]
    return "snr_db", list(config.snr_grid_db)


def _run_su_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    rng = trial_rng(config.master_seed, trial)
    tx, rx = _geometries(config)
    channel = sample_channel(tx, rx, config.paths, rng)
    f_opt, w_opt = optimal_fully_digital(channel, config.n_s)
    h_hat = w_opt.conj().T @ channel.matrix
    sweep_name, sweep_values = _sweep(config)
    sigma2 = config.power.sigma2
    records = []
    for arch in _su_architectures(config):
        timer = _Timer(config.record_wall_time)
        if arch == ARCH_FULL_DIGITAL:
            f_rf, f_bb = f_opt, np.eye(config.n_s)
        else:
            f_rf = _design_su_arch(config, arch, h_hat, rng)
            f_bb = design_digital(channel, w_opt, f_rf, config.n_s).matrix
        rows = []
        for value in sweep_values:
            rho = value if sweep_name == "rho_w" else _snr_to_rho(value, sigma2)
            rate = bandwidth_efficiency(channel, f_rf, f_bb, w_opt, rho, sigma2)
            ee = None
            if arch != ARCH_FULL_DIGITAL:
                model = replace(config.power, rho=rho)
                ee = energy_efficiency(rate, model, NetworkKind(arch), config.n_bs, config.n_s)
            rows.append((value, rate, ee))
        wall = timer.ms()
        for value, rate, ee in rows:
            records.append(
                MetricRecord(
                    scenario=config.scenario,
                    seed=config.master_seed,
                    trial=trial,
                    arch=arch,
                    sweep_name=sweep_name,
                    sweep_value=value,
                    rate_bps_hz=rate,
                    ee_bits_hz_j=ee,
                    gap_bits=None,
                    wall_ms=wall,
                )
            )
    return records


def _run_gap_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    rng = trial_rng(config.master_seed, trial)
    tx, rx = _geometries(config)
    channel = sample_channel(tx, rx, config.paths, rng)
    f_opt, w_opt = optimal_fully_digital(channel, config.n_s)
    h_hat = w_opt.conj().T @ channel.matrix
    high, low = QuantizerSpec(config.bits_high), QuantizerSpec(config.bits_low)
    analog = design_analog_dynamic(h_hat, config.n_bs, config.n_rf, high, low, config.xi_rel)
    f_bb = design_digital(channel, w_opt, analog.matrix, config.n_s).matrix
    f_hybrid = analog.matrix @ f_bb
    sigma2 = config.power.sigma2
    records = []
    timer = _Timer(config.record_wall_time)
    for snr_db in config.snr_grid_db:
        rho = _snr_to_rho(snr_db, sigma2)
        trace = gap_trace(channel, w_opt, f_opt, f_hybrid, rho, sigma2)
        sim_gap = direct_rate(channel, w_opt, f_opt, rho, sigma2) - direct_rate(
            channel, w_opt, f_hybrid, rho, sigma2
        )
        rate = bandwidth_efficiency(channel, analog.matrix, f_bb, w_opt, rho, sigma2)
        wall = timer.ms()
        timer.restart()
        for arch, gap_value in ((ARCH_THEORY, trace.total), (ARCH_SIMULATION, sim_gap)):
            records.append(
                MetricRecord(
                    scenario=config.scenario,
                    seed=config.master_seed,
                    trial=trial,
                    arch=arch,
                    sweep_name="snr_db",
                    sweep_value=snr_db,
                    rate_bps_hz=rate,
                    ee_bits_hz_j=None,
                    gap_bits=gap_value,
                    wall_ms=wall,
                )
            )
    return records


def _full_digital_mu_rate(scene: MultiUserScene, rho: float, sigma2: float) -> float:
    """Interference-free per-user SVD benchmark, summed over users."""
    total = 0.0
    eye = np.eye(scene.per_user_streams)
    for ch in scene.channels:
        f_opt_u, w_u = optimal_fully_digital(ch, scene.per_user_streams)
        total += bandwidth_efficiency(ch, f_opt_u, eye, w_u, rho, sigma2)
    return total


def _mu_scene(config: ExperimentConfig, rng, users: int) -> MultiUserScene:
    tx, rx = _geometries(config)
    channels = [sample_channel(tx, rx, config.paths, rng) for _ in range(users)]
    return MultiUserScene(channels=channels, per_user_streams=config.m_s)


def _run_mu_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    rng = trial_rng(config.master_seed, trial)
    scene = _mu_scene(config, rng, config.users)
    sweep_name, sweep_values = _sweep(config)
    sigma2 = config.power.sigma2
    users = scene.users
    records = []
    for arch in _mu_architectures():
        timer = _Timer(config.record_wall_time)
        precoders = None
        if arch != ARCH_FULL_DIGITAL:
            high, low = _quantizers(config, arch)
            precoders = design_mu(scene, high, low, config.xi_rel)
        rows = []
        for value in sweep_values:
            rho = value if sweep_name == "rho_w" else _snr_to_rho(value, sigma2)
            if precoders is None:
                rate = _full_digital_mu_rate(scene, rho, sigma2)
            else:
                rate = mu_sum_rate(scene, precoders, rho, sigma2)
            ee = None
            if arch != ARCH_FULL_DIGITAL:
                model = replace(config.power, rho=rho)
                ee = (
                    energy_efficiency(
                        rate, model, NetworkKind(arch), config.n_bs,
                        scene.n_s, users=users, m_s=config.m_s,
                    )
                    / users
                )
            rows.append((value, rate / users, ee))  # per-user averages
        wall = timer.ms()
        for value, rate, ee in rows:
            records.append(
                MetricRecord(
                    scenario=config.scenario,
                    seed=config.master_seed,
                    trial=trial,
                    arch=arch,
                    sweep_name=sweep_name,
                    sweep_value=value,
                    rate_bps_hz=rate,
                    ee_bits_hz_j=ee,
                    gap_bits=None,
                    wall_ms=wall,
                )
            )
    return records


def _run_users_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    rng = trial_rng(config.master_seed, trial)
    sigma2 = config.power.sigma2
    rho_rate = _snr_to_rho(config.users_snr_db, sigma2)
    rho_ee = config.users_rho_w
    records = []
    for users in config.users_grid:
        scene = _mu_scene(config, rng, users)
        for arch in _mu_architectures():
            timer = _Timer(config.record_wall_time)
            if arch == ARCH_FULL_DIGITAL:
                rate = _full_digital_mu_rate(scene, rho_rate, sigma2)
                ee = None
            else:
                high, low = _quantizers(config, arch)
                precoders = design_mu(scene, high, low, config.xi_rel)
                rate = mu_sum_rate(scene, precoders, rho_rate, sigma2)
                rate_ee = mu_sum_rate(scene, precoders, rho_ee, sigma2)
                model = replace(config.power, rho=rho_ee)
                ee = energy_efficiency(
                    rate_ee, model, NetworkKind(arch), config.n_bs,
                    scene.n_s, users=users, m_s=config.m_s,
                )
            records.append(
                MetricRecord(
                    scenario=config.scenario,
                    seed=config.master_seed,
                    trial=trial,
                    arch=arch,
                    sweep_name="users",
                    sweep_value=float(users),
                    rate_bps_hz=rate,
                    ee_bits_hz_j=ee,
                    gap_bits=None,
                    wall_ms=timer.ms(),
                )
            )
    return records


def _run_wideband_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    rng = trial_rng(config.master_seed, trial)
    tx, rx = _geometries(config)
    channel = sample_wideband_channel(
        tx, rx, config.paths, config.subcarriers, config.cp_length, rng
    )
    targets = targets_from_channel(channel, config.n_s)
    wb = WidebandDesignInput.from_targets(targets)
    sigma2 = config.power.sigma2
    eye = np.eye(config.n_s)
    records = []
    for arch in _mu_architectures():  # same four-curve comparison
        timer = _Timer(config.record_wall_time)
        design = None
        per_sc_opt = None
        if arch == ARCH_FULL_DIGITAL:
            per_sc_opt = [
                optimal_fully_digital(h_p, config.n_s) for h_p in channel.per_subcarrier
            ]
        else:
            high, low = _quantizers(config, arch)
            design = design_wideband(
                wb, config.n_rf, high, low, config.xi_rel, n_s=config.n_s
            )
        rows = []
        for snr_db in config.snr_grid_db:
            rho = _snr_to_rho(snr_db, sigma2)
            if design is None:
                per_sc = [
                    bandwidth_efficiency(h_p, f_opt_p, eye, w_opt_p, rho, sigma2)
                    for h_p, (f_opt_p, w_opt_p) in zip(channel.per_subcarrier, per_sc_opt)
                ]
                rate = float(np.mean(per_sc))
            else:
                rate = hybrid_average_rate(
                    wb, design.analog.matrix, design.per_subcarrier_digital, rho, sigma2
                )
            ee = None
            if arch != ARCH_FULL_DIGITAL:
                model = replace(config.power, rho=rho)
                ee = energy_efficiency(rate, model, NetworkKind(arch), config.n_bs, config.n_s)
            rows.append((snr_db, rate, ee))
        wall = timer.ms()
        for value, rate, ee in rows:
            records.append(
                MetricRecord(
                    scenario=config.scenario,
                    seed=config.master_seed,
                    trial=trial,
                    arch=arch,
                    sweep_name="snr_db",
                    sweep_value=value,
                    rate_bps_hz=rate,
                    ee_bits_hz_j=ee,
                    gap_bits=None,
                    wall_ms=wall,
                )
            )
    return records


_TRIAL_RUNNERS = {
    "su-sweep": _run_su_trial,
    "pattern-compare": _run_su_trial,
    "ee-sweep": _run_su_trial,
    "gap-verify": _run_gap_trial,
    "mu-sweep": _run_mu_trial,
    "mu-ee-sweep": _run_mu_trial,
    "users-sweep": _run_users_trial,
    "wideband-sweep": _run_wideband_trial,
}


def run_trial(config: ExperimentConfig, trial: int) -> list[MetricRecord]:
    """All records of one trial (importable top-level for process pools)."""
    return _TRIAL_RUNNERS[config.scenario](config, trial)


def _record_sort_key(r: MetricRecord):
    return (r.arch, r.sweep_name, r.sweep_value, r.trial)


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run all trials, sort records deterministically, and aggregate."""
    config.validate()
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            per_trial = list(pool.map(run_trial, [config] * config.trials, range(config.trials)))
    else:
        per_trial = [run_trial(config, t) for t in range(config.trials)]
    records = [r for trial_records in per_trial for r in trial_records]
    records.sort(key=_record_sort_key)
    aggregates = aggregate_records(records, config.master_seed)
    return ExperimentResult(config=config, records=records, aggregates=aggregates)


def aggregate_records(records: list[MetricRecord], master_seed: int) -> list[AggregateRow]:
    """Mean rate with a 95% bootstrap interval per (arch, sweep point)."""
    groups: dict[tuple[str, str, float], list[MetricRecord]] = {}
    for r in records:
        groups.setdefault((r.arch, r.sweep_name, r.sweep_value), []).append(r)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([master_seed, 0xB007])))
    rows = []
    for (arch, sweep_name, sweep_value), group in sorted(groups.items()):
        rates = np.array([g.rate_bps_hz for g in group])
        lo, hi = bootstrap_ci(rates, rng)
        ees = [g.ee_bits_hz_j for g in group if g.ee_bits_hz_j is not None]
        gaps = [g.gap_bits for g in group if g.gap_bits is not None]
        rows.append(
            AggregateRow(
                arch=arch,
                sweep_name=sweep_name,
                sweep_value=sweep_value,
                n=len(group),
                rate_mean=float(rates.mean()),
                rate_ci_low=lo,
                rate_ci_high=hi,
                ee_mean=float(np.mean(ees)) if ees else None,
                gap_mean=float(np.mean(gaps)) if gaps else None,
            )
        )
    return rows


def emit_results(records: list[MetricRecord], path, fmt: str = "csv") -> None:
    """Write records with the stable schema; CSV gets a header row, JSON a
    top-level schema_version field."""
    try:
        if fmt == "csv":
            with open(path, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(CSV_COLUMNS)
                for r in records:
                    writer.writerow(r.to_row())
        elif fmt == "json":
            payload = {
                "schema_version": SCHEMA_VERSION,
                "records": [dataclasses.asdict(r) for r in records],
            }
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2)
        else:
            raise ConfigError(f"unknown output format {fmt!r}; use csv or json")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def load_records(path, fmt: str = "csv") -> list[MetricRecord]:
    """Parse an emitted results file back into records."""
    if fmt == "json":
        with open(path) as fh:
            payload = json.load(fh)
        return [MetricRecord(**r) for r in payload["records"]]
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_COLUMNS:
            raise ValueError(
                f"unexpected CSV columns in {path}: {reader.fieldnames} != {CSV_COLUMNS}"
            )
        for row in reader:
            records.append(
                MetricRecord(
                    scenario=row["scenario"],
                    seed=int(row["seed"]),
                    trial=int(row["trial"]),
                    arch=row["arch"],
                    sweep_name=row["sweep_name"],
                    sweep_value=float(row["sweep_value"]),
                    rate_bps_hz=float(row["rate_bps_hz"]),
                    ee_bits_hz_j=float(row["ee_bits_hz_j"]) if row["ee_bits_hz_j"] else None,
                    gap_bits=float(row["gap_bits"]) if row["gap_bits"] else None,
                    wall_ms=float(row["wall_ms"]),
                    schema_version=row["schema_version"],
                )
            )
    return records
