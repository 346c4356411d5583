"""Render static figures from twinshift experiment CSV files.

One line per architecture with a mean curve and a 95% bootstrap band,
grouped by the ``arch`` column over the sweep variable.  Rendering is
read-only and deterministic: the same CSV yields the same figure.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

SCHEMA_VERSION = "1"

EXPECTED_COLUMNS = [
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

#: figure kind -> (y column, y axis label, x axis label)
FIGURE_KINDS = {
    "rate-vs-snr": ("rate_bps_hz", "bandwidth efficiency (bits/s/Hz)", "SNR (dB)"),
    "ee-vs-rho": ("ee_bits_hz_j", "energy efficiency (bits/Hz/J)", "transmit power (W)"),
    "rate-vs-users": ("rate_bps_hz", "sum bandwidth efficiency (bits/s/Hz)", "users"),
    "ee-vs-users": ("ee_bits_hz_j", "energy efficiency (bits/Hz/J)", "users"),
    "gap-vs-snr": ("gap_bits", "bandwidth efficiency gap (bits/s/Hz)", "SNR (dB)"),
}


class SchemaError(ValueError):
    """CSV columns or schema version do not match the expected layout."""


@dataclass(frozen=True)
class PlotSpec:
    """What to render: input CSV, figure kind, and the output image path."""

    csv_path: str
    kind: str
    out_path: str
    group_column: str = "arch"
    x_column: str = "sweep_value"
    y_column: str | None = None  # default set by the figure kind

    def resolved_y(self) -> str:
        if self.y_column is not None:
            return self.y_column
        if self.kind not in FIGURE_KINDS:
            raise ValueError(
                f"unknown figure kind {self.kind!r}; choose one of {sorted(FIGURE_KINDS)}"
            )
        return FIGURE_KINDS[self.kind][0]


@dataclass
class Series:
    """One architecture's aggregated curve."""

    label: str
    x: np.ndarray
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


@dataclass
class RenderResult:
    out_path: str
    series: dict[str, Series] = field(default_factory=dict)


def read_rows(csv_path: str) -> list[dict]:
    """Load and schema-check the CSV; empty data is an error."""
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames
        if header != EXPECTED_COLUMNS:
            missing = [c for c in EXPECTED_COLUMNS if c not in (header or [])]
            extra = [c for c in (header or []) if c not in EXPECTED_COLUMNS]
            raise SchemaError(
                f"{csv_path}: column mismatch (missing: {missing or 'none'}, "
                f"extra: {extra or 'none'})"
            )
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{csv_path}: no data rows")
    versions = {r["schema_version"] for r in rows}
    if versions != {SCHEMA_VERSION}:
        raise SchemaError(
            f"{csv_path}: unsupported schema_version values {sorted(versions)}, "
            f"expected {SCHEMA_VERSION!r}"
        )
    return rows


def _bootstrap_band(values: np.ndarray, rng: np.random.Generator, n_boot: int = 1000):
    if len(values) == 1:
        return float(values[0]), float(values[0])
    idx = rng.integers(0, len(values), size=(n_boot, len(values)))
    means = values[idx].mean(axis=1)
    return float(np.quantile(means, 0.025)), float(np.quantile(means, 0.975))


def aggregate(rows: list[dict], spec: PlotSpec) -> dict[str, Series]:
    """Group rows by architecture and reduce each sweep point to mean + CI."""
    y_col = spec.resolved_y()
    grouped: dict[str, dict[float, list[float]]] = {}
    for row in rows:
        raw = row[y_col]
        if raw == "":
            continue  # column legitimately empty for this architecture
        grouped.setdefault(row[spec.group_column], {}).setdefault(
            float(row[spec.x_column]), []
        ).append(float(raw))
    if not grouped:
        raise SchemaError(f"no usable values in column {y_col!r}")
    rng = np.random.default_rng(0)  # fixed stream keeps renders deterministic
    series = {}
    for label in sorted(grouped):
        points = grouped[label]
        xs = np.array(sorted(points))
        means, lows, highs = [], [], []
        for x in xs:
            vals = np.array(points[x])
            means.append(float(vals.mean()))
            lo, hi = _bootstrap_band(vals, rng)
            lows.append(lo)
            highs.append(hi)
        series[label] = Series(label, xs, np.array(means), np.array(lows), np.array(highs))
    return series


def render(spec: PlotSpec) -> RenderResult:
    """Render the figure to ``spec.out_path`` and return the plotted series."""
    rows = read_rows(spec.csv_path)
    series = aggregate(rows, spec)
    _, y_label, x_label = FIGURE_KINDS.get(spec.kind, (None, spec.resolved_y(), "sweep"))

    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    for s in series.values():
        style = "--" if s.label == "Simulation" else "-"
        marker = "x" if s.label == "Simulation" else "o"
        ax.plot(s.x, s.mean, style, marker=marker, markersize=4, label=s.label)
        ax.fill_between(s.x, s.ci_low, s.ci_high, alpha=0.15)
    ax.set_xlabel(x_label)
    ax.set_ylabel(y_label)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    scenario = rows[0]["scenario"]
    ax.set_title(f"{scenario} (seed {rows[0]['seed']}, {_trial_count(rows)} trials)")
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=150)
    plt.close(fig)
    return RenderResult(out_path=spec.out_path, series=series)


def _trial_count(rows: list[dict]) -> int:
    return len({r["trial"] for r in rows})


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figpipe", description="Render a figure from a twinshift CSV"
    )
    parser.add_argument("csv_path", help="input results CSV")
    parser.add_argument("kind", choices=sorted(FIGURE_KINDS), help="figure kind")
    parser.add_argument("out_path", help="output image path (png/pdf/svg)")
    args = parser.parse_args(argv)
    try:
        result = render(PlotSpec(args.csv_path, args.kind, args.out_path))
    except (SchemaError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.out_path} ({len(result.series)} series)")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
