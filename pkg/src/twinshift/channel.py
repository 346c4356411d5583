"""Geometric multi-path mmWave channels over uniform planar arrays.

Conventions fixed here and relied on elsewhere:

* Array spacing ``d`` is stored in carrier wavelengths, so the steering
  phase for the (m, n)-th element is ``2*pi*d*(m*sin(az)*sin(el) + n*cos(el))``
  with ``m`` the horizontal and ``n`` the vertical index.
* Flattened antenna ordering is n-major: the vertical index varies fastest,
  i.e. element (m, n) sits at flat index ``m * height + n``.
* Path gains are standard complex Gaussian; azimuths are uniform on
  [-pi, pi) and elevations uniform on [-pi/2, pi/2) for both link ends.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * np.pi

CHANNEL_SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform planar array: width x height elements, spacing in wavelengths."""

    width: int
    height: int
    spacing: float = 0.5

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("array dimensions must be >= 1")
        if self.spacing <= 0:
            raise ValueError("antenna spacing must be positive")

    @property
    def n_antennas(self) -> int:
        return self.width * self.height

    @classmethod
    def square(cls, n_antennas: int, spacing: float = 0.5) -> "ArrayGeometry":
        """Square (or near-square) grid holding exactly ``n_antennas`` elements."""
        w = int(np.sqrt(n_antennas))
        while n_antennas % w != 0:
            w -= 1
        return cls(width=max(w, 1), height=n_antennas // max(w, 1), spacing=spacing)


@dataclass(frozen=True)
class PathParams:
    """One propagation path: complex gain plus departure/arrival angles."""

    gain: complex
    azimuth_dep: float
    elevation_dep: float
    azimuth_arr: float
    elevation_arr: float


def upa_response(geom: ArrayGeometry, azimuth: float, elevation: float) -> np.ndarray:
    """Unit-norm steering vector of a uniform planar array.

    Entries have magnitude ``1/sqrt(W*H)`` and phase
    ``2*pi*d*(m*sin(azimuth)*sin(elevation) + n*cos(elevation))``,
    flattened n-major (vertical index fastest).
    """
    m = np.arange(geom.width)
    n = np.arange(geom.height)
    phase = TWO_PI * geom.spacing * (
        np.sin(azimuth) * np.sin(elevation) * m[:, None] + np.cos(elevation) * n[None, :]
    )
    vec = np.exp(1j * phase).reshape(-1)  # row-major reshape = n-major ordering
    return vec / np.sqrt(geom.n_antennas)


def path_outer_product(
    path: PathParams, tx_geom: ArrayGeometry, rx_geom: ArrayGeometry
) -> np.ndarray:
    """One path's contribution a_rx * a_tx^H (without the global prefactor)."""
    a_tx = upa_response(tx_geom, path.azimuth_dep, path.elevation_dep)
    a_rx = upa_response(rx_geom, path.azimuth_arr, path.elevation_arr)
    return path.gain * np.outer(a_rx, a_tx.conj())


def assemble_matrix(
    paths: list[PathParams], tx_geom: ArrayGeometry, rx_geom: ArrayGeometry
) -> np.ndarray:
    """Sum of path outer products scaled by sqrt(N_tx * N_rx / L)."""
    if not paths:
        raise ValueError("at least one path required")
    total = np.zeros((rx_geom.n_antennas, tx_geom.n_antennas), dtype=complex)
    for path in paths:
        total += path_outer_product(path, tx_geom, rx_geom)
    scale = np.sqrt(tx_geom.n_antennas * rx_geom.n_antennas / len(paths))
    return scale * total


@dataclass
class ChannelRealization:
    """A drawn channel matrix together with the paths that generated it."""

    matrix: np.ndarray
    paths: list[PathParams]
    tx_geometry: ArrayGeometry
    rx_geometry: ArrayGeometry
    seed: int | None = None

    def rebuild(self) -> np.ndarray:
        """Reassemble the matrix from stored paths (replay/consistency check)."""
        return assemble_matrix(self.paths, self.tx_geometry, self.rx_geometry)

    def to_json_dict(self) -> dict:
        return {
            "schema_version": CHANNEL_SCHEMA_VERSION,
            "seed": self.seed,
            "tx_geometry": _geom_dict(self.tx_geometry),
            "rx_geometry": _geom_dict(self.rx_geometry),
            "paths": [
                {
                    "gain_re": p.gain.real,
                    "gain_im": p.gain.imag,
                    "azimuth_dep": p.azimuth_dep,
                    "elevation_dep": p.elevation_dep,
                    "azimuth_arr": p.azimuth_arr,
                    "elevation_arr": p.elevation_arr,
                }
                for p in self.paths
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    @classmethod
    def from_json_dict(cls, data: dict) -> "ChannelRealization":
        tx = ArrayGeometry(**data["tx_geometry"])
        rx = ArrayGeometry(**data["rx_geometry"])
        paths = [
            PathParams(
                gain=complex(p["gain_re"], p["gain_im"]),
                azimuth_dep=p["azimuth_dep"],
                elevation_dep=p["elevation_dep"],
                azimuth_arr=p["azimuth_arr"],
                elevation_arr=p["elevation_arr"],
            )
            for p in data["paths"]
        ]
        matrix = assemble_matrix(paths, tx, rx)
        return cls(
            matrix=matrix,
            paths=paths,
            tx_geometry=tx,
            rx_geometry=rx,
            seed=data.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "ChannelRealization":
        return cls.from_json_dict(json.loads(text))


def _geom_dict(geom: ArrayGeometry) -> dict:
    return {"width": geom.width, "height": geom.height, "spacing": geom.spacing}


def sample_paths(l_paths: int, rng: np.random.Generator) -> list[PathParams]:
    """Draw path gains and angles for one realization."""
    if l_paths < 1:
        raise ValueError("path count must be >= 1")
    paths = []
    for _ in range(l_paths):
        gain = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2.0)
        az_t = rng.uniform(-np.pi, np.pi)
        el_t = rng.uniform(-np.pi / 2, np.pi / 2)
        az_r = rng.uniform(-np.pi, np.pi)
        el_r = rng.uniform(-np.pi / 2, np.pi / 2)
        paths.append(PathParams(gain, az_t, el_t, az_r, el_r))
    return paths


def sample_channel(
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
    l_paths: int,
    rng: np.random.Generator,
    seed: int | None = None,
) -> ChannelRealization:
    """Draw one narrowband realization of the multi-path channel."""
    paths = sample_paths(l_paths, rng)
    matrix = assemble_matrix(paths, tx_geom, rx_geom)
    return ChannelRealization(matrix, paths, tx_geom, rx_geom, seed=seed)


@dataclass
class WidebandChannel:
    """Per-subcarrier channel matrices of a frequency-selective link."""

    per_subcarrier: list[np.ndarray]
    tap_delays: list[int]
    paths: list[PathParams]
    tx_geometry: ArrayGeometry
    rx_geometry: ArrayGeometry

    @property
    def subcarrier_count(self) -> int:
        return len(self.per_subcarrier)


def sample_wideband_channel(
    tx_geom: ArrayGeometry,
    rx_geom: ArrayGeometry,
    l_paths: int,
    subcarriers: int,
    cp_length: int,
    rng: np.random.Generator,
) -> WidebandChannel:
    """Draw a frequency-selective channel with integer per-path tap delays.

    Each path gets a delay uniform on [0, cp_length); subcarrier p sees the
    path rotated by ``exp(-2j*pi*p*delay/P)``.  ``subcarriers == 1`` reduces
    to the narrowband model.
    """
    if subcarriers < 1:
        raise ValueError("subcarrier count must be >= 1")
    if cp_length < 1:
        raise ValueError("cyclic prefix length must be >= 1")
    paths = sample_paths(l_paths, rng)
    delays = [int(rng.integers(0, cp_length)) for _ in paths]
    scale = np.sqrt(tx_geom.n_antennas * rx_geom.n_antennas / l_paths)
    terms = [path_outer_product(p, tx_geom, rx_geom) for p in paths]
    per_subcarrier = []
    for p_idx in range(subcarriers):
        h = np.zeros((rx_geom.n_antennas, tx_geom.n_antennas), dtype=complex)
        for term, delay in zip(terms, delays):
            h += term * np.exp(-2j * np.pi * p_idx * delay / subcarriers)
        per_subcarrier.append(scale * h)
    return WidebandChannel(per_subcarrier, delays, paths, tx_geom, rx_geom)
