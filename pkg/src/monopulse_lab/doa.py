"""Monopulse-ratio direction finding, receive-chain impairments and datasets.

Angles are radians inside this module's data types and degrees in CSV files.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .array import ArrayGeometry, comparator_block, ideal_channels, steering_vector, wavelength
from .errors import OutOfUnambiguousRange, SumNull
from .netkernel import SweepSParams

SUM_NULL_RATIO = 1e-12
# the hybrid outputs put delta in quadrature with sum; the receiver rotates it back
QUADRATURE = -1j


@dataclass(frozen=True)
class Multipath:
    """A single specular image arriving from the mirrored elevation angle."""

    rel_amplitude: float = 0.1
    excess_path_m: float = 0.3
    reflection_phase_deg: float = 180.0

    def __post_init__(self):
        if not 0 <= self.rel_amplitude < 1:
            raise ValueError("multipath relative amplitude must lie in [0, 1)")


@dataclass(frozen=True)
class ImpairmentConfig:
    amp_sigma_db: float = 0.0
    phase_sigma_deg: float = 0.0
    snr_db: float | None = None             # None: noiseless
    multipath: Multipath | None = None
    coupling_db: float | None = None        # adjacent-element coupling, None: off
    comparator_sweep: SweepSParams | None = None
    seed: int = 0

    def __post_init__(self):
        if self.amp_sigma_db < 0 or self.phase_sigma_deg < 0:
            raise ValueError("impairment sigmas must be non-negative")

    @property
    def is_ideal(self) -> bool:
        return (self.amp_sigma_db == 0 and self.phase_sigma_deg == 0 and self.snr_db is None
                and self.multipath is None and self.coupling_db is None)


MODERATE = ImpairmentConfig(
    amp_sigma_db=0.5,
    phase_sigma_deg=5.0,
    snr_db=50.0,
    multipath=Multipath(0.1, 0.3, 180.0),
    coupling_db=-20.0,
)


def monopulse_ratio(delta, sigma) -> float:
    """Real part of delta / sigma."""
    if abs(sigma) < SUM_NULL_RATIO * abs(delta) or sigma == 0:
        raise SumNull(f"sum channel vanishes (|sum| = {abs(sigma):.3g}, |delta| = {abs(delta):.3g})")
    return float((delta / sigma).real)


def ratio_from_angle(theta, d, lam) -> float:
    """Ideal ratio tan(pi d sin(theta) / lambda) for a two-element pair."""
    return math.tan(math.pi * d / lam * math.sin(theta))


def angle_from_ratio(gamma, d, lam) -> float:
    """Invert the ideal ratio on its principal branch; radians."""
    arg = math.atan(gamma) * lam / (math.pi * d)
    if abs(arg) > 1.0:
        raise OutOfUnambiguousRange(f"ratio {gamma:.6g} lies outside the unambiguous range for d/lambda = {d / lam:.4g}")
    return math.asin(arg)


def draw_channel_errors(cfg: ImpairmentConfig, rng) -> np.ndarray:
    """Static complex gain per channel (sum, delta_az, delta_el, delta_del)."""
    a = rng.normal(0.0, cfg.amp_sigma_db, 4) if cfg.amp_sigma_db else np.zeros(4)
    p = rng.normal(0.0, cfg.phase_sigma_deg, 4) if cfg.phase_sigma_deg else np.zeros(4)
    return 10.0 ** (a / 20.0) * np.exp(1j * np.radians(p))


def apply_impairments(channels, cfg: ImpairmentConfig, rng, gains=None) -> np.ndarray:
    """Channel gain errors then additive receiver noise.

    ``gains`` fixes the per-channel errors; otherwise they are drawn from
    ``rng`` before the noise.
    """
    ch = np.asarray(channels, dtype=complex)
    if gains is None:
        gains = draw_channel_errors(cfg, rng)
    ch = ch * gains
    if cfg.snr_db is not None:
        scale = abs(ch[0]) * 10.0 ** (-cfg.snr_db / 20.0) / math.sqrt(2.0)
        ch = ch + scale * (rng.standard_normal(4) + 1j * rng.standard_normal(4))
    return ch


def coupling_matrix(coupling_db) -> np.ndarray:
    """Element coupling between edge-sharing neighbours (A-B, C-D, A-C, B-D)."""
    c = np.eye(4, dtype=complex)
    if coupling_db is None:
        return c
    k = 10.0 ** (coupling_db / 20.0) * np.exp(-0.5j * math.pi)
    for i, j in ((0, 1), (2, 3), (0, 2), (1, 3)):
        c[i, j] = c[j, i] = k
    return c


def element_signals(geom: ArrayGeometry, theta_az, theta_el, cfg: ImpairmentConfig) -> np.ndarray:
    """Received element voltages (A, B, C, D); angles in radians."""
    az, el = math.degrees(theta_az), math.degrees(theta_el)
    x = steering_vector(geom, az, el)
    mp = cfg.multipath
    if mp is not None and mp.rel_amplitude > 0:
        k = 2 * math.pi / wavelength(geom.f_op)
        image = steering_vector(geom, az, -el)
        x = x + mp.rel_amplitude * np.exp(1j * (math.radians(mp.reflection_phase_deg) - k * mp.excess_path_m)) * image
    return coupling_matrix(cfg.coupling_db) @ x


def form_channels(geom, x, cfg: ImpairmentConfig) -> np.ndarray:
    if cfg.comparator_sweep is None:
        return ideal_channels(x)
    return comparator_block(cfg.comparator_sweep, geom.f_op) @ x


def estimate(geom: ArrayGeometry, theta_az, theta_el, cfg: ImpairmentConfig = ImpairmentConfig(),
             rng=None, gains=None):
    """Estimated (azimuth, elevation) in radians for a target at the given angles."""
    x = element_signals(geom, theta_az, theta_el, cfg)
    ch = form_channels(geom, x, cfg)
    if not cfg.is_ideal:
        rng = np.random.default_rng(cfg.seed) if rng is None else rng
        ch = apply_impairments(ch, cfg, rng, gains)
    lam = wavelength(geom.f_op)
    g_az = monopulse_ratio(QUADRATURE * ch[1], ch[0])
    g_el = monopulse_ratio(QUADRATURE * ch[2], ch[0])
    return angle_from_ratio(g_az, geom.d_az, lam), angle_from_ratio(g_el, geom.d_el, lam)


@dataclass(frozen=True)
class DoASample:
    index: int
    x: float
    y: float
    distance: float
    theta_az: float
    theta_el: float
    est_az: float
    est_el: float
    flags: str = "ok"

    @property
    def ok(self) -> bool:
        return self.flags == "ok"


@dataclass(frozen=True)
class Scenario:
    distance: float = 0.62
    pitch: float = 0.030
    n_side: int = 12
    include_center: bool = True
    noise_stream: int = 0       # separates noise draws of runs that share hardware errors
    impairments: ImpairmentConfig = field(default_factory=ImpairmentConfig)
    geometry: ArrayGeometry = field(default_factory=ArrayGeometry)

    def __post_init__(self):
        if self.pitch <= 0 or self.distance <= 0:
            raise ValueError("pitch and distance must be positive")
        if self.n_side < 1:
            raise ValueError("n_side must be at least 1")

    @property
    def count(self) -> int:
        return self.n_side ** 2 + int(self.include_center)

    def with_seed(self, seed) -> "Scenario":
        return replace(self, impairments=replace(self.impairments, seed=int(seed)))


def grid_positions(n_side=12, pitch=0.030, include_center=True) -> np.ndarray:
    """Serpentine raster centred on boresight, then the centre point itself."""
    half = (n_side - 1) / 2
    pts = []
    for j in range(n_side):
        cols = range(n_side) if j % 2 == 0 else reversed(range(n_side))
        pts.extend(((i - half) * pitch, (j - half) * pitch) for i in cols)
    if include_center:
        pts.append((0.0, 0.0))
    return np.array(pts)


def scenario_gains(cfg: ImpairmentConfig) -> np.ndarray:
    # channel errors are a property of the hardware: one draw per scenario
    return draw_channel_errors(cfg, np.random.default_rng([cfg.seed, 0]))


def sample_rng(seed, index, stream=0):
    return np.random.default_rng([seed, 1, index, stream])


def gen_dataset(sc: Scenario) -> list[DoASample]:
    cfg = sc.impairments
    gains = scenario_gains(cfg)
    out = []
    for n, (x, y) in enumerate(grid_positions(sc.n_side, sc.pitch, sc.include_center)):
        az, el = math.atan(x / sc.distance), math.atan(y / sc.distance)
        try:
            ea, ee = estimate(sc.geometry, az, el, cfg, sample_rng(cfg.seed, n, sc.noise_stream), gains)
            flags = "ok"
        except SumNull:
            ea = ee = math.nan
            flags = "sum_null"
        except OutOfUnambiguousRange:
            ea = ee = math.nan
            flags = "out_of_range"
        out.append(DoASample(n, float(x), float(y), sc.distance, az, el, ea, ee, flags))
    return out


CSV_COLUMNS = ("index", "x_m", "y_m", "D_m", "theta_az_true_deg", "theta_el_true_deg",
               "theta_az_est_deg", "theta_el_est_deg", "flags")


def _f(v):
    return repr(float(v))


def dataset_to_csv(samples) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for s in samples:
        w.writerow([s.index, _f(s.x), _f(s.y), _f(s.distance), _f(math.degrees(s.theta_az)),
                    _f(math.degrees(s.theta_el)), _f(math.degrees(s.est_az)), _f(math.degrees(s.est_el)),
                    s.flags])
    return buf.getvalue()


def dataset_from_csv(text) -> list[DoASample]:
    rows = csv.DictReader(io.StringIO(text))
    missing = set(CSV_COLUMNS) - set(rows.fieldnames or ())
    if missing:
        raise ValueError(f"dataset is missing columns: {', '.join(sorted(missing))}")
    return [
        DoASample(int(r["index"]), float(r["x_m"]), float(r["y_m"]), float(r["D_m"]),
                  math.radians(float(r["theta_az_true_deg"])), math.radians(float(r["theta_el_true_deg"])),
                  math.radians(float(r["theta_az_est_deg"])), math.radians(float(r["theta_el_est_deg"])),
                  r["flags"])
        for r in rows
    ]
