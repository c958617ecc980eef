"""2x2 monopulse array: steering vectors, channel formation and pattern cuts.

Coordinates: z is boresight, y is elevation (up) and x is azimuth, pointing
to the left when viewed from behind the aperture (right-handed frame).
Elements sit at A (+x, +y), B (-x, +y), C (+x, -y), D (-x, -y), i.e. A is
top-left and D bottom-right as seen from the receiver side.

Directions are given as an azimuth and an elevation angle whose sines are
the direction cosines along x and y.  On the phi = 0 cut the elevation
angle is zero, on the phi = 90 cut the azimuth angle is zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .components import COMPARATOR_INPUTS, COMPARATOR_OUTPUTS, SIGN_MATRIX
from .errors import FrequencyNotInGrid, NoMainLobe
from .netkernel import SweepSParams

C0 = 299_792_458.0
F_OP = 1.95e9
CHANNELS = ("sum", "delta_az", "delta_el", "delta_del")


def wavelength(f):
    return C0 / f


@dataclass(frozen=True)
class ArrayGeometry:
    """Element spacings (m), operating frequency and element model.

    ``element_model`` is ``"isotropic"`` or ``"cosine"`` (amplitude
    cos(angle off boresight) ** q).
    """

    d_az: float = 0.70 * C0 / F_OP
    d_el: float = 0.55 * C0 / F_OP
    f_op: float = F_OP
    element_model: str = "cosine"
    q: float = 1.2

    def __post_init__(self):
        if self.d_az <= 0 or self.d_el <= 0:
            raise ValueError("element spacings must be positive")
        if self.f_op <= 0:
            raise ValueError("operating frequency must be positive")
        if self.element_model not in ("isotropic", "cosine"):
            raise ValueError(f"unknown element model {self.element_model!r}")
        if self.q < 0:
            raise ValueError("q must be non-negative")

    @property
    def positions(self) -> np.ndarray:
        hx, hy = self.d_az / 2, self.d_el / 2
        return np.array([[hx, hy], [-hx, hy], [hx, -hy], [-hx, -hy]])

    def element_factor(self, theta_az, theta_el):
        if self.element_model == "isotropic":
            return np.ones(np.broadcast(theta_az, theta_el).shape)
        u, v = np.sin(theta_az), np.sin(theta_el)
        w = np.sqrt(np.clip(1.0 - u * u - v * v, 0.0, None))
        return w ** self.q


def steering_vector(geom: ArrayGeometry, theta_az, theta_el, f=None) -> np.ndarray:
    """Element signals (A, B, C, D) for a unit plane wave; angles in degrees.

    Broadcasts over the angle arguments, with the element index last.
    """
    f = geom.f_op if f is None else f
    az, el = np.radians(theta_az), np.radians(theta_el)
    k = 2 * math.pi * f / C0
    u, v = np.sin(az)[..., None], np.sin(el)[..., None]
    pos = geom.positions
    phase = k * (pos[:, 0] * u + pos[:, 1] * v)
    return np.exp(1j * phase) * geom.element_factor(az, el)[..., None]


def ideal_channels(x) -> np.ndarray:
    """(sum, delta_az, delta_el, delta_del) from element signals (A, B, C, D)."""
    return np.asarray(x) @ SIGN_MATRIX.T


def comparator_block(s: SweepSParams, f) -> np.ndarray:
    """4x4 transmission block, rows = outputs (P5..P8), cols = inputs (P1..P4)."""
    k = s.index_of(f)
    if k is None:
        raise FrequencyNotInGrid(f"{f:.9g} Hz is not in the comparator sweep")
    oo = [s.port(p) for p in COMPARATOR_OUTPUTS]
    ii = [s.port(p) for p in COMPARATOR_INPUTS]
    return s.s[k][np.ix_(oo, ii)]


def network_channels(s, geom: ArrayGeometry, theta_az, theta_el, f=None) -> np.ndarray:
    """Channels through a comparator (``SweepSParams`` or a 4x4 block)."""
    f = geom.f_op if f is None else f
    t = comparator_block(s, f) if isinstance(s, SweepSParams) else np.asarray(s)
    return steering_vector(geom, theta_az, theta_el, f) @ t.T


def perturb_block(t, amp_db, phase_deg, rng) -> np.ndarray:
    """Scale every transmission by uniform errors within +-amp_db and +-phase_deg."""
    a = amp_db * rng.uniform(-1.0, 1.0, t.shape)
    p = phase_deg * rng.uniform(-1.0, 1.0, t.shape)
    return t * 10.0 ** (a / 20.0) * np.exp(1j * np.radians(p))


@dataclass(frozen=True)
class ChannelPatterns:
    theta: np.ndarray
    phi: np.ndarray
    fields: dict          # channel -> complex array (phi, theta)


def channel_patterns(s, geom, theta=None, phi=(0.0, 90.0), f=None) -> ChannelPatterns:
    """Complex fields on (phi, theta) cuts, scaled so the largest |sum| is 1."""
    theta = default_theta() if theta is None else np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    th, ph = np.meshgrid(theta, phi)
    az, el = _cut_angles(th, ph)
    ch = network_channels(s, geom, az, el, f)
    peak = np.max(np.abs(ch[..., 0]))
    return ChannelPatterns(theta, phi, {name: ch[..., i] / peak for i, name in enumerate(CHANNELS)})


def default_theta(step=0.25):
    n = int(round(180 / step))
    return np.linspace(-90.0, 90.0, n + 1)


def _cut_angles(theta, phi):
    # direction cosines u = sin(t) cos(phi), v = sin(t) sin(phi)
    st = np.sin(np.radians(theta))
    u = st * np.cos(np.radians(phi))
    v = st * np.sin(np.radians(phi))
    return np.degrees(np.arcsin(u)), np.degrees(np.arcsin(v))


@dataclass(frozen=True)
class PatternCut:
    theta: np.ndarray
    gain_db: np.ndarray
    channel: str = "sum"
    phi: float = 0.0


def cut_pattern(s, geom, phi=0.0, channel="sum", f=None, theta=None) -> PatternCut:
    """|channel| in dB relative to the sum peak on the same cut."""
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    theta = default_theta() if theta is None else np.asarray(theta, dtype=float)
    az, el = _cut_angles(theta, np.full_like(theta, phi))
    ch = network_channels(s, geom, az, el, f)
    ref = np.max(np.abs(ch[:, 0]))
    with np.errstate(divide="ignore"):
        g = 20 * np.log10(np.abs(ch[:, CHANNELS.index(channel)]) / ref)
    return PatternCut(theta, g, channel, float(phi))


@dataclass(frozen=True)
class PatternMetrics:
    hpbw: float
    sll: float
    null_depth: float
    peak_direction: float


def _crossing(x0, y0, x1, y1, level):
    return x0 + (level - y0) * (x1 - x0) / (y1 - y0)


def pattern_metrics(cut: PatternCut) -> PatternMetrics:
    """Half-power beamwidth, side-lobe level and boresight null depth (dB)."""
    th, g = cut.theta, np.maximum(cut.gain_db, -400.0)
    k = int(np.argmax(g))
    peak = g[k]
    level = peak - 3.0
    lo = k
    while lo > 0 and g[lo] > level:
        lo -= 1
    hi = k
    while hi < len(g) - 1 and g[hi] > level:
        hi += 1
    if g[lo] > level or g[hi] > level:
        raise NoMainLobe("no -3 dB crossing on both sides of the peak")
    left = _crossing(th[lo], g[lo], th[lo + 1], g[lo + 1], level)
    right = _crossing(th[hi - 1], g[hi - 1], th[hi], g[hi], level)

    # main lobe extends to the first local minima on either side
    a = lo
    while a > 0 and g[a - 1] <= g[a]:
        a -= 1
    b = hi
    while b < len(g) - 1 and g[b + 1] <= g[b]:
        b += 1
    inner = np.arange(1, len(g) - 1)
    maxima = inner[(g[inner] >= g[inner - 1]) & (g[inner] >= g[inner + 1])]
    side = [g[m] for m in maxima if m < a or m > b]
    for edge in (0, len(g) - 1):
        if (edge < a or edge > b) and (edge == 0 and g[0] > g[1] or edge > 0 and g[-1] > g[-2]):
            side.append(g[edge])
    sll = float(peak - max(side)) if side else math.inf
    z = int(np.argmin(np.abs(th)))
    return PatternMetrics(float(right - left), sll, float(peak - g[z]), float(th[k]))


def null_depth_monte_carlo(t, geom: ArrayGeometry, amp_db, phase_deg, draws=200, seed=0,
                           channel="delta_az", phi=0.0, theta=None) -> np.ndarray:
    """Boresight null depths (dB) for ``draws`` perturbed copies of block ``t``."""
    rng = np.random.default_rng(seed)
    out = np.empty(draws)
    for k in range(draws):
        cut = cut_pattern(perturb_block(t, amp_db, phase_deg, rng), geom, phi, channel, theta=theta)
        out[k] = pattern_metrics(cut).null_depth
    return out
