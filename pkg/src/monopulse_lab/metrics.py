"""S-parameter metric reports and fractional bandwidth."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import FrequencyNotInGrid
from .netkernel import SweepSParams


@dataclass(frozen=True)
class Criteria:
    """Pass limits; ``None`` disables a check."""

    min_return_db: float | None = None
    max_amp_imbalance_db: float | None = 0.5
    max_phase_imbalance_deg: float | None = 10.0


COUPLER_CRITERIA = Criteria(None, 0.5, 10.0)
COMPARATOR_CRITERIA = Criteria(10.0, 0.5, 10.0)


@dataclass(frozen=True)
class MetricSpec:
    """Which entries are transmissions and how they are grouped.

    ``signs[i][j]`` is the ideal sign of the transmission from ``inputs[j]``
    to ``outputs[i]``.  Imbalance is measured inside each group: per input
    (the outputs one drive produces) or per output (the inputs one channel
    combines).  Return loss and isolation cover every entry among the inputs
    and every entry among the outputs.
    """

    inputs: tuple
    outputs: tuple
    signs: tuple
    group_by: str = "input"

    def __post_init__(self):
        if self.group_by not in ("input", "output"):
            raise ValueError("group_by must be 'input' or 'output'")
        if np.shape(self.signs) != (len(self.outputs), len(self.inputs)):
            raise ValueError("signs must have one row per output and one column per input")


COUPLER_SPEC = MetricSpec(("Pa", "Pc"), ("Pb", "Pd"), ((1, 1), (-1, 1)), "input")


def comparator_spec() -> MetricSpec:
    from .components import COMPARATOR_INPUTS, COMPARATOR_OUTPUTS, SIGN_MATRIX

    signs = tuple(tuple(int(v) for v in row) for row in SIGN_MATRIX)
    return MetricSpec(COMPARATOR_INPUTS, COMPARATOR_OUTPUTS, signs, "output")


@dataclass(frozen=True)
class MetricsReport:
    f0: float
    return_loss_db: dict
    isolation_db: dict
    transmission_db: dict
    transmission_phase_deg: dict
    criteria: Criteria
    freqs: np.ndarray
    return_pass: np.ndarray
    amplitude_pass: np.ndarray
    phase_pass: np.ndarray
    worst_return_db: np.ndarray
    amp_imbalance_db: np.ndarray
    phase_imbalance_deg: np.ndarray
    band: tuple | None
    bandwidth_pct: float

    @property
    def passing(self) -> np.ndarray:
        return self.return_pass & self.amplitude_pass & self.phase_pass

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["frequency_hz", "worst_return_isolation_db", "amp_imbalance_db",
                    "phase_imbalance_deg", "return_pass", "amplitude_pass", "phase_pass", "pass"])
        for k, f in enumerate(self.freqs):
            w.writerow([f"{f:.9g}", f"{self.worst_return_db[k]:.6f}", f"{self.amp_imbalance_db[k]:.6f}",
                        f"{self.phase_imbalance_deg[k]:.6f}", int(self.return_pass[k]),
                        int(self.amplitude_pass[k]), int(self.phase_pass[k]), int(self.passing[k])])
        return buf.getvalue()

    def summary(self) -> str:
        c = self.criteria
        lines = [f"center frequency: {self.f0:.9g} Hz",
                 "criteria: "
                 f"return/isolation >= {c.min_return_db} dB, "
                 f"amplitude imbalance <= {c.max_amp_imbalance_db} dB, "
                 f"phase imbalance <= {c.max_phase_imbalance_deg} deg"]
        if self.band is None:
            lines.append("bandwidth: 0 % (center frequency fails the criteria)")
        else:
            lines.append(f"bandwidth: {self.bandwidth_pct:.3f} % "
                         f"({self.band[0]:.9g} Hz to {self.band[1]:.9g} Hz)")
        lines.append("return loss at f0 (dB):")
        lines += [f"  {p}: {v:.3f}" for p, v in self.return_loss_db.items()]
        lines.append("isolation at f0 (dB):")
        lines += [f"  {a}-{b}: {v:.3f}" for (a, b), v in self.isolation_db.items()]
        lines.append("transmission at f0 (dB, deg):")
        lines += [f"  {o}<-{i}: {self.transmission_db[(o, i)]:.4f}, {self.transmission_phase_deg[(o, i)]:.3f}"
                  for (o, i) in self.transmission_db]
        return "\n".join(lines) + "\n"


def wrap_deg(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


def _db(x):
    with np.errstate(divide="ignore"):
        return 20.0 * np.log10(np.abs(x))


def contiguous_band(freqs, passing, f0):
    """Widest run of passing grid points that contains f0; None if f0 fails."""
    k0 = int(np.argmin(np.abs(freqs - f0)))
    if not passing[k0]:
        return None
    lo = k0
    while lo > 0 and passing[lo - 1]:
        lo -= 1
    hi = k0
    while hi < len(passing) - 1 and passing[hi + 1]:
        hi += 1
    return float(freqs[lo]), float(freqs[hi])


def metrics(s: SweepSParams, criteria: Criteria, spec: MetricSpec, f0: float) -> MetricsReport:
    """Evaluate ``criteria`` at every frequency and report the band around f0."""
    k0 = s.index_of(f0)
    if k0 is None:
        raise FrequencyNotInGrid(f"{f0:.9g} Hz is not a grid frequency")
    ii = [s.port(p) for p in spec.inputs]
    oo = [s.port(p) for p in spec.outputs]
    signs = np.asarray(spec.signs, dtype=float)

    t = s.s[:, oo][:, :, ii]                       # (F, outputs, inputs)
    amp = _db(t)
    dev = np.degrees(np.angle(t * signs))          # sign removed: ideal group is co-phased
    if spec.group_by == "input":
        amp, dev = np.swapaxes(amp, 1, 2), np.swapaxes(dev, 1, 2)
    # groups are now the last axis
    amp_imb = (amp.max(-1) - amp.min(-1)).max(-1)
    rel = wrap_deg(dev - dev[..., :1])
    ph_imb = (rel.max(-1) - rel.min(-1)).max(-1)

    def block(ports):
        sub = s.s[:, ports][:, :, ports]
        return -_db(sub).max(axis=(1, 2))          # smallest return/isolation

    worst = np.minimum(block(ii), block(oo))
    ones = np.ones(len(s.freqs), dtype=bool)
    rp = ones if criteria.min_return_db is None else worst >= criteria.min_return_db
    ap = ones if criteria.max_amp_imbalance_db is None else amp_imb <= criteria.max_amp_imbalance_db
    pp = ones if criteria.max_phase_imbalance_deg is None else ph_imb <= criteria.max_phase_imbalance_deg

    band = contiguous_band(s.freqs, rp & ap & pp, f0)
    bw = 0.0 if band is None else 100.0 * (band[1] - band[0]) / f0

    names = s.port_names
    s0 = s.s[k0]
    rl = {names[p]: float(-_db(s0[p, p])) for p in ii + oo}
    iso = {}
    for group in (ii, oo):
        for a in group:
            for b in group:
                if a < b:
                    iso[(names[a], names[b])] = float(-_db(s0[b, a]))
    tdb, tph = {}, {}
    for o in oo:
        for i in ii:
            tdb[(names[o], names[i])] = float(_db(s0[o, i]))
            tph[(names[o], names[i])] = float(np.degrees(np.angle(s0[o, i])))
    return MetricsReport(f0, rl, iso, tdb, tph, criteria, s.freqs.copy(), rp, ap, pp,
                         worst, amp_imb, ph_imb, band, bw)
