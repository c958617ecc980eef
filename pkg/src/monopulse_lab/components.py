"""Parametric circuit generators, analytic oracles and the crossover solver.

Port conventions
----------------
Rat-race couplers expose ``Pa`` (difference input), ``Pb``, ``Pc`` (sum
input) and ``Pd``.  Driving ``Pa`` gives anti-phase outputs at Pb/Pd,
driving ``Pc`` gives in-phase outputs.

The crossover exposes ``P1``..``P4`` at the corners of its outer ring
(P1 top-left, P2 top-right, P3 bottom-right, P4 bottom-left); signals pass
diagonally, P1 <-> P3 and P2 <-> P4.

Crossover topology
------------------
The outer ring is four corner-to-corner branches, each made of two
(Zx, theta_x) sections meeting at a midpoint tap.  The inner lines are four
(Zy, theta_y) arms from the taps to a common center, forming a "+" across
the ring.  Both mirror planes pass through the center and two opposite
taps.  With theta_x = theta_y = 90 deg this is an ideal crossover at f0
for any Zx, Zy, and the diagonal path through the ring is 360 deg.

Port-transformation coupler topology
------------------------------------
Three quarter-wave ring sections (Z1 = sqrt(2) z0) join Pa-Pb-Pc-Pd.  The
remaining 270 deg arc runs Pd -> 45 deg -> crossover P1 => P3 -> phase
shifter (z_eta, 2 x 90 deg) -> P2 => P4 -> 45 deg -> Pa.  The arc passes
through the crossover twice, which folds the ring so that the input
ports share a side.  Each crossover pass adds 360 deg, so at f0 the arc is
electrically identical to the conventional one.  The bisecting plane maps
Pa <-> Pd and Pb <-> Pc and cuts the phase shifter at its midpoint.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import NoSolutionFound, PoleAtFrequency
from .netkernel import (
    SINGULAR_TOL,
    AbcdMatrix,
    TLineSection,
    abcd_to_s,
    cascade,
    line_sparams,
    shunt_abcd,
    stub_admittance,
    terminate,
    tline_abcd,
)
from .netlist import GraphBuilder, NetworkGraph

SQRT2 = math.sqrt(2.0)

# comparator port roles: inputs A..D, outputs sum, azimuth, elevation, diagonal
COMPARATOR_INPUTS = ("P1", "P2", "P3", "P4")
COMPARATOR_OUTPUTS = ("P5", "P6", "P7", "P8")
SIGN_MATRIX = np.array(
    [
        [1, 1, 1, 1],     # sum      = A + B + C + D
        [1, -1, 1, -1],   # delta_az = (A + C) - (B + D)
        [1, 1, -1, -1],   # delta_el = (A + B) - (C + D)
        [1, -1, -1, 1],   # delta_del = (A + D) - (B + C)
    ],
    dtype=float,
)


@dataclass(frozen=True)
class CrossoverParams:
    z_x: float = 57.0
    z_y: float = 50.0
    theta_x: float = 90.0
    theta_y: float = 90.0

    def __post_init__(self):
        if self.z_x <= 0 or self.z_y <= 0:
            raise ValueError("crossover impedances must be positive")
        for t in (self.theta_x, self.theta_y):
            if not 0 < t < 180:
                raise ValueError("crossover angles must lie in (0, 180) degrees")


@dataclass(frozen=True)
class CouplerParams:
    f0: float = 2.0e9
    z0: float = 50.0
    z_eta: float | None = None
    loss_db: float = 0.0
    crossover: CrossoverParams = field(default_factory=CrossoverParams)

    def __post_init__(self):
        if self.f0 <= 0 or self.z0 <= 0:
            raise ValueError("f0 and z0 must be positive")
        if self.z_eta is None:
            object.__setattr__(self, "z_eta", self.z0)
        if self.z_eta <= 0:
            raise ValueError("z_eta must be positive")
        if self.loss_db < 0:
            raise ValueError("loss_db must be non-negative")

    @property
    def z1(self):
        return SQRT2 * self.z0


# ---------------------------------------------------------------------------
# generators

def gen_conventional_ratrace(f0=2.0e9, z0=50.0, loss_db=0.0) -> NetworkGraph:
    """1.5 wavelength ring: Pa-Pb-Pc-Pd quarter-wave arcs, Pd-Pa 270 deg arc."""
    if f0 <= 0 or z0 <= 0:
        raise ValueError("f0 and z0 must be positive")
    z1 = SQRT2 * z0
    g = GraphBuilder(f"conventional rat-race, f0={f0!r} Hz, z0={z0!r} ohm")
    g.node("a", "b", "c", "d", "r1", "r2")
    for label, node in (("Pa", "a"), ("Pb", "b"), ("Pc", "c"), ("Pd", "d")):
        g.port(label, node)
    path = ["a", "b", "c", "d", "r1", "r2", "a"]
    for k in range(6):
        g.tline(f"R{k + 1}", path[k], path[k + 1], z1, 90.0, loss_db)
    return g.build()


def _crossover_into(g: GraphBuilder, p: CrossoverParams, loss_db, prefix, corners):
    """Add crossover sections to ``g`` between the four given corner nodes."""
    mids = [f"{prefix}m{k}" for k in ("t", "r", "b", "l")]
    center = f"{prefix}c"
    g.node(*mids, center)
    c1, c2, c3, c4 = corners
    ring = [c1, mids[0], c2, mids[1], c3, mids[2], c4, mids[3], c1]
    for k in range(8):
        g.tline(f"{prefix}X{k + 1}", ring[k], ring[k + 1], p.z_x, p.theta_x, loss_db)
    for k, m in enumerate(mids):
        g.tline(f"{prefix}Y{k + 1}", m, center, p.z_y, p.theta_y, loss_db)


def gen_crossover(p: CrossoverParams = CrossoverParams(), f0=2.0e9, z0=50.0, loss_db=0.0) -> NetworkGraph:
    g = GraphBuilder(
        f"360-degree crossover, Zx={p.z_x!r} Zy={p.z_y!r} theta_x={p.theta_x!r} "
        f"theta_y={p.theta_y!r}, f0={f0!r} Hz, z0={z0!r} ohm"
    )
    corners = ("k1", "k2", "k3", "k4")
    g.node(*corners)
    for k, node in enumerate(corners, start=1):
        g.port(f"P{k}", node)
    _crossover_into(g, p, loss_db, "", corners)
    return g.build()


def _pt_coupler_into(g: GraphBuilder, p: CouplerParams, prefix: str):
    a, b, c, d = (f"{prefix}{n}" for n in "abcd")
    k1, k2, k3, k4 = (f"{prefix}k{i}" for i in range(1, 5))
    eta_mid = f"{prefix}e"
    g.node(a, b, c, d, k1, k2, k3, k4, eta_mid)
    z1, loss = p.z1, p.loss_db
    g.tline(f"{prefix}R1", a, b, z1, 90.0, loss)
    g.tline(f"{prefix}R2", b, c, z1, 90.0, loss)
    g.tline(f"{prefix}R3", c, d, z1, 90.0, loss)
    # quarter-wave arc split in two around the crossover
    g.tline(f"{prefix}L1", d, k1, z1, 45.0, loss)
    g.tline(f"{prefix}L2", k4, a, z1, 45.0, loss)
    # 180-degree phase shifter as two 90-degree halves meeting on the symmetry plane
    g.tline(f"{prefix}E1", k3, eta_mid, p.z_eta, 90.0, loss)
    g.tline(f"{prefix}E2", eta_mid, k2, p.z_eta, 90.0, loss)
    _crossover_into(g, p.crossover, loss, f"{prefix}x", (k1, k2, k3, k4))
    return {"Pa": a, "Pb": b, "Pc": c, "Pd": d}


def gen_pt_coupler(p: CouplerParams = CouplerParams()) -> NetworkGraph:
    g = GraphBuilder(
        f"port-transformation rat-race, f0={p.f0!r} Hz, z0={p.z0!r} ohm, "
        f"z_eta={p.z_eta!r} ohm, loss={p.loss_db!r} dB/wavelength"
    )
    for label, node in _pt_coupler_into(g, p, "").items():
        g.port(label, node)
    return g.build()


def gen_comparator(f0=2.0e9, z0=50.0, z_eta=None, loss_db=0.0,
                   crossover: CrossoverParams = CrossoverParams(), link_theta=360.0) -> NetworkGraph:
    """8-port comparator: four port-transformation couplers and one crossover.

    Stage 1: H1 takes A (P1) and B (P2), H2 takes C (P3) and D (P4) on their
    Pb/Pd ports.  The crossover swaps H1's difference and H2's sum so that
    stage 2 sees H3 <- (sum1, sum2) and H4 <- (diff1, diff2).  The two
    uncrossed links are ``link_theta`` degree z0 lines matching the
    crossover's 360 degree delay.
    Outputs: P5 sum, P6 delta_az, P7 delta_el, P8 delta_del.
    """
    p = CouplerParams(f0, z0, z_eta, loss_db, crossover)
    g = GraphBuilder(
        f"monopulse comparator, f0={f0!r} Hz, z0={z0!r} ohm, z_eta={p.z_eta!r} ohm, "
        f"loss={loss_db!r} dB/wavelength"
    )
    h = {k: _pt_coupler_into(g, p, f"H{k}") for k in (1, 2, 3, 4)}
    g.port("P1", h[1]["Pb"])
    g.port("P2", h[1]["Pd"])
    g.port("P3", h[2]["Pb"])
    g.port("P4", h[2]["Pd"])
    # crossover corners: P1 <- diff1, P3 -> H4.Pb, P2 <- sum2, P4 -> H3.Pd
    _crossover_into(g, crossover, loss_db, "CX", (h[1]["Pa"], h[2]["Pc"], h[4]["Pb"], h[3]["Pd"]))
    g.tline("LS", h[1]["Pc"], h[3]["Pb"], z0, link_theta, loss_db)
    g.tline("LD", h[2]["Pa"], h[4]["Pd"], z0, link_theta, loss_db)
    g.port("P5", h[3]["Pc"])
    g.port("P6", h[4]["Pc"])
    g.port("P7", h[3]["Pa"])
    g.port("P8", h[4]["Pa"])
    return g.build()


# ---------------------------------------------------------------------------
# analytic oracles

def _vi(abcd: AbcdMatrix, v, i):
    return abcd.a * v + abcd.b * i, abcd.c * v + abcd.d * i


def _load(kind, shape):
    one, zero = np.ones(shape, dtype=complex), np.zeros(shape, dtype=complex)
    return (one, zero) if kind == "open" else (zero, one)


def fourmode_reflections(p: CrossoverParams, f, z0=50.0, f0=2.0e9, loss_db=0.0):
    """Quarter-circuit reflections {ee, eo, oe, oo} seen at a crossover port.

    The first letter is the mode of the plane through the top/bottom taps
    (mapping P1 <-> P2), the second that of the plane through the left/right
    taps (mapping P1 <-> P4).  Each quarter holds two (Zx, theta_x) branches
    from the port to the taps.  A tap on an odd plane is shorted; on an even
    plane it carries half an arm, i.e. a (2 Zy, theta_y) line ending at the
    center, which is open only when both planes are even.
    """
    f = np.asarray(f, dtype=float)
    outer = tline_abcd(TLineSection(p.z_x, p.theta_x, loss_db), f, f0)
    arm = tline_abcd(TLineSection(2 * p.z_y, p.theta_y, loss_db), f, f0)
    out = {}
    for mode in ("ee", "eo", "oe", "oo"):
        center = "open" if mode == "ee" else "short"
        branches = []
        for plane in mode:  # tap on first plane, then tap on second plane
            if plane == "o":
                v, i = _load("short", f.shape)
            else:
                v, i = _vi(arm, *_load(center, f.shape))
            branches.append(_vi(outer, v, i))
        (v1, i1), (v2, i2) = branches
        num = v1 * v2 - z0 * (i1 * v2 + i2 * v1)
        den = v1 * v2 + z0 * (i1 * v2 + i2 * v1)
        if np.any(np.abs(den) < SINGULAR_TOL):
            raise PoleAtFrequency(f"quarter circuit {mode} reflection undefined")
        out[mode] = num / den
    return out


def fourmode_crossover_s(p: CrossoverParams, f, z0=50.0, f0=2.0e9, loss_db=0.0) -> np.ndarray:
    """4-port S (P1..P4) from the four quarter-circuit reflections; shape (..., 4, 4)."""
    g = fourmode_reflections(p, f, z0, f0, loss_db)
    ee, eo, oe, oo = g["ee"], g["eo"], g["oe"], g["oo"]
    a = (ee + eo + oe + oo) / 4      # reflection
    b = (ee + eo - oe - oo) / 4      # to the mirror across the first plane (P1 -> P2)
    c = (ee - eo + oe - oo) / 4      # to the mirror across the second plane (P1 -> P4)
    d = (ee - eo - oe + oo) / 4      # diagonal (P1 -> P3)
    rows = [[a, b, d, c], [b, a, c, d], [d, c, a, b], [c, d, b, a]]
    return np.stack([np.stack(r, -1) for r in rows], -2)


def pt_half_circuit(p: CouplerParams, f, mode: str):
    """ABCD factors of the even ("e") or odd ("o") half circuit, Pb side first.

    Returns (y_pb_stub, ring_section, y_pa_stub, plane_termination).  The
    Pb-side stub is the bisected Pb-Pc arc (Z1, 45 deg).  The Pa-side stub is
    the 45 deg split section, the bisected crossover and half of the phase
    shifter, terminated at the symmetry plane by ``plane_termination``.
    """
    if mode not in ("e", "o"):
        raise ValueError("mode must be 'e' or 'o'")
    f = np.asarray(f, dtype=float)
    term = "open" if mode == "e" else "short"
    z1, z0, loss = p.z1, p.z0, p.loss_db
    y_b = stub_admittance(TLineSection(z1, 45.0, loss), term, f, p.f0)
    ring = tline_abcd(TLineSection(z1, 90.0, loss), f, p.f0)

    sign = 1.0 if mode == "e" else -1.0
    x = fourmode_crossover_s(p.crossover, f, z0, p.f0, loss)
    # half crossover seen from P4 (toward Pa) to P3 (toward the phase shifter)
    half = np.stack(
        [
            np.stack([x[..., 3, 3] + sign * x[..., 3, 0], x[..., 3, 2] + sign * x[..., 3, 1]], -1),
            np.stack([x[..., 2, 3] + sign * x[..., 2, 0], x[..., 2, 2] + sign * x[..., 2, 1]], -1),
        ],
        -2,
    )
    eta_half = line_sparams(TLineSection(p.z_eta, 90.0, loss), np.atleast_1d(f), p.f0, z0)
    eta_half = eta_half.reshape(f.shape + (2, 2))
    gamma = terminate(eta_half, 1.0 if term == "open" else -1.0)
    gamma = terminate(half, gamma)
    split = line_sparams(TLineSection(z1, 45.0, loss), np.atleast_1d(f), p.f0, z0).reshape(f.shape + (2, 2))
    gamma = terminate(split, gamma)
    if np.any(np.abs(1 + gamma) < SINGULAR_TOL):
        raise PoleAtFrequency("Pa-side composite stub admittance is singular")
    y_a = (1 - gamma) / (1 + gamma) / z0
    return y_b, ring, y_a, term


def half_circuit_abcd(p: CouplerParams, f, mode: str) -> AbcdMatrix:
    y_b, ring, y_a, _ = pt_half_circuit(p, f, mode)
    return cascade(cascade(shunt_abcd(y_b), ring), shunt_abcd(y_a))


def evenodd_ratrace_s(p: CouplerParams, f) -> np.ndarray:
    """Analytic 4-port S (Pa, Pb, Pc, Pd) of the port-transformation coupler.

    Even and odd half circuits run Pb -> Pa; the bisection maps Pa <-> Pd
    and Pb <-> Pc, so the mirror entries are half-differences of the modes.
    """
    f = np.asarray(f, dtype=float)
    se = abcd_to_s(half_circuit_abcd(p, f, "e"), p.z0)
    so = abcd_to_s(half_circuit_abcd(p, f, "o"), p.z0)
    # half-circuit port 1 = Pb, port 2 = Pa
    bb = (se[..., 0, 0] + so[..., 0, 0]) / 2
    bc = (se[..., 0, 0] - so[..., 0, 0]) / 2
    aa = (se[..., 1, 1] + so[..., 1, 1]) / 2
    ad = (se[..., 1, 1] - so[..., 1, 1]) / 2
    ab = (se[..., 1, 0] + so[..., 1, 0]) / 2
    ac = (se[..., 1, 0] - so[..., 1, 0]) / 2
    # order Pa, Pb, Pc, Pd; mirror: Pd behaves as Pa, Pc as Pb
    rows = [
        [aa, ab, ac, ad],
        [ab, bb, bc, ac],
        [ac, bc, bb, ab],
        [ad, ac, ab, aa],
    ]
    return np.stack([np.stack(r, -1) for r in rows], -2)


def conventional_half_circuit_abcd(z0, f, f0, mode, loss_db=0.0) -> AbcdMatrix:
    """Textbook rat-race half circuit: 45 deg stub, 90 deg ring, 135 deg stub."""
    term = "open" if mode == "e" else "short"
    z1 = SQRT2 * z0
    y_b = stub_admittance(TLineSection(z1, 45.0, loss_db), term, f, f0)
    y_a = stub_admittance(TLineSection(z1, 135.0, loss_db), term, f, f0)
    ring = tline_abcd(TLineSection(z1, 90.0, loss_db), f, f0)
    return cascade(cascade(shunt_abcd(y_b), ring), shunt_abcd(y_a))


# ---------------------------------------------------------------------------
# crossover design conditions

@dataclass(frozen=True)
class CrossoverCandidate:
    params: CrossoverParams
    reflection_db: float
    isolation_db: float
    thru_db: float
    thru_phase_deg: float
    passed: bool


def _db(x):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(x))


def check_crossover(p: CrossoverParams, z0=50.0, f0=2.0e9, reject_db=-40.0, thru_min_db=-0.01) -> CrossoverCandidate:
    s = fourmode_crossover_s(p, f0, z0, f0)
    refl = float(_db(s[0, 0]))
    iso = float(max(_db(s[1, 0]), _db(s[3, 0])))
    thru = float(_db(s[2, 0]))
    phase = float(np.degrees(np.angle(s[2, 0])))
    ok = refl <= reject_db and iso <= reject_db and thru >= thru_min_db
    return CrossoverCandidate(p, refl, iso, thru, phase, bool(ok))


def printed_condition_residuals(theta_x, z_x, z0=50.0):
    """Left-hand sides of the two printed closed-form crossover conditions.

    Returned only as a cross-check; the design verdict comes from the full
    network.  ``tan`` is evaluated directly, so at exactly 90 deg the values
    reflect the floating-point tangent (about 1.6e16).
    """
    t = math.tan(math.radians(theta_x))
    first = t * t + 2 * (1 - t * t) * (z0 / z_x)
    rad = 2 * t ** 4 - 2 * t ** 2
    den = t ** 3 - 3 * t
    second = (2 * math.sqrt(rad) / den) if rad >= 0 and den != 0 else float("nan")
    return {"first": first, "second": second, "first_zx_at_theta_limit": 2 * z0}


def solve_crossover_conditions(z0=50.0, f0=2.0e9, z_y=None, theta_y=90.0,
                               theta_range=(5.0, 175.0), z_range=(20.0, 150.0),
                               theta_step=1.0, z_step=1.0, reject_db=-40.0, thru_min_db=-0.01):
    """Scan (theta_x, Zx) with theta_y fixed and return verified crossovers.

    For each Zx on the grid, the worst unwanted coupling is minimized over
    theta_x starting from every local minimum found on the scan; refined
    points that pass the full-model check are returned in scan order.
    """
    if z0 <= 0:
        raise ValueError("z0 must be positive")
    z_y = z0 if z_y is None else z_y
    thetas = np.arange(theta_range[0] + theta_step, theta_range[1], theta_step)
    zs = np.arange(z_range[0] + z_step, z_range[1], z_step)

    def residual(theta_x, z_x):
        s = fourmode_crossover_s(CrossoverParams(z_x, z_y, theta_x, theta_y), f0, z0, f0)
        return max(abs(s[0, 0]), abs(s[1, 0]), abs(s[3, 0]))

    out = []
    for z_x in zs:
        r = np.array([residual(t, z_x) for t in thetas])
        minima = [k for k in range(1, len(r) - 1) if r[k] <= r[k - 1] and r[k] <= r[k + 1]]
        for k in minima:
            res = minimize_scalar(lambda t: residual(t, z_x), bounds=(thetas[k - 1], thetas[k + 1]),
                                  method="bounded", options={"xatol": 1e-10})
            theta_x = float(np.round(res.x, 9))
            cand = check_crossover(CrossoverParams(float(z_x), z_y, theta_x, theta_y), z0, f0, reject_db, thru_min_db)
            if cand.passed:
                out.append(cand)
    if not out:
        raise NoSolutionFound("no crossover design met the verification tolerance on the scan grid")
    return out
