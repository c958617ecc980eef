"""Ideal TEM transmission-line networks.

Element matrices, ABCD <-> S conversion, multiport interconnection on
S-matrices at a fixed real reference impedance, and frequency sweeps of
netlist graphs.

Port indices in this module are 0-based.  Frequencies are in Hz, angles
of sections are degrees at the design frequency ``f0`` and scale as
``theta(f) = theta0 * f / f0``.
"""

from __future__ import annotations

import os
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateNetwork,
    GridMismatch,
    PoleAtFrequency,
    PortOutOfRange,
    SingularJunction,
)

# Single fixed tolerance for every near-zero denominator in this module.
SINGULAR_TOL = 1e-15
NEPER_PER_DB = np.log(10.0) / 20.0
THREADS_ENV = "MONOPULSE_LAB_THREADS"


@dataclass(frozen=True)
class TLineSection:
    """A uniform TEM line: impedance in ohms, length in degrees at f0.

    ``loss_db`` is the attenuation in dB per 360 degrees of electrical length.
    """

    z_char: float
    theta0: float
    loss_db: float = 0.0

    def __post_init__(self):
        if not self.z_char > 0:
            raise ValueError(f"z_char must be positive, got {self.z_char}")
        if not self.theta0 > 0:
            raise ValueError(f"theta0 must be positive, got {self.theta0}")
        if not self.loss_db >= 0:
            raise ValueError(f"loss_db must be non-negative, got {self.loss_db}")

    def gamma_l(self, f, f0):
        """Complex propagation exponent alpha + j*theta (nepers + radians) at f."""
        theta = np.radians(self.theta0) * np.asarray(f, dtype=float) / f0
        alpha = self.loss_db * NEPER_PER_DB * theta / (2 * np.pi)
        return alpha + 1j * theta


@dataclass(frozen=True)
class FrequencyGrid:
    f0: float
    f_start: float
    f_stop: float
    n_points: int

    def __post_init__(self):
        if not self.f0 > 0:
            raise ValueError("f0 must be positive")
        if not 0 < self.f_start < self.f_stop:
            raise ValueError("need 0 < f_start < f_stop")
        if self.n_points < 2:
            raise ValueError("n_points must be at least 2")

    @classmethod
    def centered(cls, f0, span_fraction=0.5, n_points=1001):
        """Grid of ``n_points`` spanning f0*(1 -/+ span_fraction/2)."""
        half = 0.5 * span_fraction * f0
        return cls(f0, f0 - half, f0 + half, n_points)

    @property
    def freqs(self) -> np.ndarray:
        return np.linspace(self.f_start, self.f_stop, self.n_points)


@dataclass(frozen=True)
class AbcdMatrix:
    """Two-port chain matrix.  Entries may be scalars or same-shape arrays."""

    a: complex
    b: complex
    c: complex
    d: complex

    @classmethod
    def identity(cls):
        return cls(1.0 + 0j, 0j, 0j, 1.0 + 0j)

    @classmethod
    def from_array(cls, m):
        m = np.asarray(m)
        return cls(m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1])

    def as_array(self) -> np.ndarray:
        a, b, c, d = np.broadcast_arrays(*(np.asarray(x, dtype=complex) for x in (self.a, self.b, self.c, self.d)))
        return np.stack([np.stack([a, b], -1), np.stack([c, d], -1)], -2)

    def det(self):
        return self.a * self.d - self.b * self.c

    def __matmul__(self, other: "AbcdMatrix") -> "AbcdMatrix":
        return cascade(self, other)


@dataclass(frozen=True)
class SweepSParams:
    """N-port scattering matrices over an ascending frequency grid.

    ``s`` has shape (F, N, N).
    """

    freqs: np.ndarray
    s: np.ndarray
    z_ref: float = 50.0
    port_names: tuple = field(default=())

    def __post_init__(self):
        freqs = np.asarray(self.freqs, dtype=float)
        s = np.asarray(self.s, dtype=complex)
        if s.ndim != 3 or s.shape[1] != s.shape[2] or s.shape[0] != freqs.shape[0]:
            raise ValueError(f"s must have shape (F, N, N) matching freqs, got {s.shape}")
        if freqs.size > 1 and np.any(np.diff(freqs) <= 0):
            raise ValueError("frequencies must be strictly ascending")
        object.__setattr__(self, "freqs", freqs)
        object.__setattr__(self, "s", s)
        if self.port_names and len(self.port_names) != s.shape[1]:
            raise ValueError("port_names length must equal the port count")
        object.__setattr__(self, "port_names", tuple(self.port_names))

    @property
    def ports(self) -> int:
        return self.s.shape[1]

    def index_of(self, f, rtol=1e-9):
        """Index of grid frequency ``f`` or None."""
        hits = np.flatnonzero(np.isclose(self.freqs, f, rtol=rtol, atol=0.0))
        return int(hits[0]) if hits.size else None

    def port(self, name):
        return self.port_names.index(name)

    def reciprocity_error(self) -> float:
        return float(np.max(np.abs(self.s - np.swapaxes(self.s, 1, 2))))

    def unitarity_error(self) -> float:
        eye = np.eye(self.ports)
        prod = np.conj(np.swapaxes(self.s, 1, 2)) @ self.s
        return float(np.max(np.abs(prod - eye)))

    def subset(self, index) -> "SweepSParams":
        index = np.atleast_1d(index)
        return SweepSParams(self.freqs[index], self.s[index], self.z_ref, self.port_names)


# ---------------------------------------------------------------------------
# element matrices

def tline_abcd(section: TLineSection, f, f0) -> AbcdMatrix:
    gl = section.gamma_l(f, f0)
    z = section.z_char
    ch, sh = np.cosh(gl), np.sinh(gl)
    return AbcdMatrix(ch, z * sh, sh / z, ch)


def stub_admittance(stub: TLineSection, termination: str, f, f0):
    """Input admittance of an open- or short-circuited stub.

    Raises PoleAtFrequency where the admittance is infinite.
    """
    gl = stub.gamma_l(f, f0)
    if termination == "open":
        num, den = np.sinh(gl), np.cosh(gl)
    elif termination == "short":
        num, den = np.cosh(gl), np.sinh(gl)
    else:
        raise ValueError(f"termination must be 'open' or 'short', got {termination!r}")
    bad = np.abs(den) < SINGULAR_TOL
    if np.any(bad):
        idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise PoleAtFrequency(f"{termination} stub admittance is singular", idx)
    return num / den / stub.z_char


def shunt_stub_abcd(stub: TLineSection, termination: str, f, f0) -> AbcdMatrix:
    y = stub_admittance(stub, termination, f, f0)
    one = np.ones_like(y)
    return AbcdMatrix(one, np.zeros_like(y), y, one)


def shunt_abcd(y) -> AbcdMatrix:
    y = np.asarray(y, dtype=complex)
    one = np.ones_like(y)
    return AbcdMatrix(one, np.zeros_like(y), y, one)


def cascade(left: AbcdMatrix, right: AbcdMatrix) -> AbcdMatrix:
    return AbcdMatrix(
        left.a * right.a + left.b * right.c,
        left.a * right.b + left.b * right.d,
        left.c * right.a + left.d * right.c,
        left.c * right.b + left.d * right.d,
    )


def abcd_to_s(m: AbcdMatrix, z_ref=50.0) -> np.ndarray:
    """Two-port S at a real reference impedance; shape (..., 2, 2)."""
    if not z_ref > 0:
        raise ValueError("z_ref must be positive")
    a, b, c, d = (np.asarray(x, dtype=complex) for x in (m.a, m.b, m.c, m.d))
    den = a + b / z_ref + c * z_ref + d
    bad = np.abs(den) < SINGULAR_TOL
    if np.any(bad):
        idx = int(np.flatnonzero(np.atleast_1d(bad))[0])
        raise DegenerateNetwork(f"ABCD to S denominator vanishes (index {idx})")
    s11 = (a + b / z_ref - c * z_ref - d) / den
    s12 = 2 * (a * d - b * c) / den
    s21 = 2 / den
    s22 = (-a + b / z_ref - c * z_ref + d) / den
    s11, s12, s21, s22 = np.broadcast_arrays(s11, s12, s21, s22)
    return np.stack([np.stack([s11, s12], -1), np.stack([s21, s22], -1)], -2)


def s_to_abcd(s, z_ref=50.0) -> AbcdMatrix:
    s = np.asarray(s, dtype=complex)
    s11, s12, s21, s22 = s[..., 0, 0], s[..., 0, 1], s[..., 1, 0], s[..., 1, 1]
    if np.any(np.abs(s21) < SINGULAR_TOL):
        raise DegenerateNetwork("S21 vanishes; no ABCD representation")
    a = ((1 + s11) * (1 - s22) + s12 * s21) / (2 * s21)
    b = z_ref * ((1 + s11) * (1 + s22) - s12 * s21) / (2 * s21)
    c = ((1 - s11) * (1 - s22) - s12 * s21) / (2 * s21 * z_ref)
    d = ((1 - s11) * (1 + s22) + s12 * s21) / (2 * s21)
    return AbcdMatrix(a, b, c, d)


def terminate(s2, gamma_load):
    """Input reflection of a two-port S (port 1) with port 2 loaded by gamma_load."""
    s2 = np.asarray(s2)
    return s2[..., 0, 0] + s2[..., 0, 1] * s2[..., 1, 0] * gamma_load / (1 - s2[..., 1, 1] * gamma_load)


def line_sparams(section: TLineSection, freqs, f0, z_ref=50.0) -> np.ndarray:
    """(F, 2, 2) S-matrices of a line section."""
    return abcd_to_s(tline_abcd(section, np.asarray(freqs, dtype=float), f0), z_ref)


def stub_sparams(stub: TLineSection, termination: str, freqs, f0, z_ref=50.0) -> np.ndarray:
    """(F, 1, 1) reflection of a terminated stub; finite at every frequency."""
    load = {"open": 1.0, "short": -1.0}.get(termination)
    if load is None:
        raise ValueError(f"termination must be 'open' or 'short', got {termination!r}")
    gamma = terminate(line_sparams(stub, freqs, f0, z_ref), load)
    return gamma[:, None, None]


def junction_sparams(n_ports: int, n_freqs: int) -> np.ndarray:
    """Ideal lossless N-way parallel junction of equal reference impedances."""
    s = 2.0 / n_ports * np.ones((n_ports, n_ports)) - np.eye(n_ports)
    return np.broadcast_to(s.astype(complex), (n_freqs, n_ports, n_ports)).copy()


# ---------------------------------------------------------------------------
# interconnection

def _interconnect(s, pairs, freqs=None, relative=False):
    """Join port pairs of a single network; returns (S, remaining port indices).

    Incident waves on joined ports equal the outgoing waves of their partner,
    which gives S_ee + S_ei (G - S_ii)^-1 S_ie with G the pairing matrix.
    """
    n = s.shape[-1]
    inner = [p for pair in pairs for p in pair]
    inner_set = set(inner)
    outer = [p for p in range(n) if p not in inner_set]
    m = len(inner)
    g = np.zeros((m, m))
    for k in range(len(pairs)):
        g[2 * k, 2 * k + 1] = g[2 * k + 1, 2 * k] = 1.0
    s_ii = s[:, inner][:, :, inner]
    w = g - s_ii
    if relative:
        # large systems: a determinant test is scale dependent, use the singular values
        sv = np.linalg.svd(w, compute_uv=False)
        bad = sv[:, -1] < SINGULAR_TOL * sv[:, 0]
    else:
        bad = np.abs(np.linalg.det(w)) < SINGULAR_TOL
    if np.any(bad):
        idx = int(np.flatnonzero(bad)[0])
        freq = None if freqs is None else float(freqs[idx])
        where = f" at {freq:.9g} Hz" if freq is not None else ""
        raise SingularJunction(f"interconnection is singular{where} (frequency index {idx})", idx, freq)
    s_ie = s[:, inner][:, :, outer]
    s_ei = s[:, outer][:, :, inner]
    s_ee = s[:, outer][:, :, outer]
    return s_ee + s_ei @ np.linalg.solve(w, s_ie), outer


def _block_diag(sa, sb):
    f, na, nb = sa.shape[0], sa.shape[1], sb.shape[1]
    out = np.zeros((f, na + nb, na + nb), dtype=complex)
    out[:, :na, :na] = sa
    out[:, na:, na:] = sb
    return out


def connect(a: SweepSParams, b: SweepSParams, joins) -> SweepSParams:
    """Join ports of ``a`` to ports of ``b``.

    ``joins`` is a list of (port_of_a, port_of_b), 0-based.  The remaining
    external ports are renumbered with those of ``a`` first (ascending),
    then those of ``b`` (ascending).
    """
    if a.freqs.shape != b.freqs.shape or not np.array_equal(a.freqs, b.freqs):
        raise GridMismatch("networks are sampled on different frequency grids")
    if a.z_ref != b.z_ref:
        raise GridMismatch(f"reference impedances differ ({a.z_ref} vs {b.z_ref})")
    used_a, used_b = set(), set()
    for pa, pb in joins:
        if not 0 <= pa < a.ports:
            raise PortOutOfRange(f"port {pa} out of range for {a.ports}-port network")
        if not 0 <= pb < b.ports:
            raise PortOutOfRange(f"port {pb} out of range for {b.ports}-port network")
        if pa in used_a or pb in used_b:
            raise PortOutOfRange("a port may take part in at most one join")
        used_a.add(pa)
        used_b.add(pb)
    if a.ports + b.ports - 2 * len(joins) < 1:
        raise PortOutOfRange("at least one external port must remain")
    pairs = [(pa, a.ports + pb) for pa, pb in joins]
    s, outer = _interconnect(_block_diag(a.s, b.s), pairs, a.freqs)
    names = ()
    if a.port_names and b.port_names:
        all_names = a.port_names + b.port_names
        names = tuple(all_names[p] for p in outer)
    return SweepSParams(a.freqs, s, a.z_ref, names)


def innerconnect(a: SweepSParams, joins) -> SweepSParams:
    """Join pairs of ports belonging to the same network."""
    seen = set()
    for p, q in joins:
        for x in (p, q):
            if not 0 <= x < a.ports:
                raise PortOutOfRange(f"port {x} out of range for {a.ports}-port network")
            if x in seen:
                raise PortOutOfRange("a port may take part in at most one join")
            seen.add(x)
    if a.ports - 2 * len(joins) < 1:
        raise PortOutOfRange("at least one external port must remain")
    s, outer = _interconnect(a.s, list(joins), a.freqs)
    names = tuple(a.port_names[p] for p in outer) if a.port_names else ()
    return SweepSParams(a.freqs, s, a.z_ref, names)


# ---------------------------------------------------------------------------
# graph sweep

def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _component_block(comp, freqs, f0, z_ref):
    if comp.kind == "tline":
        return line_sparams(comp.section, freqs, f0, z_ref)
    return stub_sparams(comp.section, comp.kind, freqs, f0, z_ref)


def _plan(graph):
    """Blocks (labels, builder) and the ordered joins that assemble ``graph``."""
    terms = {n: [] for n in graph.nodes}
    blocks = []
    for comp in graph.components:
        labels = [("t", comp.id, 0)] if comp.kind != "tline" else [("t", comp.id, 0), ("t", comp.id, 1)]
        blocks.append((labels, comp))
        for end, node in enumerate(comp.endpoints):
            terms[node].append(("t", comp.id, end))
    port_of = {node: label for label, node in graph.external_ports}
    joins = []
    alias = {}
    for node in sorted(terms):
        here = terms[node]
        label = port_of.get(node)
        if label is not None and len(here) == 1:
            alias[here[0]] = ("x", label)
        elif label is None and len(here) == 1:
            blocks.append(([("o", node)], "open"))
            joins.append((here[0], ("o", node)))
        elif label is None and len(here) == 2:
            joins.append((here[0], here[1]))
        elif len(here) >= 2 or label is not None:
            jl = [("j", node, i) for i in range(len(here))]
            if label is not None:
                jl.append(("x", label))
            if len(jl) == 1:
                blocks.append((jl, "open"))
            else:
                blocks.append((jl, "junction"))
            joins.extend(zip(here, jl))
    blocks = [([alias.get(l, l) for l in labels], kind) for labels, kind in blocks]
    joins = [(alias.get(p, p), alias.get(q, q)) for p, q in joins]
    return blocks, _order_joins(blocks, joins, graph)


def _order_joins(blocks, joins, graph):
    # breadth-first from the first external port keeps the merged frontier small
    owner = {}
    for bi, (labels, _) in enumerate(blocks):
        for l in labels:
            owner[l] = bi
    incident = {bi: [] for bi in range(len(blocks))}
    for ji, (p, q) in enumerate(joins):
        incident[owner[p]].append(ji)
        incident[owner[q]].append(ji)
    start = [owner[("x", lab)] for lab, _ in graph.external_ports if ("x", lab) in owner]
    order, seen_j, seen_b = [], set(), set()
    for root in start + list(range(len(blocks))):
        if root in seen_b:
            continue
        seen_b.add(root)
        queue = deque([root])
        while queue:
            bi = queue.popleft()
            for ji in incident[bi]:
                if ji in seen_j:
                    continue
                seen_j.add(ji)
                order.append(joins[ji])
                p, q = joins[ji]
                for other in (owner[p], owner[q]):
                    if other not in seen_b:
                        seen_b.add(other)
                        queue.append(other)
    return order


def _block_sparams(kind, n_labels, freqs, f0, z_ref):
    if kind == "open":
        return np.ones((freqs.shape[0], 1, 1), dtype=complex)
    if kind == "junction":
        return junction_sparams(n_labels, freqs.shape[0])
    return _component_block(kind, freqs, f0, z_ref)


def _assemble_global(graph, plan, freqs, f0, z_ref):
    # one linear solve over every internal port; only singular for a genuine trapped mode
    blocks, joins = plan
    mats, labels = [], []
    for lab, kind in blocks:
        mats.append(_block_sparams(kind, len(lab), freqs, f0, z_ref))
        labels.extend(lab)
    n = len(labels)
    s = np.zeros((freqs.shape[0], n, n), dtype=complex)
    at = 0
    for m in mats:
        k = m.shape[-1]
        s[:, at:at + k, at:at + k] = m
        at += k
    pos = {l: i for i, l in enumerate(labels)}
    s, outer = _interconnect(s, [(pos[p], pos[q]) for p, q in joins], freqs, relative=True)
    remaining = [labels[i] for i in outer]
    order = [remaining.index(("x", lab)) for lab, _ in graph.external_ports]
    return s[:, order][:, :, order]


def _assemble(graph, plan, freqs, f0, z_ref):
    try:
        return _assemble_incremental(graph, plan, freqs, f0, z_ref)
    except SingularJunction:
        # a partially assembled sub-network can resonate even when the whole does not
        return _assemble_global(graph, plan, freqs, f0, z_ref)


def _assemble_incremental(graph, plan, freqs, f0, z_ref):
    blocks, joins = plan
    nets = {}
    owner = {}
    for bi, (labels, kind) in enumerate(blocks):
        nets[bi] = (_block_sparams(kind, len(labels), freqs, f0, z_ref), list(labels))
        for l in labels:
            owner[l] = bi
    for p, q in joins:
        np_, nq = owner[p], owner[q]
        sp, lp = nets[np_]
        if np_ == nq:
            s, outer = _interconnect(sp, [(lp.index(p), lp.index(q))], freqs)
            labels = [lp[i] for i in outer]
            nets[np_] = (s, labels)
        else:
            sq, lq = nets.pop(nq)
            s, outer = _interconnect(_block_diag(sp, sq), [(lp.index(p), len(lp) + lq.index(q))], freqs)
            both = lp + lq
            labels = [both[i] for i in outer]
            nets[np_] = (s, labels)
            for l in labels:
                owner[l] = np_
    # disconnected islands that still carry external ports are combined block-diagonally
    pieces = [(s, labels) for s, labels in nets.values() if labels]
    s, labels = pieces[0]
    for sq, lq in pieces[1:]:
        s, labels = _block_diag(s, sq), labels + lq
    order = [labels.index(("x", lab)) for lab, _ in graph.external_ports]
    return s[:, order][:, :, order]


def sweep(graph, grid: FrequencyGrid, z_ref=50.0, freqs=None) -> SweepSParams:
    """N-port S-parameters of a netlist graph over ``grid``.

    Ports follow ``graph.external_ports`` order.  ``freqs`` overrides the grid
    sampling (f0 is still taken from the grid).  Frequencies are independent;
    with MONOPULSE_LAB_THREADS > 1 chunks are evaluated concurrently and
    reassembled in grid order.
    """
    freqs = grid.freqs if freqs is None else np.asarray(freqs, dtype=float)
    if not graph.external_ports:
        raise DegenerateNetwork("graph has no external ports")
    plan = _plan(graph)
    n_threads = min(thread_count(), freqs.shape[0])
    if n_threads <= 1:
        s = _assemble(graph, plan, freqs, grid.f0, z_ref)
    else:
        chunks = np.array_split(np.arange(freqs.shape[0]), n_threads)

        def run(idx):
            try:
                return _assemble(graph, plan, freqs[idx], grid.f0, z_ref)
            except (SingularJunction, PoleAtFrequency) as exc:
                # re-base the index to the full grid
                if exc.index is not None:
                    exc.index = int(idx[exc.index])
                raise

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            s = np.concatenate(list(pool.map(run, chunks)), axis=0)
    names = tuple(label for label, _ in graph.external_ports)
    return SweepSParams(freqs, s, z_ref, names)


def sweep_at(graph, f0, freqs, z_ref=50.0) -> SweepSParams:
    """Sweep at explicit frequencies (any count >= 1)."""
    freqs = np.atleast_1d(np.asarray(freqs, dtype=float))
    plan = _plan(graph)
    s = _assemble(graph, plan, freqs, f0, z_ref)
    names = tuple(label for label, _ in graph.external_ports)
    return SweepSParams(freqs, s, z_ref, names)
