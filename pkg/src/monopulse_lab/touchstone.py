"""Touchstone (version 1) writer and reader, RI format in Hz."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import UnsupportedPortCount
from .netkernel import SweepSParams

SUPPORTED_PORTS = (1, 2, 3, 4, 8)
PAIRS_PER_LINE = 4


def _num(x: float) -> str:
    return f"{x:.9g}"


def _freq(f: float) -> str:
    return f"{f:.12g}"


def _order(n):
    # two-port files list 11 21 12 22; every other size is row-major
    if n == 2:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    return [(i, j) for i in range(n) for j in range(n)]


def format_touchstone(s: SweepSParams, comments=()) -> str:
    n = s.ports
    if n not in SUPPORTED_PORTS:
        raise UnsupportedPortCount(f"{n}-port networks cannot be written (supported: {SUPPORTED_PORTS})")
    out = [f"! {c}" for c in comments]
    if s.port_names:
        out.append("! ports: " + " ".join(s.port_names))
    out.append(f"# Hz S RI R {_num(s.z_ref)}")
    for f, m in zip(s.freqs, s.s):
        vals = [f"{_num(m[i, j].real)} {_num(m[i, j].imag)}" for i, j in _order(n)]
        if n <= 2:
            out.append(" ".join([_freq(f)] + vals))
            continue
        for row in range(n):
            chunk = vals[row * n:(row + 1) * n]
            for k in range(0, n, PAIRS_PER_LINE):
                piece = " ".join(chunk[k:k + PAIRS_PER_LINE])
                out.append(f"{_freq(f)} {piece}" if row == 0 and k == 0 else piece)
    return "\n".join(out) + "\n"


def emit_touchstone(s: SweepSParams, path, comments=()) -> Path:
    """Write ``s`` to ``path``; the extension is not checked."""
    path = Path(path)
    text = format_touchstone(s, comments)
    path.write_text(text, encoding="ascii", newline="\n")
    return path


def parse_touchstone(text: str, n_ports: int) -> SweepSParams:
    if n_ports not in SUPPORTED_PORTS:
        raise UnsupportedPortCount(f"{n_ports}-port files are not supported")
    z_ref, fmt, scale = 50.0, "MA", 1e9
    units = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
    names = ()
    numbers = []
    for raw in text.splitlines():
        line, _, comment = raw.partition("!")
        if comment.strip().startswith("ports:"):
            names = tuple(comment.strip()[len("ports:"):].split())
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            tok = line[1:].upper().split()
            k = 0
            while k < len(tok):
                t = tok[k]
                if t in units:
                    scale = units[t]
                elif t in ("RI", "MA", "DB"):
                    fmt = t
                elif t == "R":
                    k += 1
                    z_ref = float(tok[k])
                elif t != "S":
                    raise ValueError(f"unsupported option line entry {t!r}")
                k += 1
            continue
        numbers.extend(float(v) for v in line.split())
    per = 1 + 2 * n_ports * n_ports
    if len(numbers) % per:
        raise ValueError(f"value count {len(numbers)} is not a multiple of {per} for {n_ports} ports")
    data = np.array(numbers).reshape(-1, per)
    a, b = data[:, 1::2], data[:, 2::2]
    if fmt == "RI":
        vals = a + 1j * b
    else:
        mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
        vals = mag * np.exp(1j * np.radians(b))
    s = np.zeros((data.shape[0], n_ports, n_ports), dtype=complex)
    for k, (i, j) in enumerate(_order(n_ports)):
        s[:, i, j] = vals[:, k]
    if len(names) != n_ports:
        names = ()
    return SweepSParams(data[:, 0] * scale, s, z_ref, names)


def read_touchstone(path) -> SweepSParams:
    """Read a ``.sNp`` file; the port count comes from the extension."""
    path = Path(path)
    suffix = path.suffix.lower()
    if not (suffix.startswith(".s") and suffix.endswith("p") and suffix[2:-1].isdigit()):
        raise ValueError(f"cannot infer the port count from {path.name!r}")
    return parse_touchstone(path.read_text(encoding="ascii"), int(suffix[2:-1]))
