"""Line-oriented netlist format for transmission-line networks.

Records (one per line, ``#`` starts a comment)::

    node n1 n2 ...
    port <label> <node>
    tline <id> <node_from> <node_to> z=<ohms> theta=<deg at f0> [loss=<dB per 360 deg>]
    stub <id> <node> z=<ohms> theta=<deg at f0> term=open|short [loss=...]

Identifiers are case-sensitive.  Unknown ``key=value`` attributes produce
warnings; everything else that is wrong is an error tied to a line number.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import NamedTuple

from .errors import NetlistError
from .netkernel import TLineSection

KINDS = ("tline", "open", "short")
_IDENT = re.compile(r"^[A-Za-z0-9_.:'+\-\[\]/]+$")


def natural_key(text: str):
    """Sort key that orders ``P2`` before ``P10``."""
    return [(0, int(tok), "") if tok.isdigit() else (1, 0, tok) for tok in re.split(r"(\d+)", text) if tok]


@dataclass(frozen=True)
class Component:
    id: str
    kind: str  # "tline" | "open" | "short"
    section: TLineSection
    endpoints: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown component kind {self.kind!r}")
        want = 2 if self.kind == "tline" else 1
        if len(self.endpoints) != want:
            raise ValueError(f"{self.kind} {self.id} needs {want} endpoint(s)")
        object.__setattr__(self, "endpoints", tuple(self.endpoints))


@dataclass(frozen=True)
class NetworkGraph:
    """Components, declared nodes and ordered external ports.

    Construction canonicalizes ordering (natural sort by id / label) so that
    structurally equal graphs compare equal and serialize identically.  The
    S-matrix port order of a sweep is the order of ``external_ports``.
    """

    components: tuple = ()
    nodes: tuple = ()
    external_ports: tuple = ()
    comment: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(sorted(self.components, key=lambda c: natural_key(c.id))))
        object.__setattr__(self, "nodes", tuple(sorted(set(self.nodes), key=natural_key)))
        object.__setattr__(
            self, "external_ports",
            tuple(sorted(((str(l), str(n)) for l, n in self.external_ports), key=lambda p: natural_key(p[0]))),
        )

    @property
    def port_labels(self):
        return tuple(label for label, _ in self.external_ports)

    def component(self, cid):
        for c in self.components:
            if c.id == cid:
                return c
        raise KeyError(cid)


@dataclass(frozen=True)
class ParseDiagnostic:
    line: int | None
    kind: str  # "error" | "warning"
    message: str

    def __str__(self):
        where = f"line {self.line}: " if self.line is not None else ""
        return f"{where}{self.kind}: {self.message}"


class ParseResult(NamedTuple):
    graph: NetworkGraph | None
    diagnostics: list

    @property
    def ok(self):
        return self.graph is not None


class GraphBuilder:
    """Incremental construction used by the circuit generators."""

    def __init__(self, comment=""):
        self.comment = comment
        self._nodes = set()
        self._ports = []
        self._comps = []
        self._auto = 0

    def node(self, *names):
        self._nodes.update(names)
        return names[0] if len(names) == 1 else names

    def fresh(self, prefix="n"):
        self._auto += 1
        name = f"{prefix}{self._auto}"
        self._nodes.add(name)
        return name

    def port(self, label, node):
        self._nodes.add(node)
        self._ports.append((label, node))

    def tline(self, cid, n1, n2, z, theta, loss=0.0):
        self._nodes.update((n1, n2))
        self._comps.append(Component(cid, "tline", TLineSection(z, theta, loss), (n1, n2)))

    def stub(self, cid, n1, z, theta, term, loss=0.0):
        self._nodes.add(n1)
        self._comps.append(Component(cid, term, TLineSection(z, theta, loss), (n1,)))

    def include(self, other: NetworkGraph, prefix: str, rename=None):
        """Copy ``other`` with ids/nodes prefixed; ``rename`` maps its nodes to ours."""
        rename = dict(rename or {})

        def nn(n):
            return rename.get(n, f"{prefix}{n}")

        for n in other.nodes:
            self._nodes.add(nn(n))
        for c in other.components:
            self._comps.append(Component(f"{prefix}{c.id}", c.kind, c.section, tuple(nn(n) for n in c.endpoints)))
        return {label: nn(node) for label, node in other.external_ports}

    def build(self) -> NetworkGraph:
        return NetworkGraph(tuple(self._comps), tuple(self._nodes), tuple(self._ports), self.comment)


# ---------------------------------------------------------------------------
# validation

def validate(graph: NetworkGraph, lines=None) -> list:
    """Structural checks; returns diagnostics (empty list means valid).

    ``lines`` optionally maps component ids / port labels to source lines.
    """
    lines = lines or {}
    diags = []
    declared = set(graph.nodes)
    seen_ids = set()
    for c in graph.components:
        if c.id in seen_ids:
            diags.append(ParseDiagnostic(lines.get(("c", c.id)), "error", f"duplicate id {c.id!r}"))
        seen_ids.add(c.id)
        for n in c.endpoints:
            if n not in declared:
                diags.append(ParseDiagnostic(lines.get(("c", c.id)), "error", f"undeclared node {n!r} in {c.id}"))
    labels, port_nodes = set(), {}
    for label, node in graph.external_ports:
        where = lines.get(("p", label))
        if label in labels:
            diags.append(ParseDiagnostic(where, "error", f"duplicate port label {label!r}"))
        labels.add(label)
        if node not in declared:
            diags.append(ParseDiagnostic(where, "error", f"undeclared node {node!r} for port {label}"))
        elif node in port_nodes:
            diags.append(ParseDiagnostic(where, "error", f"node {node!r} already carries port {port_nodes[node]}"))
        else:
            port_nodes[node] = label
    if not any(d.kind == "error" for d in diags):
        diags.extend(_connectivity(graph, lines))
    return diags


def _connectivity(graph, lines):
    parent = {n: n for n in graph.nodes}

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in graph.components:
        if len(c.endpoints) == 2:
            a, b = find(c.endpoints[0]), find(c.endpoints[1])
            if a != b:
                parent[a] = b
    diags = []
    port_roots = {find(node) for _, node in graph.external_ports}
    if len(port_roots) > 1:
        diags.append(ParseDiagnostic(None, "warning", "external ports lie in disconnected sub-networks"))
    islands = {}
    for c in graph.components:
        root = find(c.endpoints[0])
        if root not in port_roots:
            islands.setdefault(root, []).append(c.id)
    for root, ids in sorted(islands.items(), key=lambda kv: natural_key(kv[1][0])):
        diags.append(ParseDiagnostic(lines.get(("c", ids[0])), "warning",
                                     f"island not reachable from any port: {', '.join(ids)}"))
    return diags


# ---------------------------------------------------------------------------
# parsing

_REQUIRED = {"tline": ("z", "theta"), "stub": ("z", "theta", "term")}
_KNOWN = {"tline": {"z", "theta", "loss"}, "stub": {"z", "theta", "term", "loss"}}


def parse(text: str) -> ParseResult:
    """Parse netlist text.  Never raises on malformed input."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="replace")
    diags = []
    nodes, ports, comps, where = [], [], [], {}
    ids, labels = {}, {}
    for lineno, raw in enumerate(str(text).replace("\r\n", "\n").replace("\r", "\n").split("\n"), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        toks = body.split()
        rec, args = toks[0], toks[1:]
        pos = [t for t in args if "=" not in t]
        kv = [t for t in args if "=" in t]

        def err(msg):
            diags.append(ParseDiagnostic(lineno, "error", msg))

        bad_ident = [t for t in pos if not _IDENT.match(t)]
        if bad_ident:
            err(f"invalid identifier {bad_ident[0]!r}")
            continue
        if rec == "node":
            if not pos or kv:
                err("node record takes one or more node names")
                continue
            nodes.extend(pos)
        elif rec == "port":
            if len(pos) != 2 or kv:
                err("port record needs: port <label> <node>")
                continue
            label, node = pos
            if label in labels:
                err(f"duplicate port label {label!r} (first on line {labels[label]})")
                continue
            labels[label] = lineno
            ports.append((label, node))
            where[("p", label)] = lineno
        elif rec in ("tline", "stub"):
            want = 3 if rec == "tline" else 2
            if len(pos) != want:
                err(f"{rec} record needs an id and {want - 1} node(s)")
                continue
            attrs = {}
            dup = False
            for item in kv:
                key, _, value = item.partition("=")
                if key in attrs:
                    err(f"attribute {key!r} given twice")
                    dup = True
                attrs[key] = value
            if dup:
                continue
            missing = [k for k in _REQUIRED[rec] if k not in attrs]
            if missing:
                err(f"missing attribute {missing[0]!r}")
                continue
            for key in sorted(set(attrs) - _KNOWN[rec]):
                diags.append(ParseDiagnostic(lineno, "warning", f"unknown attribute {key!r} ignored"))
            values = {}
            failed = False
            for key in ("z", "theta", "loss"):
                if key not in attrs:
                    continue
                try:
                    v = float(attrs[key])
                except ValueError:
                    err(f"non-numeric value for {key}: {attrs[key]!r}")
                    failed = True
                    break
                if not math.isfinite(v):
                    err(f"non-finite value for {key}: {attrs[key]!r}")
                    failed = True
                    break
                values[key] = v
            if failed:
                continue
            if values["z"] <= 0 or values["theta"] <= 0 or values.get("loss", 0.0) < 0:
                err("z and theta must be positive and loss non-negative")
                continue
            cid = pos[0]
            if cid in ids:
                err(f"duplicate id {cid!r} (first on line {ids[cid]})")
                continue
            section = TLineSection(values["z"], values["theta"], values.get("loss", 0.0))
            if rec == "tline":
                kind, ends = "tline", (pos[1], pos[2])
            else:
                kind, ends = attrs["term"], (pos[1],)
                if kind not in ("open", "short"):
                    err(f"term must be open or short, got {kind!r}")
                    continue
            ids[cid] = lineno
            comps.append(Component(cid, kind, section, ends))
            where[("c", cid)] = lineno
        else:
            err(f"unknown record {rec!r}")
    if any(d.kind == "error" for d in diags):
        return ParseResult(None, diags)
    graph = NetworkGraph(tuple(comps), tuple(nodes), tuple(ports))
    diags.extend(validate(graph, where))
    if any(d.kind == "error" for d in diags):
        return ParseResult(None, sorted(diags, key=_diag_key))
    return ParseResult(graph, sorted(diags, key=_diag_key))


def _diag_key(d):
    return (d.line if d.line is not None else 0, d.kind, d.message)


def loads(text: str, source=None) -> NetworkGraph:
    """Parse or raise NetlistError carrying the error diagnostics."""
    result = parse(text)
    if not result.ok:
        raise NetlistError([d for d in result.diagnostics if d.kind == "error"], source)
    return result.graph


def load(path) -> NetworkGraph:
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read(), source=str(path))


# ---------------------------------------------------------------------------
# serialization

def _num(x: float) -> str:
    return repr(float(x))


def serialize(graph: NetworkGraph) -> str:
    out = []
    if graph.comment:
        out.extend(f"# {line}".rstrip() for line in graph.comment.splitlines())
    if graph.nodes:
        out.append("node " + " ".join(graph.nodes))
    for label, node in graph.external_ports:
        out.append(f"port {label} {node}")
    for c in graph.components:
        s = c.section
        loss = f" loss={_num(s.loss_db)}" if s.loss_db else ""
        if c.kind == "tline":
            out.append(f"tline {c.id} {c.endpoints[0]} {c.endpoints[1]} z={_num(s.z_char)} theta={_num(s.theta0)}{loss}")
        else:
            out.append(f"stub {c.id} {c.endpoints[0]} z={_num(s.z_char)} theta={_num(s.theta0)} term={c.kind}{loss}")
    return "\n".join(out) + "\n"


def dump(graph: NetworkGraph, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize(graph))
