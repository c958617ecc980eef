"""``monopulse-lab`` command line.

Every subcommand writes its files into ``--out`` together with a
``manifest.json`` describing the run.  Exit status is 0 on success, 1 for
usage or input errors and 2 when a computation fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from . import array as arr
from . import dnn, doa
from .components import (
    COMPARATOR_INPUTS,
    COMPARATOR_OUTPUTS,
    CouplerParams,
    CrossoverParams,
    check_crossover,
    gen_comparator,
    gen_conventional_ratrace,
    gen_crossover,
    gen_pt_coupler,
    printed_condition_residuals,
    solve_crossover_conditions,
)
from .config import load_config
from .errors import ConfigError, MonopulseLabError, NetlistError
from .metrics import COMPARATOR_CRITERIA, COUPLER_CRITERIA, COUPLER_SPEC, comparator_spec, metrics
from .netkernel import FrequencyGrid, sweep, sweep_at
from .netlist import dump, load
from .touchstone import SUPPORTED_PORTS, emit_touchstone

PROG = "monopulse-lab"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# name -> (type, default, help); flags left unset fall back to --config, then the default
OPTIONS = {
    "f0": (float, 2.0e9, "design centre frequency in Hz"),
    "z0": (float, 50.0, "port reference impedance in ohm"),
    "fstart": (float, None, "sweep start in Hz (default 0.75 f0)"),
    "fstop": (float, None, "sweep stop in Hz (default 1.25 f0)"),
    "points": (int, 1001, "number of sweep points"),
    "z_eta": (float, None, "phase-shifter impedance in ohm (default z0)"),
    "loss_db": (float, 0.0, "line loss in dB per wavelength"),
    "zx": (float, 57.0, "crossover outer-line impedance"),
    "zy": (float, 50.0, "crossover inner-line impedance"),
    "theta_x": (float, 90.0, "crossover outer-line length in degrees"),
    "theta_y": (float, 90.0, "crossover inner-line length in degrees"),
    "seed": (int, None, "random seed (required by randomized commands)"),
    "distance": (float, 0.62, "target distance in m"),
    "pitch": (float, 0.030, "target grid pitch in m"),
    "iters": (int, 20000, "training iterations"),
    "f_op": (float, arr.F_OP, "array operating frequency in Hz"),
    "d_az": (float, 0.70, "azimuth element spacing in wavelengths at f_op"),
    "d_el": (float, 0.55, "elevation element spacing in wavelengths at f_op"),
    "q": (float, 1.2, "cosine element exponent"),
    "impairments": (str, "moderate", "impairment preset: ideal or moderate"),
}


def _add_options(p, names):
    for name in names:
        typ, _, hlp = OPTIONS[name]
        p.add_argument("--" + name.replace("_", "-"), dest=name, type=typ, default=None, help=hlp)


GRID = ("f0", "z0", "fstart", "fstop", "points")
CIRCUIT = ("z_eta", "loss_db", "zx", "zy", "theta_x", "theta_y")
ARRAY = ("f_op", "d_az", "d_el", "q")
SCENARIO = ("seed", "distance", "pitch", "impairments")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", default=None, help="output directory (default: out)")
    common.add_argument("--config", default=None, help="key=value configuration file")

    top = _Parser(prog=PROG, description="Monopulse comparator, array and direction-finding workbench.")
    top.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    groups = top.add_subparsers(dest="group", required=True, parser_class=_Parser)

    def leaf(group, name, helptext, names=()):
        p = group.add_parser(name, parents=[common], help=helptext)
        _add_options(p, names)
        return p

    g = groups.add_parser("component").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(g, "gen", "write a circuit netlist", ("f0", "z0") + CIRCUIT)
    p.add_argument("kind", choices=("ratrace", "pt-coupler", "crossover", "comparator"))

    g = groups.add_parser("netlist").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(g, "sim", "sweep a netlist file and write Touchstone", GRID)
    p.add_argument("netlist")

    g = groups.add_parser("crossover").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "solve", "scan the crossover design conditions", ("f0", "z0", "zy", "theta_y"))

    g = groups.add_parser("comparator").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "report", "comparator metrics and Touchstone", GRID + CIRCUIT)

    g = groups.add_parser("array").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "pattern", "sum and difference pattern cuts", ARRAY + ("z0", "loss_db"))

    g = groups.add_parser("doa").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    leaf(g, "dataset", "synthetic testbed dataset", SCENARIO + ARRAY)
    p = leaf(g, "estimate", "estimate one target direction", SCENARIO + ARRAY)
    p.add_argument("--az", type=float, required=True, help="true azimuth in degrees")
    p.add_argument("--el", type=float, required=True, help="true elevation in degrees")

    g = groups.add_parser("dnn").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(g, "train", "train the corrector network", ("seed", "iters"))
    p.add_argument("--dataset", required=True, help="dataset CSV from 'doa dataset'")
    p = leaf(g, "eval", "apply a trained model to a dataset", ("distance",))
    p.add_argument("--model", required=True, help=".mlp model file")
    p.add_argument("--dataset", required=True, help="dataset CSV")

    g = groups.add_parser("repro").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    p = leaf(g, "figure", "regenerate figure data as CSV",
             GRID + CIRCUIT + ARRAY + SCENARIO + ("iters",))
    p.add_argument("number", choices=("5", "7", "10", "12"))
    return top


# ---------------------------------------------------------------------------
# run context

class Run:
    def __init__(self, args, command):
        self.args = args
        self.command = command
        self.config = load_config(args.config) if args.config else {}
        unknown = set(self.config) - set(OPTIONS) - {"out"}
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        self.out = Path(args.out or self.config.get("out", "out"))
        self.inputs, self.outputs, self.resolved = [], [], {}

    def get(self, name):
        typ, default, _ = OPTIONS[name]
        value = getattr(self.args, name, None)
        if value is None and name in self.config:
            try:
                value = typ(self.config[name])
            except ValueError:
                raise ConfigError(f"config key {name!r}: cannot parse {self.config[name]!r}") from None
        if value is None:
            value = default
        self.resolved[name] = value
        return value

    def seed(self):
        s = self.get("seed")
        if s is None:
            raise UsageError("--seed is required for this command")
        return s

    def path(self, name) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        p = self.out / name
        self.outputs.append(str(p))
        return p

    def write(self, name, text):
        self.path(name).write_text(text, encoding="utf-8", newline="\n")

    def manifest(self, duration):
        data = {
            "command": self.command,
            "config": {k: self.resolved[k] for k in sorted(self.resolved)},
            "seed": self.resolved.get("seed"),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "version": __version__,
            "duration_s": round(duration, 6),
        }
        self.out.mkdir(parents=True, exist_ok=True)
        (self.out / "manifest.json").write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _grid(run):
    f0 = run.get("f0")
    fstart = run.get("fstart") or 0.75 * f0
    fstop = run.get("fstop") or 1.25 * f0
    points = run.get("points")
    if points < 1 or fstart <= 0 or fstop < fstart:
        raise UsageError("invalid sweep: need 0 < --fstart <= --fstop and --points >= 1")
    return FrequencyGrid(f0, fstart, fstop, points)


def _crossover(run):
    return CrossoverParams(run.get("zx"), run.get("zy"), run.get("theta_x"), run.get("theta_y"))


def _coupler(run):
    return CouplerParams(run.get("f0"), run.get("z0"), run.get("z_eta"), run.get("loss_db"), _crossover(run))


def _geometry(run):
    f_op = run.get("f_op")
    lam = arr.wavelength(f_op)
    return arr.ArrayGeometry(run.get("d_az") * lam, run.get("d_el") * lam, f_op, "cosine", run.get("q"))


def _impairments(run, seed):
    name = run.get("impairments")
    if name == "ideal":
        return doa.ImpairmentConfig(seed=seed)
    if name == "moderate":
        return replace(doa.MODERATE, seed=seed)
    raise UsageError(f"--impairments must be 'ideal' or 'moderate', got {name!r}")


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _g(x):
    return f"{float(x):.9g}"


def _db(x):
    with np.errstate(divide="ignore"):
        return 20 * np.log10(np.abs(x))


def _wrap(x):
    return (np.asarray(x) + 180.0) % 360.0 - 180.0


# ---------------------------------------------------------------------------
# commands

def cmd_component_gen(run):
    kind = run.args.kind
    f0, z0, loss = run.get("f0"), run.get("z0"), run.get("loss_db")
    if kind == "ratrace":
        g = gen_conventional_ratrace(f0, z0, loss)
    elif kind == "crossover":
        g = gen_crossover(_crossover(run), f0, z0, loss)
    elif kind == "pt-coupler":
        g = gen_pt_coupler(_coupler(run))
    else:
        g = gen_comparator(f0, z0, run.get("z_eta"), loss, _crossover(run))
    dump(g, run.path(f"{kind}.net"))


def cmd_netlist_sim(run):
    src = Path(run.args.netlist)
    if not src.is_file():
        raise UsageError(f"netlist file not found: {src}")
    run.inputs.append(str(src))
    graph = load(src)
    s = sweep(graph, _grid(run), run.get("z0"))
    if s.ports in SUPPORTED_PORTS:
        emit_touchstone(s, run.path(f"{src.stem}.s{s.ports}p"), [f"swept from {src.name}"])
    rows = [[_g(f)] + [f"{v:.6f}" for v in _db(m).ravel()] for f, m in zip(s.freqs, s.s)]
    names = s.port_names
    header = ["frequency_hz"] + [f"S{a}{b}_db" for a in names for b in names]
    run.write(f"{src.stem}_mag.csv", _csv(header, rows))


def cmd_crossover_solve(run):
    z0, f0 = run.get("z0"), run.get("f0")
    cands = solve_crossover_conditions(z0, f0, run.get("zy"), run.get("theta_y"))
    rows = [[_g(c.params.z_x), _g(c.params.z_y), _g(c.params.theta_x), _g(c.params.theta_y),
             f"{c.reflection_db:.3f}", f"{c.isolation_db:.3f}", f"{c.thru_db:.6f}", f"{c.thru_phase_deg:.4f}"]
            for c in cands]
    run.write("candidates.csv", _csv(["z_x", "z_y", "theta_x_deg", "theta_y_deg", "reflection_db",
                                      "isolation_db", "thru_db", "thru_phase_deg"], rows))
    ref = check_crossover(CrossoverParams(), z0, f0)
    res = printed_condition_residuals(90.0, 57.0, z0)
    lines = [
        f"candidates found: {len(cands)}",
        "reference point Zx=57 Zy=50 theta_x=theta_y=90:",
        f"  verdict: {'pass' if ref.passed else 'fail'}",
        f"  reflection {ref.reflection_db:.2f} dB, isolation {ref.isolation_db:.2f} dB, thru {ref.thru_db:.6f} dB",
        "closed-form residuals at the reference point (cross-check only):",
        f"  first condition: {res['first']:.6g}",
        f"  second condition: {res['second']:.6g}",
        f"  first condition at 90 deg is satisfied only by Zx = {res['first_zx_at_theta_limit']:.6g} ohm",
    ]
    run.write("summary.txt", "\n".join(lines) + "\n")


def _comparator_outputs(run, s, f0, prefix=""):
    rep = metrics(s, COMPARATOR_CRITERIA, comparator_spec(), f0)
    run.write(f"{prefix}metrics.csv", rep.to_csv())
    run.write(f"{prefix}summary.txt", rep.summary())
    emit_touchstone(s, run.path(f"{prefix}comparator.s8p"), ["monopulse comparator"])
    return rep


def cmd_comparator_report(run):
    grid = _grid(run)
    g = gen_comparator(grid.f0, run.get("z0"), run.get("z_eta"), run.get("loss_db"), _crossover(run))
    _comparator_outputs(run, sweep(g, grid, run.get("z0")), grid.f0)


SUMMARY_CUTS = {(0, "sum"), (90, "sum"), (0, "delta_az"), (90, "delta_el")}


def _pattern_files(run, s, geom, prefix):
    lines = []
    for phi in (0, 90):
        for ch in arr.CHANNELS:
            cut = arr.cut_pattern(s, geom, phi, ch)
            rows = [[f"{t:.4f}", f"{max(v, -400.0):.6f}"] for t, v in zip(cut.theta, cut.gain_db)]
            run.write(f"{prefix}{ch}_phi{phi}.csv", _csv(["theta_deg", "gain_db"], rows))
            if (phi, ch) not in SUMMARY_CUTS:
                continue
            try:
                m = arr.pattern_metrics(cut)
                lines.append(f"{ch} phi={phi}: hpbw {m.hpbw:.2f} deg, sll {m.sll:.2f} dB, "
                             f"null depth {m.null_depth:.2f} dB, peak at {m.peak_direction:.2f} deg")
            except MonopulseLabError as exc:
                lines.append(f"{ch} phi={phi}: {exc}")
    run.write(f"{prefix}pattern_summary.txt", "\n".join(lines) + "\n")


def _array_network(run, geom):
    g = gen_comparator(geom.f_op, run.get("z0"), None, run.get("loss_db"))
    return sweep_at(g, geom.f_op, [geom.f_op], run.get("z0"))


def cmd_array_pattern(run):
    geom = _geometry(run)
    _pattern_files(run, _array_network(run, geom), geom, "")


def cmd_doa_dataset(run):
    seed = run.seed()
    sc = doa.Scenario(run.get("distance"), run.get("pitch"), impairments=_impairments(run, seed),
                      geometry=_geometry(run))
    run.write("dataset.csv", doa.dataset_to_csv(doa.gen_dataset(sc)))


def cmd_doa_estimate(run):
    cfg = _impairments(run, None)
    if not cfg.is_ideal:
        cfg = replace(cfg, seed=run.seed())
    geom = _geometry(run)
    az, el = math.radians(run.args.az), math.radians(run.args.el)
    gains = doa.scenario_gains(cfg) if not cfg.is_ideal else None
    rng = doa.sample_rng(cfg.seed, 0) if not cfg.is_ideal else None
    ea, ee = doa.estimate(geom, az, el, cfg, rng, gains)
    text = _csv(["theta_az_true_deg", "theta_el_true_deg", "theta_az_est_deg", "theta_el_est_deg"],
                [[repr(run.args.az), repr(run.args.el), repr(math.degrees(ea)), repr(math.degrees(ee))]])
    run.write("estimate.csv", text)
    print(f"azimuth {math.degrees(ea):.6f} deg, elevation {math.degrees(ee):.6f} deg")


def _read_dataset(run, path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"dataset file not found: {p}")
    run.inputs.append(str(p))
    try:
        return doa.dataset_from_csv(p.read_text(encoding="utf-8"))
    except (ValueError, KeyError) as exc:
        raise UsageError(f"{p}: {exc}") from None


def _train_outputs(run, samples, seed, prefix=""):
    cfg = dnn.TrainConfig(iterations=run.get("iters"), seed=seed)
    model, rep = dnn.train(samples, cfg)
    dnn.save(model, run.path(f"{prefix}model.mlp"))
    run.write(f"{prefix}loss_history.csv", rep.history_csv())
    run.write(f"{prefix}train_report.txt",
              f"iterations: {cfg.iterations}\n"
              f"train loss: {rep.train_loss:.6e} rad^2\n"
              f"validation loss: {rep.validation_loss:.6e} rad^2\n"
              f"position error at {rep.distance:.3f} m: {rep.position_error * 1e3:.4f} mm\n")
    return model, rep


def cmd_dnn_train(run):
    _train_outputs(run, _read_dataset(run, run.args.dataset), run.seed())


def _eval_outputs(run, model, samples, distance, name):
    ev = dnn.evaluate(model, samples, distance)
    ok = [s for s in samples if s.ok]
    rows = [[s.index, repr(s.x), repr(s.y), repr(s.distance),
             repr(math.degrees(s.theta_az)), repr(math.degrees(s.theta_el)),
             repr(math.degrees(s.est_az)), repr(math.degrees(s.est_el)),
             repr(math.degrees(c[1])), repr(math.degrees(c[0]))] for s, c in zip(ok, ev.corrected)]
    run.write(f"{name}.csv", _csv(["index", "x_m", "y_m", "D_m", "theta_az_true_deg", "theta_el_true_deg",
                                   "theta_az_est_deg", "theta_el_est_deg", "theta_az_dnn_deg",
                                   "theta_el_dnn_deg"], rows))
    return (f"{name}: rms error {ev.rms_before:.6e} -> {ev.rms_after:.6e} rad, "
            f"position error {ev.position_before * 1e3:.4f} -> {ev.position_after * 1e3:.4f} mm "
            f"at {ev.distance:.3f} m")


def cmd_dnn_eval(run):
    mp = Path(run.args.model)
    if not mp.is_file():
        raise UsageError(f"model file not found: {mp}")
    run.inputs.append(str(mp))
    try:
        model = dnn.load(mp)
    except (ValueError, KeyError, IndexError) as exc:
        raise UsageError(f"{mp}: {exc}") from None
    samples = _read_dataset(run, run.args.dataset)
    dist = run.get("distance") if run.args.distance is not None else None
    run.write("eval_summary.txt", _eval_outputs(run, model, samples, dist, "corrected") + "\n")


def _figure5(run):
    grid = _grid(run)
    s = sweep(gen_pt_coupler(_coupler(run)), grid, run.get("z0"))
    a, b, c, d = (s.port(p) for p in ("Pa", "Pb", "Pc", "Pd"))
    t = s.s
    mag = [[_g(f)] + [f"{v:.6f}" for v in _db([t[k, a, a], t[k, b, a], t[k, c, a], t[k, d, a],
                                               t[k, b, c], t[k, d, c], t[k, c, c]])]
           for k, f in enumerate(s.freqs)]
    run.write("fig5_magnitude.csv", _csv(["frequency_hz", "Saa_db", "Sba_db", "Sca_db", "Sda_db",
                                          "Sbc_db", "Sdc_db", "Scc_db"], mag))
    dph_delta = _wrap(np.degrees(np.angle(t[:, d, a]) - np.angle(t[:, b, a])))
    dph_sum = _wrap(np.degrees(np.angle(t[:, d, c]) - np.angle(t[:, b, c])))
    run.write("fig5_phase.csv", _csv(["frequency_hz", "delta_drive_phase_diff_deg", "sum_drive_phase_diff_deg"],
                                     [[_g(f), f"{x:.6f}", f"{y:.6f}"]
                                      for f, x, y in zip(s.freqs, dph_delta, dph_sum)]))
    rep = metrics(s, COUPLER_CRITERIA, COUPLER_SPEC, grid.f0)
    run.write("fig5_metrics.csv", rep.to_csv())
    run.write("fig5_summary.txt", rep.summary())


def _figure7(run):
    grid = _grid(run)
    g = gen_comparator(grid.f0, run.get("z0"), run.get("z_eta"), run.get("loss_db"), _crossover(run))
    s = sweep(g, grid, run.get("z0"))
    ii = [s.port(p) for p in COMPARATOR_INPUTS]
    oo = [s.port(p) for p in COMPARATOR_OUTPUTS]
    refl_cols = [(p, q) for p in ii for q in ii if q >= p] + [(p, q) for p in oo for q in oo if q >= p]
    names = s.port_names
    run.write("fig7_reflections.csv", _csv(
        ["frequency_hz"] + [f"S_{names[q]}_{names[p]}_db" for p, q in refl_cols],
        [[_g(f)] + [f"{v:.6f}" for v in _db([s.s[k, q, p] for p, q in refl_cols])] for k, f in enumerate(s.freqs)]))
    trans = [(o, i) for o in oo for i in ii]
    run.write("fig7_transmissions.csv", _csv(
        ["frequency_hz"] + [f"S_{names[o]}_{names[i]}_db" for o, i in trans],
        [[_g(f)] + [f"{v:.6f}" for v in _db([s.s[k, o, i] for o, i in trans])] for k, f in enumerate(s.freqs)]))
    # phase of each input's contribution relative to P1, per output channel
    for label, port in (("sum", "P5"), ("az", "P6"), ("el", "P7")):
        o = s.port(port)
        ph = np.degrees(np.angle(s.s[:, o, ii]))
        rel = _wrap(ph - ph[:, :1])
        run.write(f"fig7_phase_{label}.csv", _csv(
            ["frequency_hz"] + [f"{names[i]}_minus_P1_deg" for i in ii[1:]],
            [[_g(f)] + [f"{v:.6f}" for v in rel[k, 1:]] for k, f in enumerate(s.freqs)]))
    _comparator_outputs(run, s, grid.f0, "fig7_")


def _figure10(run):
    geom = _geometry(run)
    _pattern_files(run, _array_network(run, geom), geom, "fig10_")


def _figure12(run):
    seed = run.seed()
    geom = _geometry(run)
    imp = _impairments(run, seed)
    train_d = run.get("distance")
    pitch = run.get("pitch")
    samples = doa.gen_dataset(doa.Scenario(train_d, pitch, impairments=imp, geometry=geom))
    run.write("fig12_train_dataset.csv", doa.dataset_to_csv(samples))
    model, _ = _train_outputs(run, samples, seed, "fig12_")
    lines = []
    for k, dist in enumerate((0.66, 0.86)):
        sc = doa.Scenario(dist, pitch, noise_stream=k + 1, impairments=imp, geometry=geom)
        test = doa.gen_dataset(sc)
        lines.append(_eval_outputs(run, model, test, dist, f"fig12_D{int(round(dist * 100))}cm"))
    run.write("fig12_summary.txt", "\n".join(lines) + "\n")


def cmd_repro_figure(run):
    {"5": _figure5, "7": _figure7, "10": _figure10, "12": _figure12}[run.args.number](run)


COMMANDS = {
    ("component", "gen"): cmd_component_gen,
    ("netlist", "sim"): cmd_netlist_sim,
    ("crossover", "solve"): cmd_crossover_solve,
    ("comparator", "report"): cmd_comparator_report,
    ("array", "pattern"): cmd_array_pattern,
    ("doa", "dataset"): cmd_doa_dataset,
    ("doa", "estimate"): cmd_doa_estimate,
    ("dnn", "train"): cmd_dnn_train,
    ("dnn", "eval"): cmd_dnn_eval,
    ("repro", "figure"): cmd_repro_figure,
}


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        ctx = Run(args, " ".join([PROG] + argv))
        COMMANDS[(args.group, args.cmd)](ctx)
    except (UsageError, ConfigError, NetlistError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    except (MonopulseLabError, ValueError, FloatingPointError) as exc:
        print(f"{PROG}: computation failed: {exc}", file=sys.stderr)
        return 2
    ctx.manifest(time.perf_counter() - t0)
    return 0


def main():
    sys.exit(run())
