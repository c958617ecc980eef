"""Small fully connected regression network that corrects monopulse estimates.

Inputs are (estimated elevation, estimated azimuth, distance) and outputs
are (elevation, azimuth), all in radians and metres.  Both sides are scaled
to [-1, 1] with constants taken from the training split and stored in the
model.  The loss is the mean over samples of the summed squared angle
errors, evaluated on de-normalized outputs (rad^2).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import EmptyBatch

WIDTHS = (3, 20, 50, 10, 2)
FORMAT_HEADER = "monopulse-lab-mlp"
FORMAT_VERSION = 1

_ACT = {
    "tanh": (np.tanh, lambda z, a: 1.0 - a * a),
    "relu": (lambda z: np.maximum(z, 0.0), lambda z, a: (z > 0).astype(float)),
    "linear": (lambda z: z, lambda z, a: np.ones_like(z)),
}


@dataclass
class Scaler:
    """Affine map of each column onto [-1, 1]."""

    center: np.ndarray
    half: np.ndarray

    @classmethod
    def fit(cls, x):
        x = np.asarray(x, dtype=float)
        lo, hi = x.min(axis=0), x.max(axis=0)
        half = (hi - lo) / 2.0
        # a constant column (e.g. a single distance) is only shifted
        return cls((hi + lo) / 2.0, np.where(half > 0, half, 1.0))

    @classmethod
    def identity(cls, n):
        return cls(np.zeros(n), np.ones(n))

    def normalize(self, x):
        return (np.asarray(x, dtype=float) - self.center) / self.half

    def denormalize(self, x):
        return np.asarray(x, dtype=float) * self.half + self.center


@dataclass
class Mlp:
    weights: list                 # (out, in) per layer
    biases: list
    activation: str = "tanh"
    in_scale: Scaler = None
    out_scale: Scaler = None

    def __post_init__(self):
        if self.activation not in _ACT:
            raise ValueError(f"unknown activation {self.activation!r}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("need one bias per weight matrix")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if b.shape != (w.shape[0],):
                raise ValueError(f"layer {k}: bias shape {b.shape} does not match weights {w.shape}")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ValueError(f"layer {k}: input width {w.shape[1]} does not match previous output")
        if self.in_scale is None:
            self.in_scale = Scaler.identity(self.widths[0])
        if self.out_scale is None:
            self.out_scale = Scaler.identity(self.widths[-1])

    @property
    def widths(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    @classmethod
    def init(cls, seed, widths=WIDTHS, activation="tanh"):
        """Xavier-uniform weights, zero biases."""
        rng = np.random.default_rng(seed)
        ws, bs = [], []
        for n_in, n_out in zip(widths[:-1], widths[1:]):
            lim = math.sqrt(6.0 / (n_in + n_out))
            ws.append(rng.uniform(-lim, lim, (n_out, n_in)))
            bs.append(np.zeros(n_out))
        return cls(ws, bs, activation)

    @classmethod
    def zeros(cls, widths=WIDTHS, activation="tanh"):
        return cls([np.zeros((o, i)) for i, o in zip(widths[:-1], widths[1:])],
                   [np.zeros(o) for o in widths[1:]], activation)

    def params(self) -> list:
        return [p for wb in zip(self.weights, self.biases) for p in wb]

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation,
                   Scaler(self.in_scale.center.copy(), self.in_scale.half.copy()),
                   Scaler(self.out_scale.center.copy(), self.out_scale.half.copy()))

    def predict(self, x):
        """Physical inputs to physical outputs."""
        return self.out_scale.denormalize(forward(self, self.in_scale.normalize(x)))


def _forward_cache(m: Mlp, x):
    act, _ = _ACT[m.activation]
    zs, acts = [], [np.atleast_2d(np.asarray(x, dtype=float))]
    last = len(m.weights) - 1
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        z = acts[-1] @ w.T + b
        zs.append(z)
        acts.append(z if k == last else act(z))
    return zs, acts


def forward(m: Mlp, x) -> np.ndarray:
    """Normalized inputs (N, 3) to normalized outputs (N, 2)."""
    return _forward_cache(m, x)[1][-1]


def loss(pred, truth) -> float:
    pred, truth = np.atleast_2d(pred), np.atleast_2d(truth)
    if pred.shape[0] == 0:
        raise EmptyBatch("loss of an empty batch")
    if pred.shape != truth.shape:
        raise ValueError(f"prediction shape {pred.shape} differs from truth shape {truth.shape}")
    return float(np.sum((pred - truth) ** 2) / pred.shape[0])


def loss_and_gradient(m: Mlp, x, y):
    """Loss on physical outputs and its gradient for every parameter.

    ``x`` is normalized input, ``y`` physical truth.  Gradients come back
    in ``Mlp.params()`` order.
    """
    y = np.atleast_2d(y)
    n = y.shape[0]
    if n == 0:
        raise EmptyBatch("gradient of an empty batch")
    _, dact = _ACT[m.activation]
    zs, acts = _forward_cache(m, x)
    pred = m.out_scale.denormalize(acts[-1])
    err = pred - y
    value = float(np.sum(err * err) / n)
    delta = 2.0 * err / n * m.out_scale.half
    grads = []
    for k in range(len(m.weights) - 1, -1, -1):
        grads.append(delta.sum(axis=0))
        grads.append(delta.T @ acts[k])
        if k:
            delta = (delta @ m.weights[k]) * dact(zs[k - 1], acts[k])
    grads.reverse()
    # reversed list is (w0, b0, w1, b1, ...)
    return value, grads


def gradient(m: Mlp, x, y) -> list:
    return loss_and_gradient(m, x, y)[1]


@dataclass(frozen=True)
class TrainConfig:
    iterations: int = 20000
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    split: float = 0.9
    seed: int = 0
    activation: str = "tanh"

    def __post_init__(self):
        if not 0 < self.split < 1:
            raise ValueError("split must lie strictly between 0 and 1")
        if self.lr <= 0:
            raise ValueError("learning rate must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")


@dataclass
class TrainReport:
    loss_history: np.ndarray
    train_loss: float
    validation_loss: float
    distance: float
    train_index: np.ndarray = field(repr=False)
    validation_index: np.ndarray = field(repr=False)

    @property
    def position_error(self) -> float:
        """distance * sqrt(validation loss): root-sum-square over both axes."""
        return self.distance * math.sqrt(self.validation_loss)

    def history_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "train_loss_rad2"])
        for k, v in enumerate(self.loss_history):
            w.writerow([k, repr(float(v))])
        return buf.getvalue()


def features(samples):
    """Inputs (est_el, est_az, D) and targets (el, az) from dataset samples."""
    x = np.array([[s.est_el, s.est_az, s.distance] for s in samples], dtype=float).reshape(-1, 3)
    y = np.array([[s.theta_el, s.theta_az] for s in samples], dtype=float).reshape(-1, 2)
    return x, y


def split_indices(n, split, seed):
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(math.floor(split * n))
    return order[:n_train], order[n_train:]


def adam(m: Mlp, x, y, cfg: TrainConfig) -> np.ndarray:
    """Full-batch Adam in place; returns the loss before each step."""
    params = m.params()
    mom = [np.zeros_like(p) for p in params]
    vel = [np.zeros_like(p) for p in params]
    hist = np.empty(cfg.iterations)
    b1, b2 = cfg.beta1, cfg.beta2
    for t in range(1, cfg.iterations + 1):
        hist[t - 1], grads = loss_and_gradient(m, x, y)
        c1, c2 = 1.0 - b1 ** t, 1.0 - b2 ** t
        for p, g, mo, ve in zip(params, grads, mom, vel):
            mo *= b1
            mo += (1.0 - b1) * g
            ve *= b2
            ve += (1.0 - b2) * g * g
            p -= cfg.lr * (mo / c1) / (np.sqrt(ve / c2) + cfg.eps)
    return hist


def train(samples, cfg: TrainConfig = TrainConfig()):
    samples = [s for s in samples if s.ok]
    if len(samples) < 10:
        raise EmptyBatch(f"need at least 10 usable samples, got {len(samples)}")
    x, y = features(samples)
    tr, va = split_indices(len(samples), cfg.split, cfg.seed)
    if len(va) == 0:
        raise EmptyBatch("validation split is empty")
    m = Mlp.init(cfg.seed, WIDTHS, cfg.activation)
    m.in_scale, m.out_scale = Scaler.fit(x[tr]), Scaler.fit(y[tr])
    xn = m.in_scale.normalize(x)
    hist = adam(m, xn[tr], y[tr], cfg)
    train_loss = loss(m.predict(x[tr]), y[tr])
    val_loss = loss(m.predict(x[va]), y[va])
    dist = float(np.median(x[va, 2]))
    return m, TrainReport(hist, train_loss, val_loss, dist, tr, va)


@dataclass(frozen=True)
class EvalReport:
    corrected: np.ndarray          # (N, 2) el, az in rad
    rms_before: float
    rms_after: float
    position_before: float
    position_after: float
    distance: float

    @property
    def improvement(self) -> float:
        return self.rms_after / self.rms_before if self.rms_before > 0 else 0.0


def _position_rss(err, distance):
    # per-axis D * tan(error), root-sum-square, RMS over samples
    p = distance * np.tan(err)
    return float(np.sqrt(np.mean(np.sum(p * p, axis=1))))


def evaluate(m: Mlp, samples, distance=None) -> EvalReport:
    samples = [s for s in samples if s.ok]
    if not samples:
        raise EmptyBatch("no usable samples to evaluate")
    x, y = features(samples)
    dist = float(np.median(x[:, 2])) if distance is None else float(distance)
    corr = m.predict(x)
    before, after = x[:, :2] - y, corr - y
    return EvalReport(corr, math.sqrt(loss(x[:, :2], y)), math.sqrt(loss(corr, y)),
                      _position_rss(before, dist), _position_rss(after, dist), dist)


# ---------------------------------------------------------------------------
# model files

def _vec(v):
    return " ".join(f"{float(a):.17g}" for a in np.ravel(v))


def dumps(m: Mlp) -> str:
    lines = [f"{FORMAT_HEADER} {FORMAT_VERSION}",
             "widths " + " ".join(str(w) for w in m.widths),
             f"activation {m.activation}",
             "input_center " + _vec(m.in_scale.center),
             "input_half " + _vec(m.in_scale.half),
             "output_center " + _vec(m.out_scale.center),
             "output_half " + _vec(m.out_scale.half)]
    for k, (w, b) in enumerate(zip(m.weights, m.biases)):
        lines.append(f"weights {k} {w.shape[0]} {w.shape[1]}")
        lines.extend(_vec(row) for row in w)
        lines.append(f"bias {k} {b.shape[0]}")
        lines.append(_vec(b))
    return "\n".join(lines) + "\n"


def loads(text: str) -> Mlp:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    head = lines[0].split()
    if len(head) != 2 or head[0] != FORMAT_HEADER:
        raise ValueError("not a monopulse-lab model file")
    if int(head[1]) != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {head[1]}")
    kv = {}
    pos = 1
    while pos < len(lines) and not lines[pos].startswith("weights"):
        key, _, rest = lines[pos].partition(" ")
        kv[key] = rest
        pos += 1

    def floats(s):
        return np.array([float(v) for v in s.split()])

    widths = [int(v) for v in kv["widths"].split()]
    ws, bs = [], []
    for k in range(len(widths) - 1):
        _, idx, rows, cols = lines[pos].split()
        rows, cols = int(rows), int(cols)
        if int(idx) != k or (rows, cols) != (widths[k + 1], widths[k]):
            raise ValueError(f"layer {k} header does not match the declared widths")
        ws.append(np.array([floats(lines[pos + 1 + r]) for r in range(rows)]).reshape(rows, cols))
        pos += 1 + rows
        bs.append(floats(lines[pos + 1]))
        pos += 2
    return Mlp(ws, bs, kv["activation"],
               Scaler(floats(kv["input_center"]), floats(kv["input_half"])),
               Scaler(floats(kv["output_center"]), floats(kv["output_half"])))


def save(m: Mlp, path) -> Path:
    path = Path(path)
    path.write_text(dumps(m), encoding="ascii", newline="\n")
    return path


def load(path) -> Mlp:
    return loads(Path(path).read_text(encoding="ascii"))
