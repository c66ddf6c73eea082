"""Multilayer-perceptron detector: data synthesis, training, serialization.

The network is fixed-shape: input (5 features in 1D, 12 in 2D), five hidden
layers of width 16 with leaky ReLU (slope 0.01), a 2-wide linear output and
softmax.  Training is plain minibatch SGD with momentum on cross-entropy,
fully deterministic for a given seed.  Weight files are a versioned binary
format, explicitly little-endian float64, with a layer-size header and a
trailing CRC so truncation is detected rather than half-loaded.

Training data is synthetic: smooth samples are random low-order polynomials
plus moderate trig; troubled samples add a jump of random location and
magnitude strictly inside the center cell (1D) or a random line
discontinuity through the center cell (2D).  Features are the same ones the
detector computes at run time, taken from degree-N projections with N drawn
from 1..4, then normalized per sample to zero median and unit max
magnitude.
"""

import struct
import zlib
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from pathlib import Path

import numpy as np

from .discretization import gauss_legendre, orthonormal_legendre
from .errors import ConfigurationError, DeserializationError, TrainingDivergedError

LEAKY_SLOPE = 0.01
HIDDEN_WIDTH = 16
HIDDEN_LAYERS = 5
N_CLASSES = 2

_MAGIC = b"DGRHNET\x00"
_VERSION = 1
_ACTIVATION_TAG = 1  # leaky ReLU, slope 0.01


@dataclass
class MlpNetwork:
    """Weights (n_in, n_out) and biases per layer, plus training metadata."""

    layer_sizes: list
    weights: list
    biases: list
    metadata: dict = dc_field(default_factory=dict)

    def forward(self, x):
        """Logits for inputs (n, n_features)."""
        a = np.asarray(x, dtype=float)
        for w, b in zip(self.weights[:-1], self.biases[:-1]):
            z = a @ w + b
            a = np.where(z > 0.0, z, LEAKY_SLOPE * z)
        return a @ self.weights[-1] + self.biases[-1]

    def predict_proba(self, x):
        return softmax(self.forward(x))

    def predict(self, x):
        return np.argmax(self.forward(x), axis=-1)


def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=-1, keepdims=True)


def init_network(n_inputs, rng, family=None):
    sizes = [int(n_inputs)] + [HIDDEN_WIDTH] * HIDDEN_LAYERS + [N_CLASSES]
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        scale = np.sqrt(2.0 / n_in)
        weights.append(rng.normal(0.0, scale, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return MlpNetwork(layer_sizes=sizes, weights=weights, biases=biases,
                      metadata={"family": family or f"{n_inputs}-input"})


def loss_and_gradients(network, x, labels):
    """Mean cross-entropy and analytic gradients (lists dW, db)."""
    x = np.asarray(x, dtype=float)
    labels = np.asarray(labels, dtype=int)
    n = x.shape[0]
    pre, post = [], [x]
    a = x
    for w, b in zip(network.weights[:-1], network.biases[:-1]):
        z = a @ w + b
        a = np.where(z > 0.0, z, LEAKY_SLOPE * z)
        pre.append(z)
        post.append(a)
    logits = a @ network.weights[-1] + network.biases[-1]
    probs = softmax(logits)
    eps = 1e-300
    loss = -np.mean(np.log(probs[np.arange(n), labels] + eps))

    dz = probs.copy()
    dz[np.arange(n), labels] -= 1.0
    dz /= n
    grads_w = [None] * len(network.weights)
    grads_b = [None] * len(network.biases)
    grads_w[-1] = post[-1].T @ dz
    grads_b[-1] = dz.sum(axis=0)
    da = dz @ network.weights[-1].T
    for layer in range(len(network.weights) - 2, -1, -1):
        dzl = da * np.where(pre[layer] > 0.0, 1.0, LEAKY_SLOPE)
        grads_w[layer] = post[layer].T @ dzl
        grads_b[layer] = dzl.sum(axis=0)
        da = dzl @ network.weights[layer].T
    return loss, grads_w, grads_b


def numeric_gradient_check(network, x, labels, eps=1e-6):
    """Max relative mismatch between analytic and central-difference grads."""
    _, grads_w, grads_b = loss_and_gradients(network, x, labels)
    worst = 0.0
    rng = np.random.default_rng(0)
    for params, grads in ((network.weights, grads_w),
                          (network.biases, grads_b)):
        for arr, grad in zip(params, grads):
            flat = arr.ravel()
            picks = rng.choice(flat.size, size=min(10, flat.size), replace=False)
            for i in picks:
                keep = flat[i]
                flat[i] = keep + eps
                up, _, _ = loss_and_gradients(network, x, labels)
                flat[i] = keep - eps
                dn, _, _ = loss_and_gradients(network, x, labels)
                flat[i] = keep
                fd = (up - dn) / (2.0 * eps)
                an = grad.ravel()[i]
                denom = max(abs(fd), abs(an), 1e-8)
                worst = max(worst, abs(fd - an) / denom)
    return worst


def train_network(features, labels, seed=0, epochs=60, batch_size=128,
                  learning_rate=0.05, momentum=0.9, validation_fraction=0.1,
                  patience=10, family=None, verbose=False):
    """Train on (n, features) rows; returns (best network, history dict)."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ConfigurationError("features and labels disagree in length")
    if x.shape[0] < 20:
        raise ConfigurationError("need at least 20 samples")
    rng = np.random.default_rng(seed)
    order = rng.permutation(x.shape[0])
    x, y = x[order], y[order]
    n_val = max(1, int(round(validation_fraction * x.shape[0])))
    x_val, y_val = x[:n_val], y[:n_val]
    x_tr, y_tr = x[n_val:], y[n_val:]

    net = init_network(x.shape[1], rng, family)
    vel_w = [np.zeros_like(w) for w in net.weights]
    vel_b = [np.zeros_like(b) for b in net.biases]
    best = {"acc": -1.0, "weights": None, "biases": None, "epoch": -1}
    history = {"train_loss": [], "val_accuracy": []}
    since_best = 0
    for epoch in range(epochs):
        perm = rng.permutation(x_tr.shape[0])
        losses = []
        for start in range(0, x_tr.shape[0], batch_size):
            batch = perm[start:start + batch_size]
            loss, gw, gb = loss_and_gradients(net, x_tr[batch], y_tr[batch])
            if not np.isfinite(loss):
                raise TrainingDivergedError(
                    f"loss became non-finite at epoch {epoch}", epoch=epoch)
            losses.append(loss)
            for i in range(len(net.weights)):
                vel_w[i] = momentum * vel_w[i] - learning_rate * gw[i]
                vel_b[i] = momentum * vel_b[i] - learning_rate * gb[i]
                net.weights[i] += vel_w[i]
                net.biases[i] += vel_b[i]
        acc = float(np.mean(net.predict(x_val) == y_val))
        history["train_loss"].append(float(np.mean(losses)))
        history["val_accuracy"].append(acc)
        if verbose:
            print(f"epoch {epoch:3d}  loss {history['train_loss'][-1]:.4f}  "
                  f"val acc {acc:.4f}")
        if acc > best["acc"]:
            best.update(acc=acc, epoch=epoch,
                        weights=[w.copy() for w in net.weights],
                        biases=[b.copy() for b in net.biases])
            since_best = 0
        else:
            since_best += 1
            if since_best >= patience:
                break
    if best["acc"] < 0.6:
        raise TrainingDivergedError(
            f"validation accuracy stalled at {best['acc']:.3f}",
            epoch=best["epoch"])
    net.weights = best["weights"]
    net.biases = best["biases"]
    net.metadata.update(seed=int(seed), epochs=int(best["epoch"] + 1),
                        val_accuracy=float(best["acc"]),
                        family=family or net.metadata.get("family"))
    return net, history


# ------------------------------------------------------------- serialization

def save_network(network, path):
    """Write the versioned little-endian weight file."""
    sizes = network.layer_sizes
    meta = network.metadata
    head = struct.pack("<8sIII", _MAGIC, _VERSION, sizes[0], len(sizes))
    head += struct.pack(f"<{len(sizes)}I", *sizes)
    head += struct.pack("<IQId", _ACTIVATION_TAG,
                        int(meta.get("seed", 0)), int(meta.get("epochs", 0)),
                        float(meta.get("val_accuracy", 0.0)))
    payload = bytearray(head)
    for w, b in zip(network.weights, network.biases):
        payload += np.ascontiguousarray(w, dtype="<f8").tobytes()
        payload += np.ascontiguousarray(b, dtype="<f8").tobytes()
    payload += struct.pack("<I", zlib.crc32(bytes(payload)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(payload))


def load_network(path):
    """Read a weight file; raises DeserializationError on any malformation."""
    raw = Path(path).read_bytes()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(raw):
            raise DeserializationError(
                f"truncated network file at byte {off}", offset=off)
        vals = struct.unpack_from(fmt, raw, off)
        off += size
        return vals

    magic, version, n_inputs, n_sizes = take("<8sIII")
    if magic != _MAGIC:
        raise DeserializationError("bad magic; not a network file", offset=0)
    if version != _VERSION:
        raise DeserializationError(
            f"unsupported version {version} (expected {_VERSION})", offset=8)
    sizes = list(take(f"<{n_sizes}I"))
    if sizes[0] != n_inputs or len(sizes) < 2:
        raise DeserializationError("inconsistent layer sizes", offset=off)
    activation, seed, epochs, val_acc = take("<IQId")
    if activation != _ACTIVATION_TAG:
        raise DeserializationError(
            f"unsupported activation tag {activation}", offset=off)
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        nbytes = 8 * n_in * n_out
        if off + nbytes > len(raw):
            raise DeserializationError(
                f"truncated network file at byte {off}", offset=off)
        weights.append(np.frombuffer(raw, dtype="<f8", count=n_in * n_out,
                                     offset=off).reshape(n_in, n_out).copy())
        off += nbytes
        if off + 8 * n_out > len(raw):
            raise DeserializationError(
                f"truncated network file at byte {off}", offset=off)
        biases.append(np.frombuffer(raw, dtype="<f8", count=n_out,
                                    offset=off).copy())
        off += 8 * n_out
    stored_crc, = take("<I")
    if off != len(raw):
        raise DeserializationError(
            f"{len(raw) - off} trailing bytes after checksum", offset=off)
    if stored_crc != (zlib.crc32(raw[:-4]) & 0xFFFFFFFF):
        raise DeserializationError("checksum mismatch", offset=len(raw) - 4)
    return MlpNetwork(layer_sizes=sizes, weights=weights, biases=biases,
                      metadata={"seed": seed, "epochs": epochs,
                                "val_accuracy": val_acc,
                                "family": f"{n_inputs}-input"})


@lru_cache(maxsize=4)
def default_network(dim):
    """The shipped pretrained network for the 1D or 2D feature family."""
    name = {1: "rh_1d.net", 2: "rh_2d.net"}.get(dim)
    if name is None:
        raise ConfigurationError(f"no default network for dimension {dim}")
    path = Path(__file__).parent / "data" / name
    if not path.exists():
        raise ConfigurationError(
            f"shipped network {name} is missing; train one with "
            f"'dgdetect train-ann --family {dim}d'")
    return load_network(path)


# ------------------------------------------------------------ data synthesis

def _smooth_samples_1d(rng, n, x):
    """Random cubic-plus-sine values at points x (broadcast over rows).

    Wavenumbers stay below ~1 per cell width: resolved data varies slowly
    on the grid scale, a steep ramp through one cell is unresolved and
    belongs to the jump class.
    """
    c = rng.normal(0.0, 1.0, size=(n, 4)) * np.array([1.0, 1.0, 0.4, 0.15])
    a = np.abs(rng.normal(0.0, 1.0, size=(n, 1)))
    omega = rng.uniform(0.2, 1.1, size=(n, 1))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, 1))
    vals = (c[:, 0:1] + c[:, 1:2] * x + c[:, 2:3] * x ** 2 + c[:, 3:4] * x ** 3
            + a * np.sin(omega * x + phase))
    return vals


def synthetic_stencils_1d(count, seed=0, jump_lo=1.0, jump_hi=5.0):
    """Feature rows (count, 5) and labels for three-cell stencils, h = 1.

    Positives carry a jump interior to the center cell; a share of the
    negatives carry the same jump in a neighbor cell instead, so the
    label is "discontinuity in THIS cell", not "discontinuity nearby".
    The magnitude floor is one local spread: weaker steps are treated
    as resolved.
    """
    rng = np.random.default_rng(seed)
    degrees = rng.integers(1, 5, size=count)
    troubled = rng.random(count) < 0.5
    near_miss = ~troubled & (rng.random(count) < 0.4)
    # exact constants land on the zero feature vector after normalization;
    # they must be in the smooth class or boundary ghosts get flagged
    flat = ~troubled & ~near_miss & (rng.random(count) < 0.08)
    features = np.empty((count, 5))
    for n in range(1, 5):
        mask = degrees == n
        m = int(mask.sum())
        if m == 0:
            continue
        nodes, w = gauss_legendre(n + 2)
        phi = orthonormal_legendre(nodes, n)
        centers = np.array([-1.0, 0.0, 1.0])
        x = centers[None, :, None] + 0.5 * nodes[None, None, :]  # (1, 3, nq)
        vals = _smooth_samples_1d(rng, m, x.reshape(1, -1)).reshape(m, 3, -1)
        is_flat = flat[mask]
        vals[is_flat] = vals[is_flat][:, :1, :1]
        is_tr = troubled[mask]
        is_nb = near_miss[mask]
        x0 = rng.uniform(-0.4, 0.4, size=m)
        x0 = np.where(is_nb, rng.choice([-1.0, 1.0], size=m)
                      * rng.uniform(0.6, 1.4, size=m), x0)
        # floor the jump at the smooth carrier's stencil-wide swing: a step
        # below the local variation is resolved data, not a discontinuity
        spread = 0.5 * np.ptp(vals.reshape(m, -1), axis=1) + 0.1
        mag = rng.uniform(jump_lo, jump_hi, size=m) * spread \
            * rng.choice([-1.0, 1.0], size=m)
        jump = np.where((x >= x0[:, None, None])
                        & (is_tr | is_nb)[:, None, None],
                        mag[:, None, None], 0.0)
        vals = vals + jump
        avgs = 0.5 * np.einsum("q,kcq->kc", w, vals)
        center_modal = np.einsum("qm,kq->km", phi * w[:, None], vals[:, 1, :])
        ends = orthonormal_legendre(np.array([-1.0, 1.0]), n)
        features[mask, 0] = avgs[:, 0]
        features[mask, 1] = avgs[:, 1]
        features[mask, 2] = avgs[:, 2]
        features[mask, 3] = center_modal @ ends[0]
        features[mask, 4] = center_modal @ ends[1]
    return features, troubled.astype(int)


def _smooth_samples_2d(rng, n, x, y):
    c = rng.normal(0.0, 1.0, size=(n, 6)) * np.array([1, 1, 1, 0.5, 0.5, 0.5])
    a = np.abs(rng.normal(0.0, 1.0, size=(n, 1, 1)))
    wx = rng.uniform(0.2, 1.8, size=(n, 1, 1))
    wy = rng.uniform(0.2, 1.8, size=(n, 1, 1))
    phase = rng.uniform(0.0, 2.0 * np.pi, size=(n, 1, 1))
    cc = [c[:, i][:, None, None] for i in range(6)]
    return (cc[0] + cc[1] * x + cc[2] * y + cc[3] * x * x + cc[4] * x * y
            + cc[5] * y * y + a * np.sin(wx * x + wy * y + phase))


def synthetic_stencils_2d(count, seed=0, jump_lo=0.5, jump_hi=5.0):
    """Feature rows (count, 12) and labels for 2D four-cell stencils, h = 1."""
    rng = np.random.default_rng(seed)
    degrees = rng.integers(1, 5, size=count)
    troubled = rng.random(count) < 0.5
    features = np.empty((count, 12))
    centers = np.array([[0.0, 0.0], [-1.0, 0.0], [1.0, 0.0], [0.0, -1.0]])
    for n in range(1, 5):
        mask = degrees == n
        m = int(mask.sum())
        if m == 0:
            continue
        nodes, w1 = gauss_legendre(n + 2)
        nq = nodes.size
        ra, sa = np.meshgrid(nodes, nodes, indexing="xy")
        w2 = np.outer(w1, w1).ravel()
        vx = orthonormal_legendre(ra.ravel(), n)
        vy = orthonormal_legendre(sa.ravel(), n)
        # modes 0, 1 (first x) and n+1 (first y) in tensor ordering
        sel_tables = np.stack([vx[:, 0] * vy[:, 0], vx[:, 1] * vy[:, 0],
                               vx[:, 0] * vy[:, 1]])
        x = centers[None, :, 0, None] + 0.5 * ra.ravel()[None, None, :]
        y = centers[None, :, 1, None] + 0.5 * sa.ravel()[None, None, :]
        vals = _smooth_samples_2d(rng, m, x, y)
        is_tr = troubled[mask]
        x0 = rng.uniform(-0.45, 0.45, size=(m, 1, 1))
        y0 = rng.uniform(-0.45, 0.45, size=(m, 1, 1))
        theta = rng.uniform(0.0, 2.0 * np.pi, size=(m, 1, 1))
        spread = np.std(vals.reshape(m, -1), axis=1) + 0.1
        mag = rng.uniform(jump_lo, jump_hi, size=m) * spread \
            * rng.choice([-1.0, 1.0], size=m)
        side = (x - x0) * np.cos(theta) + (y - y0) * np.sin(theta) >= 0.0
        vals = vals + np.where(side & is_tr[:, None, None],
                               mag[:, None, None], 0.0)
        modal = np.einsum("sq,q,kcq->kcs", sel_tables, w2, vals)
        features[mask] = modal.reshape(m, -1)
    return features, troubled.astype(int)
