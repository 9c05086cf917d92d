"""Dense feedforward classifier with unit-level masking.

Hidden units are gated by a binary state vector: a unit whose bit is 0 has
its activation forced to zero, which removes its bias, incoming row and
outgoing column from the computation without touching the stored weights.
The final (logit) layer is never masked.

Checkpoint layout (little-endian, version 1)::

    magic        4 bytes  b"EPNN"
    version      uint32   1
    input_dim    uint32
    n_layers     uint32
    per layer:   uint32 out_width, uint32 in_width,
                 uint8 activation (0 = relu, 1 = identity), uint8 maskable
    per layer:   float64 weights, row-major (out_width x in_width),
                 then float64 biases (out_width)
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

ACTIVATIONS = ("relu", "identity")

_MAGIC = b"EPNN"
_VERSION = 1


class DivergenceError(RuntimeError):
    """Raised when the loss or a gradient stops being finite."""


@dataclass
class DenseLayer:
    weights: np.ndarray  # (out_width, in_width)
    biases: np.ndarray  # (out_width,)
    activation: str = "relu"
    maskable: bool = True

    @property
    def in_width(self) -> int:
        return self.weights.shape[1]

    @property
    def out_width(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class UnitLayout:
    """Maps mask bits to hidden units, layer-major then unit-minor."""

    offsets: tuple[int, ...]
    widths: tuple[int, ...]

    @property
    def size(self) -> int:
        return sum(self.widths)

    def split(self, mask: np.ndarray) -> list[np.ndarray]:
        return [mask[o:o + w] for o, w in zip(self.offsets, self.widths)]

    def describe(self) -> str:
        offsets = ",".join(str(o) for o in self.offsets)
        widths = ",".join(str(w) for w in self.widths)
        return f"offsets={offsets} widths={widths}"


@dataclass
class Network:
    layers: list[DenseLayer]
    input_dim: int = field(init=False)
    class_count: int = field(init=False)

    def __post_init__(self):
        if not self.layers:
            raise ValueError("network needs at least the logit layer")
        self.input_dim = self.layers[0].in_width
        self.class_count = self.layers[-1].out_width
        if self.class_count < 2:
            raise ValueError("class count must be at least 2")
        for prev, nxt in zip(self.layers, self.layers[1:]):
            if prev.out_width != nxt.in_width:
                raise ValueError(
                    f"layer widths {prev.out_width} -> {nxt.in_width} do not chain")
        for layer in self.layers[:-1]:
            if layer.activation != "relu" or not layer.maskable:
                raise ValueError("hidden layers must be maskable relu layers")
        last = self.layers[-1]
        if last.activation != "identity" or last.maskable:
            raise ValueError("the logit layer must be an unmasked identity layer")

    @property
    def layout(self) -> UnitLayout:
        widths = tuple(layer.out_width for layer in self.layers[:-1])
        offsets = tuple(int(o) for o in np.cumsum((0,) + widths[:-1])) if widths else ()
        return UnitLayout(offsets, widths)

    @property
    def n_units(self) -> int:
        """Number of prunable hidden units D."""
        return self.layout.size

    def copy(self) -> "Network":
        return Network([
            DenseLayer(l.weights.copy(), l.biases.copy(), l.activation, l.maskable)
            for l in self.layers
        ])

    def parameters(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def checksum(self) -> str:
        h = hashlib.sha1()
        for p in self.parameters():
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()


def init_network(input_dim: int, hidden: list[int] | tuple[int, ...],
                 class_count: int, seed: int = 0) -> Network:
    """Glorot-uniform weights, zero biases, float64."""
    if input_dim < 1 or class_count < 2 or any(h < 1 for h in hidden):
        raise ValueError("invalid network shape")
    rng = np.random.default_rng(seed)
    widths = [input_dim, *hidden, class_count]
    layers = []
    for i, (fan_in, fan_out) in enumerate(zip(widths[:-1], widths[1:])):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        last = i == len(widths) - 2
        layers.append(DenseLayer(w, np.zeros(fan_out),
                                 "identity" if last else "relu", not last))
    return Network(layers)


def ones_mask(net: Network) -> np.ndarray:
    return np.ones(net.n_units, dtype=np.uint8)


def _check_inputs(net: Network, inputs: np.ndarray, mask) -> tuple[np.ndarray, np.ndarray | None]:
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != net.input_dim:
        raise ValueError(f"inputs of shape {x.shape} do not match input_dim {net.input_dim}")
    if mask is None:
        return x, None
    m = np.asarray(mask)
    if m.shape != (net.n_units,):
        raise ValueError(f"mask length {m.size} != prunable unit count {net.n_units}")
    return x, m


def forward(net: Network, inputs: np.ndarray) -> np.ndarray:
    """Plain forward pass, no masking path at all."""
    x, _ = _check_inputs(net, inputs, None)
    h = x
    for layer in net.layers:
        z = h @ layer.weights.T + layer.biases
        h = np.maximum(z, 0.0) if layer.activation == "relu" else z
    return h


def _forward_cache(net, x, mask):
    gates = net.layout.split(mask.astype(np.float64))
    acts = [x]
    pre = []
    h = x
    for l, layer in enumerate(net.layers):
        z = h @ layer.weights.T + layer.biases
        pre.append(z)
        if layer.activation == "relu":
            h = np.maximum(z, 0.0) * gates[l]
        else:
            h = z
        acts.append(h)
    return pre, acts


def forward_masked(net: Network, inputs: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Logits with dropped hidden units' activations forced to zero."""
    x, m = _check_inputs(net, inputs, mask)
    _, acts = _forward_cache(net, x, m)
    return acts[-1]


def log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> float:
    targets = np.asarray(targets)
    return float(-log_softmax(logits)[np.arange(len(targets)), targets].mean())


def gradients(net: Network, inputs, targets, mask) -> tuple[float, list[tuple[np.ndarray, np.ndarray]]]:
    """Mean cross-entropy and its gradient per layer as (dW, db)."""
    x, m = _check_inputs(net, inputs, mask)
    targets = np.asarray(targets, dtype=np.intp)
    if len(targets) != len(x) or len(x) == 0:
        raise ValueError("need a nonempty batch with one target per row")
    pre, acts = _forward_cache(net, x, m)
    logits = acts[-1]
    logp = log_softmax(logits)
    n = len(targets)
    loss = float(-logp[np.arange(n), targets].mean())

    delta = np.exp(logp)
    delta[np.arange(n), targets] -= 1.0
    delta /= n
    gates = net.layout.split(m.astype(np.float64))
    grads = [None] * len(net.layers)
    for l in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[l]
        grads[l] = (delta.T @ acts[l], delta.sum(axis=0))
        if l == 0:
            break
        upstream = delta @ layer.weights
        delta = upstream * (pre[l - 1] > 0) * gates[l - 1]
    return loss, grads


def sgd_step(net: Network, inputs, targets, mask, lr: float,
             weight_decay: float = 0.0) -> float:
    """One in-place SGD update; returns the pre-update mean cross-entropy."""
    if lr <= 0:
        raise ValueError("lr must be positive")
    loss, grads = gradients(net, inputs, targets, mask)
    if not np.isfinite(loss) or not all(
            np.isfinite(gw).all() and np.isfinite(gb).all() for gw, gb in grads):
        raise DivergenceError(f"non-finite loss or gradient (loss={loss})")
    for layer, (gw, gb) in zip(net.layers, grads):
        layer.weights -= lr * (gw + weight_decay * layer.weights)
        layer.biases -= lr * (gb + weight_decay * layer.biases)
    return loss


def count_params(net: Network, mask: np.ndarray | None = None) -> tuple[int, int]:
    """Kept and total trainable parameters under unit-level pruning.

    A weight survives only when both the unit producing its input and the
    unit consuming it are active, so a weight between two dropped units is
    removed once.
    """
    widths = [net.input_dim] + [l.out_width for l in net.layers]
    total = sum(o * i + o for i, o in zip(widths[:-1], widths[1:]))
    if mask is None:
        return total, total
    m = np.asarray(mask)
    if m.shape != (net.n_units,):
        raise ValueError(f"mask length {m.size} != prunable unit count {net.n_units}")
    alive = [net.input_dim] + [int(g.sum()) for g in net.layout.split(m)] + [net.class_count]
    kept = sum(o * i + o for i, o in zip(alive[:-1], alive[1:]))
    return kept, total


def kept_ratio(net: Network, mask: np.ndarray | None = None) -> float:
    kept, total = count_params(net, mask)
    return kept / total


def topk_hits(logits: np.ndarray, targets: np.ndarray, k: int) -> np.ndarray:
    """Boolean per sample: target among the k largest logits.

    Ties rank the lower class index first.
    """
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.intp)
    n, c = logits.shape
    if not 1 <= k <= c:
        raise ValueError(f"k={k} must lie in [1, {c}]")
    target_logit = logits[np.arange(n), targets][:, None]
    idx = np.arange(c)[None, :]
    ahead = (logits > target_logit) | ((logits == target_logit) & (idx < targets[:, None]))
    return ahead.sum(axis=1) < k


def topk_accuracy(net: Network, mask, dataset, k: int) -> float:
    if len(dataset.labels) == 0:
        raise ValueError("empty dataset")
    logits = forward_masked(net, dataset.features, mask)
    return float(topk_hits(logits, dataset.labels, k).mean())


def save_checkpoint(net: Network, path) -> None:
    buf = bytearray(_MAGIC)
    buf += struct.pack("<III", _VERSION, net.input_dim, len(net.layers))
    for layer in net.layers:
        buf += struct.pack("<IIBB", layer.out_width, layer.in_width,
                           ACTIVATIONS.index(layer.activation), int(layer.maskable))
    for layer in net.layers:
        buf += np.ascontiguousarray(layer.weights, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(layer.biases, dtype="<f8").tobytes()
    Path(path).write_bytes(bytes(buf))


def load_checkpoint(path) -> Network:
    raw = Path(path).read_bytes()
    if raw[:4] != _MAGIC:
        raise ValueError(f"{path}: not a network checkpoint")
    version, input_dim, n_layers = struct.unpack_from("<III", raw, 4)
    if version != _VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    pos = 16
    shapes = []
    for _ in range(n_layers):
        shapes.append(struct.unpack_from("<IIBB", raw, pos))
        pos += 10
    layers = []
    for out_w, in_w, act, maskable in shapes:
        nw, nb = out_w * in_w, out_w
        if pos + 8 * (nw + nb) > len(raw):
            raise ValueError(f"{path}: truncated checkpoint")
        w = np.frombuffer(raw, "<f8", nw, pos).reshape(out_w, in_w).astype(np.float64)
        pos += 8 * nw
        b = np.frombuffer(raw, "<f8", nb, pos).astype(np.float64)
        pos += 8 * nb
        layers.append(DenseLayer(w, b, ACTIVATIONS[act], bool(maskable)))
    if pos != len(raw):
        raise ValueError(f"{path}: trailing bytes in checkpoint")
    net = Network(layers)
    if net.input_dim != input_dim:
        raise ValueError(f"{path}: input_dim header disagrees with first layer")
    return net


def save_mask(mask: np.ndarray, layout: UnitLayout, path) -> None:
    """Two header lines (format tag, unit layout) then one line of 0/1 characters."""
    bits = "".join("1" if b else "0" for b in np.asarray(mask))
    Path(path).write_text(f"# epruning-mask v1\n# layout {layout.describe()}\n{bits}\n")


def load_mask(path) -> tuple[np.ndarray, UnitLayout]:
    lines = Path(path).read_text().splitlines()
    if len(lines) < 3 or lines[0] != "# epruning-mask v1" or not lines[1].startswith("# layout "):
        raise ValueError(f"{path}: not a mask file")
    fields = dict(part.split("=", 1) for part in lines[1][len("# layout "):].split())

    def ints(text):
        return tuple(int(v) for v in text.split(",") if v)

    layout = UnitLayout(ints(fields.get("offsets", "")), ints(fields.get("widths", "")))
    bits = lines[2].strip()
    if set(bits) - {"0", "1"} or len(bits) != layout.size:
        raise ValueError(f"{path}: mask bits disagree with the layout header")
    return np.frombuffer(bits.encode(), np.uint8) - ord("0"), layout
