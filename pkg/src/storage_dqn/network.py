"""Dueling Q-network in plain numpy with hand-written backprop.

Layout: ReLU trunk -> (value stream -> 1) and (advantage stream -> n_actions),
combined as ``Q = V + (A - mean(A))``. Every parameter lives in one flat
float64 vector; layers are views into it, so a copy or an update is one
vector operation.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

CHECKPOINT_MAGIC = b"SDQNCKPT"
CHECKPOINT_VERSION = 1


class ShapeError(ValueError):
    pass


@dataclass(frozen=True)
class LayerSpec:
    trunk_sizes: tuple[int, ...] = (64, 64)
    stream_sizes: tuple[int, ...] = (32,)
    n_actions: int = 3

    def __post_init__(self):
        object.__setattr__(self, "trunk_sizes", tuple(int(s) for s in self.trunk_sizes))
        object.__setattr__(self, "stream_sizes", tuple(int(s) for s in self.stream_sizes))
        if any(s < 1 for s in self.trunk_sizes + self.stream_sizes) or self.n_actions < 1:
            raise ValueError("layer sizes must be >= 1")

    def shapes(self, input_dim: int) -> dict[str, list[tuple[int, int]]]:
        """(fan_in, fan_out) per dense layer of each block."""
        trunk = list(zip((input_dim,) + self.trunk_sizes[:-1], self.trunk_sizes))
        width = self.trunk_sizes[-1] if self.trunk_sizes else input_dim
        stream = (width,) + self.stream_sizes
        value = list(zip(stream, self.stream_sizes + (1,)))
        advantage = list(zip(stream, self.stream_sizes + (self.n_actions,)))
        return {"trunk": trunk, "value": value, "advantage": advantage}


BLOCKS = ("trunk", "value", "advantage")


@dataclass
class NetworkParams:
    spec: LayerSpec
    input_dim: int
    vector: np.ndarray
    seed: int | None = None
    layers: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.vector = np.ascontiguousarray(self.vector, dtype=np.float64)
        shapes = self.spec.shapes(self.input_dim)
        n = sum(i * o + o for block in shapes.values() for i, o in block)
        if self.vector.shape != (n,):
            raise ShapeError(f"parameter vector has {self.vector.size} entries, expected {n}")
        self.layers = {}
        offset = 0
        for name in BLOCKS:
            views = []
            for fan_in, fan_out in shapes[name]:
                w = self.vector[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out)
                offset += fan_in * fan_out
                b = self.vector[offset:offset + fan_out]
                offset += fan_out
                views.append((w, b))
            self.layers[name] = views

    @property
    def size(self) -> int:
        return self.vector.size

    def like(self, vector) -> "NetworkParams":
        return NetworkParams(self.spec, self.input_dim, vector, self.seed)


def init(spec: LayerSpec, input_dim: int, seed: int) -> NetworkParams:
    """Weights ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero."""
    if input_dim < 1:
        raise ShapeError("input_dim must be >= 1")
    rng = np.random.default_rng(seed)
    chunks = []
    for name in BLOCKS:
        for fan_in, fan_out in spec.shapes(input_dim)[name]:
            bound = 1.0 / np.sqrt(fan_in)
            chunks.append(rng.uniform(-bound, bound, size=fan_in * fan_out))
            chunks.append(np.zeros(fan_out))
    return NetworkParams(spec, input_dim, np.concatenate(chunks), seed)


def aggregate(value, advantage):
    """Dueling combination ``V + (A - mean_a A)`` along the last axis."""
    return value + (advantage - advantage.mean(axis=-1, keepdims=True))


def _stack(layers, x, cache):
    """Dense stack with ReLU on hidden layers, identity on the last one."""
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        cache.append(x)
        z = x @ w + b
        x = np.maximum(z, 0.0) if i < last else z
    return x


def _trunk(params, x, cache):
    for w, b in params.layers["trunk"]:
        cache.append(x)
        x = np.maximum(x @ w + b, 0.0)
    return x


def _check_input(params, obs):
    x = np.asarray(obs, dtype=np.float64)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[1] != params.input_dim:
        raise ShapeError(f"observation length {x.shape[1]} != network input {params.input_dim}")
    return x, single


def streams(params: NetworkParams, obs):
    """Return ``(V, A)`` before aggregation; V has shape (n, 1)."""
    x, _ = _check_input(params, obs)
    h = _trunk(params, x, [])
    return _stack(params.layers["value"], h, []), _stack(params.layers["advantage"], h, [])


def forward(params: NetworkParams, obs) -> np.ndarray:
    """Q-values, shape (n_actions,) for one observation or (n, n_actions) for a batch."""
    x, single = _check_input(params, obs)
    h = _trunk(params, x, [])
    q = aggregate(_stack(params.layers["value"], h, []), _stack(params.layers["advantage"], h, []))
    return q[0] if single else q


def loss(params: NetworkParams, obs, actions, targets, weights=None) -> float:
    """IS-weighted ``(1/2n) sum w_i (y_i - Q(s_i, a_i))^2``."""
    q = forward(params, np.atleast_2d(obs))
    n = q.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    diff = np.asarray(targets, dtype=float) - q[np.arange(n), np.asarray(actions)]
    return float(np.sum(w * diff * diff) / (2 * n))


def loss_and_grad(params: NetworkParams, obs, actions, targets, weights=None):
    """Loss, flat gradient vector (same layout as ``params.vector``) and TD errors."""
    x, _ = _check_input(params, obs)
    n = x.shape[0]
    actions = np.asarray(actions)
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)

    trunk_cache, value_cache, adv_cache = [], [], []
    h = _trunk(params, x, trunk_cache)
    v = _stack(params.layers["value"], h, value_cache)
    a = _stack(params.layers["advantage"], h, adv_cache)
    q = aggregate(v, a)
    rows = np.arange(n)
    td = np.asarray(targets, dtype=float) - q[rows, actions]
    value = float(np.sum(w * td * td) / (2 * n))

    dq = np.zeros_like(q)
    dq[rows, actions] = -w * td / n
    dv = dq.sum(axis=1, keepdims=True)
    da = dq - dq.mean(axis=1, keepdims=True)

    grad = np.empty_like(params.vector)
    g = params.like(grad)
    dh = _backprop_stack(params.layers["value"], g.layers["value"], value_cache, dv)
    dh += _backprop_stack(params.layers["advantage"], g.layers["advantage"], adv_cache, da)
    # trunk activations are the cached inputs of the following layer (and h itself)
    outs = trunk_cache[1:] + [h]
    for (w_, _), (gw, gb), inp, out in reversed(
        list(zip(params.layers["trunk"], g.layers["trunk"], trunk_cache, outs))
    ):
        dz = dh * (out > 0)
        gw[...] = inp.T @ dz
        gb[...] = dz.sum(axis=0)
        dh = dz @ w_.T
    return value, grad, td


def _backprop_stack(layers, grads, cache, dout):
    last = len(layers) - 1
    for i in range(last, -1, -1):
        w, _ = layers[i]
        gw, gb = grads[i]
        if i < last:
            # cache[i + 1] is this layer's ReLU output
            dout = dout * (cache[i + 1] > 0)
        gw[...] = cache[i].T @ dout
        gb[...] = dout.sum(axis=0)
        dout = dout @ w.T
    return dout


def backward(params: NetworkParams, obs, actions, targets, weights=None) -> NetworkParams:
    """Exact gradient of :func:`loss`, shaped like ``params``."""
    return params.like(loss_and_grad(params, obs, actions, targets, weights)[1])


def apply_update(params: NetworkParams, gradients, learning_rate: float) -> NetworkParams:
    g = gradients.vector if isinstance(gradients, NetworkParams) else np.asarray(gradients)
    if g.shape != params.vector.shape:
        raise ShapeError("gradient shape does not match parameters")
    return params.like(params.vector - learning_rate * g)


def copy_params(src: NetworkParams) -> NetworkParams:
    return src.like(src.vector.copy())


def save(params: NetworkParams, path) -> Path:
    """Write a checkpoint: magic, version, JSON header, raw little-endian float64.

    The output depends only on the parameters, so identical runs give
    byte-identical files.
    """
    header = json.dumps(
        {
            "version": CHECKPOINT_VERSION,
            "input_dim": params.input_dim,
            "trunk_sizes": list(params.spec.trunk_sizes),
            "stream_sizes": list(params.spec.stream_sizes),
            "n_actions": params.spec.n_actions,
            "seed": params.seed,
            "count": params.size,
        },
        sort_keys=True,
    ).encode()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        fh.write(params.vector.astype("<f8").tobytes())
    return path


def load(path) -> NetworkParams:
    raw = Path(path).read_bytes()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ShapeError(f"{path}: not a checkpoint file")
    offset = len(CHECKPOINT_MAGIC)
    version, hlen = struct.unpack_from("<II", raw, offset)
    if version != CHECKPOINT_VERSION:
        raise ShapeError(f"{path}: unsupported checkpoint version {version}")
    offset += 8
    header = json.loads(raw[offset:offset + hlen])
    offset += hlen
    vector = np.frombuffer(raw, dtype="<f8", offset=offset).astype(np.float64)
    if vector.size != header["count"]:
        raise ShapeError(f"{path}: truncated checkpoint")
    spec = LayerSpec(tuple(header["trunk_sizes"]), tuple(header["stream_sizes"]), header["n_actions"])
    return NetworkParams(spec, header["input_dim"], vector, header["seed"])
