"""Minimal dense-network machinery: forward/backward, Adam, soft updates.

Everything is float64 numpy so gradient checks against finite differences
stay sharp. Inputs are row-major batches (batch, features); a weight matrix
has shape (fan_in, fan_out).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

ACTIVATIONS = ("relu", "linear", "tanh")

CHECKPOINT_VERSION = 1


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")


class DenseNet:
    """A plain MLP described by a list of (weight, bias, activation)."""

    def __init__(self, layers: list[Layer]):
        for prev, nxt in zip(layers, layers[1:]):
            if prev.weight.shape[1] != nxt.weight.shape[0]:
                raise ValueError("layer dimensions do not chain")
        self.layers = layers

    @property
    def input_dim(self) -> int:
        return self.layers[0].weight.shape[0]

    @property
    def output_dim(self) -> int:
        return self.layers[-1].weight.shape[1]

    def params(self) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            out.append(layer.weight)
            out.append(layer.bias)
        return out

    def clone(self) -> "DenseNet":
        return DenseNet([Layer(l.weight.copy(), l.bias.copy(), l.activation)
                         for l in self.layers])

    def copy_from(self, other: "DenseNet") -> None:
        for mine, theirs in zip(self.layers, other.layers):
            mine.weight[...] = theirs.weight
            mine.bias[...] = theirs.bias


def build_net(input_dim: int, hidden: list[int], output_dim: int,
              rng: np.random.Generator, output_activation: str = "linear",
              output_scale: float = 3e-3) -> DenseNet:
    """He-style fan-in init for hidden ReLU layers, small uniform output."""
    dims = [input_dim] + list(hidden) + [output_dim]
    layers = []
    for i in range(len(dims) - 1):
        fan_in, fan_out = dims[i], dims[i + 1]
        last = i == len(dims) - 2
        if last:
            limit = output_scale
            act = output_activation
        else:
            limit = np.sqrt(6.0 / fan_in)
            act = "relu"
        w = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        b = np.zeros(fan_out)
        layers.append(Layer(w, b, act))
    return DenseNet(layers)


def forward(net: DenseNet, x: np.ndarray) -> tuple[np.ndarray, list]:
    """Affine + activation composition; returns (output, cache)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != net.input_dim:
        raise ValueError(f"input dim {x.shape[1]} != {net.input_dim}")
    cache = []
    h = x
    for layer in net.layers:
        z = h @ layer.weight + layer.bias
        if layer.activation == "relu":
            out = np.maximum(z, 0.0)
        elif layer.activation == "tanh":
            out = np.tanh(z)
        else:
            out = z
        cache.append((h, z, out))
        h = out
    return h, cache


def backward(net: DenseNet, cache: list,
             output_gradient: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
    """Exact reverse-mode gradients.

    Returns (grads, input_gradient); grads aligns with net.params(), i.e.
    [dW0, db0, dW1, db1, ...]. `output_gradient` is dLoss/dOutput with the
    same shape as the forward output.
    """
    if len(cache) != len(net.layers):
        raise ValueError("cache does not match network (stale cache?)")
    grad = np.atleast_2d(np.asarray(output_gradient, dtype=float))
    grads: list[np.ndarray] = [None] * (2 * len(net.layers))
    for idx in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[idx]
        h_in, z, out = cache[idx]
        if layer.activation == "relu":
            grad = grad * (z > 0.0)
        elif layer.activation == "tanh":
            grad = grad * (1.0 - out ** 2)
        grads[2 * idx] = h_in.T @ grad
        grads[2 * idx + 1] = grad.sum(axis=0)
        grad = grad @ layer.weight.T
    return grads, grad


@dataclass
class AdamState:
    learning_rate: float = 1e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray],
                   learning_rate: float = 1e-4) -> "AdamState":
        return cls(learning_rate=learning_rate,
                   m=[np.zeros_like(p) for p in params],
                   v=[np.zeros_like(p) for p in params])


def clip_global_norm(grads: list[np.ndarray],
                     clip_norm: float) -> list[np.ndarray]:
    """Scale the whole gradient so its global L2 norm is <= clip_norm."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
    if total > clip_norm and total > 0.0:
        scale = clip_norm / total
        return [g * scale for g in grads]
    return grads


def adam_step(state: AdamState, params: list[np.ndarray],
              grads: list[np.ndarray],
              clip_norm: float | None = 1.0) -> list[np.ndarray]:
    """Global-norm clipping followed by an in-place Adam update."""
    for g in grads:
        if not np.all(np.isfinite(g)):
            raise ValueError("non-finite gradient")
    if clip_norm is not None:
        grads = clip_global_norm(grads, clip_norm)
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m[...] = b1 * m + (1.0 - b1) * g
        v[...] = b2 * v + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        p -= state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return params


def soft_update(target: DenseNet, eval_net: DenseNet, tau: float) -> DenseNet:
    """theta_T <- tau * theta_E + (1 - tau) * theta_T, elementwise."""
    if len(target.layers) != len(eval_net.layers):
        raise ValueError("architecture mismatch")
    for t_layer, e_layer in zip(target.layers, eval_net.layers):
        if t_layer.weight.shape != e_layer.weight.shape:
            raise ValueError("architecture mismatch")
        t_layer.weight[...] = (tau * e_layer.weight
                               + (1.0 - tau) * t_layer.weight)
        t_layer.bias[...] = tau * e_layer.bias + (1.0 - tau) * t_layer.bias
    return target


def net_to_dict(net: DenseNet) -> dict:
    return {
        "layers": [
            {
                "shape": list(l.weight.shape),
                "activation": l.activation,
                "weight": l.weight.ravel().tolist(),  # row-major
                "bias": l.bias.tolist(),
            }
            for l in net.layers
        ]
    }


def net_from_dict(data: dict) -> DenseNet:
    layers = []
    for spec in data["layers"]:
        shape = tuple(spec["shape"])
        w = np.array(spec["weight"], dtype=float).reshape(shape)
        b = np.array(spec["bias"], dtype=float)
        layers.append(Layer(w, b, spec["activation"]))
    return DenseNet(layers)


def save_checkpoint(path, nets: dict[str, DenseNet],
                    meta: dict | None = None) -> None:
    """Structured-text dump of named networks; bytes are reproducible."""
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "meta": meta or {},
        "nets": {name: net_to_dict(net) for name, net in nets.items()},
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, separators=(",", ":"))


def load_checkpoint(path) -> tuple[dict[str, DenseNet], dict]:
    with open(path) as fh:
        payload = json.load(fh)
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version "
                         f"{payload.get('format_version')}")
    nets = {name: net_from_dict(d) for name, d in payload["nets"].items()}
    return nets, payload.get("meta", {})
