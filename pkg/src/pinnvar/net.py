"""Dense tanh feed-forward networks with Xavier init and a flat parameter view."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad

__all__ = [
    "DenseNetwork",
    "xavier_init",
    "forward",
    "forward_batch",
    "flatten",
    "unflatten",
    "parameter_count",
    "layer_views",
    "save_checkpoint",
    "load_checkpoint",
    "RNG_ALGORITHM",
]

# Seedable generator used for all weight draws; recorded in run metadata.
RNG_ALGORITHM = "numpy-PCG64"


@dataclass
class DenseNetwork:
    """A fully connected network: tanh hidden layers, linear output.

    weights[l] has shape (dims[l+1], dims[l]); biases[l] has length dims[l+1].
    """

    layer_dims: list[int]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    seed: int | None = None

    def __post_init__(self):
        dims = self.layer_dims
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError("layer_dims needs at least two entries, all >= 1")
        for l, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[l + 1], dims[l]) or b.shape != (dims[l + 1],):
                raise ValueError(f"layer {l}: shape mismatch with layer_dims")


def xavier_init(layer_dims, seed):
    """Glorot-uniform weights, zero biases, reproducible for a fixed seed."""
    dims = list(layer_dims)
    if len(dims) < 2 or any(d < 1 for d in dims):
        raise ValueError("layer_dims needs at least two entries, all >= 1")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseNetwork(dims, weights, biases, seed=int(seed))


def parameter_count(layer_dims):
    dims = list(layer_dims)
    return sum(o * i + o for i, o in zip(dims[:-1], dims[1:]))


def forward(net, xs):
    """Evaluate the network on a list of scalars (plain or autodiff Vars)."""
    if len(xs) != net.layer_dims[0]:
        raise ValueError(
            f"expected {net.layer_dims[0]} inputs, got {len(xs)}"
        )
    h = list(xs)
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        out = []
        for row in range(w.shape[0]):
            acc = b[row]
            for col in range(w.shape[1]):
                acc = ad.add(acc, ad.mul(w[row, col], h[col]))
            out.append(acc if l == last else ad.tanh(acc))
        h = out
    return h


def layer_views(flat, layer_dims, as_vars=True):
    """Slice a flat parameter vector into per-layer (W, b) pairs.

    With as_vars=True the slices are wrapped as autodiff Vars so they can act
    as gradient sources; the canonical ordering is per layer, row-major
    weights first, then biases.
    """
    dims = list(layer_dims)
    views = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = np.asarray(flat[pos:pos + fan_out * fan_in]).reshape(fan_out, fan_in)
        pos += fan_out * fan_in
        b = np.asarray(flat[pos:pos + fan_out])
        pos += fan_out
        if as_vars:
            views.append((ad.Var(w.copy()), ad.Var(b.copy())))
        else:
            views.append((w, b))
    if pos != len(flat):
        raise ValueError(f"flat vector length {len(flat)} != expected {pos}")
    return views


def forward_batch(layers, cols):
    """Evaluate the network on a batch, one 1-D value per input coordinate.

    layers: list of (W, b) pairs, plain arrays or Vars (W shaped out x in).
    cols: list of equally sized 1-D values; returns the (N,) output column
    (single-output networks) or the (N, out) matrix.
    """
    h = ad.concat_columns(cols)
    last = len(layers) - 1
    for l, (w, b) in enumerate(layers):
        z = ad.add(ad.matmul(h, ad.transpose(w)), b)
        h = z if l == last else ad.tanh(z)
    if np.shape(ad.value_of(h))[1] == 1:
        return ad.reshape(h, (np.shape(ad.value_of(h))[0],))
    return h


def flatten(net):
    """Canonical flat parameter vector: per layer, row-major W then b."""
    parts = []
    for w, b in zip(net.weights, net.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten(net, vec):
    """Rebuild a network with the same architecture from a flat vector."""
    vec = np.asarray(vec, dtype=np.float64)
    expected = parameter_count(net.layer_dims)
    if vec.shape != (expected,):
        raise ValueError(f"expected flat vector of length {expected}, got {vec.shape}")
    pairs = layer_views(vec, net.layer_dims, as_vars=False)
    return DenseNetwork(
        list(net.layer_dims),
        [w.copy() for w, _ in pairs],
        [b.copy() for _, b in pairs],
        seed=net.seed,
    )


def save_checkpoint(net, path):
    """Write the network as JSON; floats stored as round-trippable strings."""
    doc = {
        "layer_dims": list(net.layer_dims),
        "flat_params": [repr(float(v)) for v in flatten(net)],
        "seed": net.seed,
        "activation": "tanh",
        "rng": RNG_ALGORITHM,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_checkpoint(path):
    with open(path) as fh:
        doc = json.load(fh)
    dims = [int(d) for d in doc["layer_dims"]]
    vec = np.array([float(s) for s in doc["flat_params"]])
    template = xavier_init(dims, seed=0)
    net = unflatten(template, vec)
    net.seed = doc.get("seed")
    return net
