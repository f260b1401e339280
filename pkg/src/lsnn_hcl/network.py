"""Fully connected ReLU networks: evaluation, gradients, initialization, checkpoints.

The network maps a space-time point z = (x, t) (or (x, y, t)) to a scalar:

    out = w_last . relu(...relu(W1 z - b1)...) - b_last

Biases are subtracted, matching the layer convention used throughout the
package.  The gradient engine is a hand-written reverse pass specialized to
losses that are compositions of network evaluations, quadrature sums, and
squares; it is not a general autodiff framework.  The ReLU derivative at
exactly zero is taken as 0, fixed for reproducibility.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol, Sequence

import numpy as np

from .geometry import BlockSpec
from .rng import named_stream

__all__ = [
    "MlpParameters",
    "evaluate",
    "evaluate_batch",
    "forward_batch",
    "backward_batch",
    "loss_gradient",
    "init_first_block",
    "warm_start",
    "parameter_count",
    "flatten_params",
    "unflatten_params",
    "save_checkpoint",
    "load_checkpoint",
]

CHECKPOINT_FORMAT = "lsnn-hcl-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class MlpParameters:
    """All weights and biases of an l-layer ReLU network.

    ``layer_dims`` is (n_0, n_1, ..., n_{l-1}, 1) with n_0 the space-time
    input dimension.  ``weights[k]`` has shape (n_{k+1}, n_k); ``biases[k]``
    has length n_{k+1}.  Total parameter count is sum n_k (n_{k-1} + 1).
    """

    layer_dims: tuple[int, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self):
        self.layer_dims = tuple(int(v) for v in self.layer_dims)
        dims = self.layer_dims
        if len(dims) < 2 or dims[-1] != 1:
            raise ValueError(f"layer_dims must end in 1 with at least one layer, got {dims}")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            expected = (dims[k + 1], dims[k])
            if w.shape != expected:
                raise ValueError(f"layer {k + 1}: weight shape {w.shape}, expected {expected}")
            if b.shape != (dims[k + 1],):
                raise ValueError(f"layer {k + 1}: bias shape {b.shape}, expected ({dims[k + 1]},)")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {k + 1}: non-finite parameter entries")

    @property
    def n_layers(self) -> int:
        return len(self.layer_dims) - 1

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def copy(self) -> "MlpParameters":
        return MlpParameters(
            layer_dims=self.layer_dims,
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def parameter_count(layer_dims: Sequence[int]) -> int:
    """Total number of trainable scalars: sum over layers of n_k (n_{k-1} + 1)."""
    dims = list(layer_dims)
    return sum(dims[k] * (dims[k - 1] + 1) for k in range(1, len(dims)))


def forward_batch(params: MlpParameters, z: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Evaluate the network on a batch of points, keeping activations for backward.

    ``z`` has shape (n, input_dim).  Returns (outputs of shape (n,), cache).
    """
    z = np.asarray(z, dtype=float)
    if z.ndim != 2 or z.shape[1] != params.input_dim:
        raise ValueError(f"batch shape {z.shape} incompatible with input dimension {params.input_dim}")
    activations = [z]
    a = z
    for k in range(params.n_layers - 1):
        a = np.maximum(a @ params.weights[k].T - params.biases[k], 0.0)
        activations.append(a)
    out = a @ params.weights[-1].T - params.biases[-1]
    return out[:, 0], activations


def evaluate_batch(params: MlpParameters, z: np.ndarray) -> np.ndarray:
    """Network values at a batch of points, shape (n,)."""
    return forward_batch(params, z)[0]


def evaluate(params: MlpParameters, z) -> float:
    """Network value at a single space-time point."""
    return float(evaluate_batch(params, np.asarray(z, dtype=float)[None, :])[0])


def backward_batch(
    params: MlpParameters,
    activations: list[np.ndarray],
    out_cotangent: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Reverse pass: per-parameter gradients given d(loss)/d(output) per point.

    ``activations`` is the cache from :func:`forward_batch`.  The ReLU mask
    is recovered from the stored post-activation values (positive iff the
    pre-activation was positive), so the derivative at a pre-activation of
    exactly zero is 0.
    """
    grad_w = [np.empty_like(w) for w in params.weights]
    grad_b = [np.empty_like(b) for b in params.biases]
    delta = np.asarray(out_cotangent, dtype=float)[:, None]
    grad_w[-1][:] = delta.T @ activations[-1]
    grad_b[-1][:] = -delta.sum(axis=0)
    for k in range(params.n_layers - 2, -1, -1):
        delta = (delta @ params.weights[k + 1]) * (activations[k + 1] > 0.0)
        grad_w[k][:] = delta.T @ activations[k]
        grad_b[k][:] = -delta.sum(axis=0)
    return grad_w, grad_b


def flatten_params(weights: list[np.ndarray], biases: list[np.ndarray]) -> np.ndarray:
    """Concatenate per-layer (row-major weights, then biases) into one vector."""
    parts = []
    for w, b in zip(weights, biases):
        parts.append(w.ravel())
        parts.append(b.ravel())
    return np.concatenate(parts)


def unflatten_params(layer_dims: Sequence[int], vec: np.ndarray) -> MlpParameters:
    """Inverse of :func:`flatten_params` for the given architecture."""
    dims = tuple(int(v) for v in layer_dims)
    vec = np.asarray(vec, dtype=float)
    if vec.size != parameter_count(dims):
        raise ValueError(f"vector of length {vec.size} does not match architecture {dims}")
    weights, biases, pos = [], [], 0
    for k in range(1, len(dims)):
        n_out, n_in = dims[k], dims[k - 1]
        weights.append(vec[pos : pos + n_out * n_in].reshape(n_out, n_in).copy())
        pos += n_out * n_in
        biases.append(vec[pos : pos + n_out].copy())
        pos += n_out
    return MlpParameters(layer_dims=dims, weights=weights, biases=biases)


class PointwiseLoss(Protocol):
    """A loss that depends on the network only through its values at fixed points."""

    points: np.ndarray

    def value_and_cotangent(self, u: np.ndarray) -> tuple[float, np.ndarray]: ...


def loss_gradient(params: MlpParameters, loss: PointwiseLoss) -> np.ndarray:
    """Exact reverse-mode gradient of ``loss`` with respect to every parameter.

    Returns the flat gradient vector (per layer: row-major weights, then
    biases).  A non-finite loss value is propagated; the trainer is
    responsible for aborting with diagnostics.
    """
    u, cache = forward_batch(params, loss.points)
    _, cot = loss.value_and_cotangent(u)
    grad_w, grad_b = backward_batch(params, cache, cot)
    return flatten_params(grad_w, grad_b)


def init_first_block(
    layer_dims: Sequence[int],
    block: BlockSpec,
    seed: int,
) -> MlpParameters:
    """Initialize parameters for the first block, deterministically from seed.

    First hidden layer: each neuron's hyperplane w.z = b gets a direction
    sampled uniformly on the unit half-sphere and a bias sampled so the
    hyperplane cuts through the interior of the block, spreading the initial
    ReLU break lines across the slab.  Deeper layers use uniform entries in
    [-r, r] with r = sqrt(6 / (fan_in + fan_out)).  The output layer is
    rescaled (by halving) until |output| <= 10 at 100 random block points.
    """
    dims = tuple(int(v) for v in layer_dims)
    d_in = dims[0]
    if d_in != block.domain.d + 1:
        raise ValueError(f"input width {d_in} does not match block dimension {block.domain.d + 1}")
    rng = named_stream(seed, "init-first-block")

    lo = np.array([*block.spatial_lo, block.t_lo])
    hi = np.array([*block.spatial_hi, block.t_hi])

    n1 = dims[1]
    directions = rng.standard_normal((n1, d_in))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    directions[directions[:, -1] < 0.0] *= -1.0  # half-sphere: temporal component >= 0
    # w.z over the box spans [sum of per-axis minima, sum of maxima].
    span_lo = np.minimum(directions * lo, directions * hi).sum(axis=1)
    span_hi = np.maximum(directions * lo, directions * hi).sum(axis=1)
    b1 = span_lo + (span_hi - span_lo) * rng.uniform(0.05, 0.95, size=n1)

    weights = [directions]
    biases = [b1]
    for k in range(2, len(dims)):
        r = np.sqrt(6.0 / (dims[k - 1] + dims[k]))
        weights.append(rng.uniform(-r, r, size=(dims[k], dims[k - 1])))
        biases.append(rng.uniform(-r, r, size=dims[k]))
    params = MlpParameters(layer_dims=dims, weights=weights, biases=biases)

    probe = lo + (hi - lo) * rng.uniform(size=(100, d_in))
    for _ in range(64):
        if np.abs(evaluate_batch(params, probe)).max() <= 10.0:
            break
        params.weights[-1] *= 0.5
        params.biases[-1] *= 0.5
    return params


def warm_start(prev: MlpParameters) -> MlpParameters:
    """Deep copy of the previous block's parameters; training resumes from it."""
    return prev.copy()


def save_checkpoint(
    params: MlpParameters,
    path,
    seed: int,
    block_index: int,
) -> None:
    """Write a JSON checkpoint that round-trips parameters exactly.

    JSON float serialization uses shortest round-trip decimals, so every
    float64 survives save/load bit-for-bit.
    """
    payload = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "layer_dims": list(params.layer_dims),
        "weights": [w.ravel().tolist() for w in params.weights],
        "biases": [b.tolist() for b in params.biases],
        "seed": int(seed),
        "block_index": int(block_index),
    }
    Path(path).write_text(json.dumps(payload))


def load_checkpoint(path) -> tuple[MlpParameters, int, int]:
    """Load a checkpoint; returns (params, seed, block_index)."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a parameter checkpoint")
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {payload.get('version')}")
    dims = tuple(payload["layer_dims"])
    weights = [
        np.array(flat, dtype=float).reshape(dims[k + 1], dims[k])
        for k, flat in enumerate(payload["weights"])
    ]
    biases = [np.array(b, dtype=float) for b in payload["biases"]]
    params = MlpParameters(layer_dims=dims, weights=weights, biases=biases)
    return params, int(payload["seed"]), int(payload["block_index"])
