"""ADAM minimization of the block loss and the outer block-marching loop.

Gradients are full-batch (every quadrature point, every iteration): the
discrete functional is a fixed finite sum, so there is nothing to
mini-batch.  The returned parameters per block are the best seen over the
whole run (lowest recorded loss), not the last iterate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .divergence import DivergenceConfig, classify_cells
from .flux import FluxModel
from .geometry import BlockSpec, SpaceTimeDomain, build_blocks, build_mesh
from .loss import BlockLoss, BlockLossSpec
from .network import (
    MlpParameters,
    evaluate_batch,
    flatten_params,
    init_first_block,
    unflatten_params,
    warm_start,
)
from .quadrature import CompositeRule

__all__ = [
    "TrainingConfig",
    "AdamState",
    "BlockSolveResult",
    "TrainingDivergence",
    "adam_step",
    "solve_block",
    "solve_all_blocks",
]


class TrainingDivergence(RuntimeError):
    """Raised when the loss or gradient turns non-finite during training."""


@dataclass
class TrainingConfig:
    """Per-block optimization settings.

    ``lr_schedule`` is piecewise constant: a list of (start_iteration, rate)
    pairs, first entry starting at iteration 0.  The paper-style decays
    ("halve every 25000", "to 20% every 20000") are expressed by listing the
    boundaries explicitly.
    """

    iterations: int
    lr_schedule: list[tuple[int, float]] = field(default_factory=lambda: [(0, 1e-3)])
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8
    seed: int = 0
    history_stride: int = 100

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("iteration count must be >= 1")
        self.lr_schedule = sorted((int(i), float(r)) for i, r in self.lr_schedule)
        if not self.lr_schedule or self.lr_schedule[0][0] != 0:
            raise ValueError("learning-rate schedule must start at iteration 0")
        if any(r <= 0 for _, r in self.lr_schedule):
            raise ValueError("learning rates must be positive")
        if self.history_stride < 1:
            raise ValueError("history stride must be >= 1")

    def rate_at(self, iteration: int) -> float:
        rate = self.lr_schedule[0][1]
        for start, r in self.lr_schedule:
            if iteration >= start:
                rate = r
        return rate


@dataclass
class AdamState:
    """First/second moment accumulators and step count, zero-initialized."""

    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, n: int) -> "AdamState":
        return cls(m=np.zeros(n), v=np.zeros(n), t=0)


def adam_step(
    params: MlpParameters,
    grad: np.ndarray,
    state: AdamState,
    rate: float,
    betas: tuple[float, float] = (0.9, 0.999),
    epsilon: float = 1e-8,
) -> MlpParameters:
    """One bias-corrected ADAM update; mutates ``state``, returns new parameters."""
    if not np.all(np.isfinite(grad)):
        raise TrainingDivergence("non-finite gradient in ADAM step")
    b1, b2 = betas
    state.t += 1
    state.m = b1 * state.m + (1.0 - b1) * grad
    state.v = b2 * state.v + (1.0 - b2) * grad * grad
    m_hat = state.m / (1.0 - b1**state.t)
    v_hat = state.v / (1.0 - b2**state.t)
    theta = flatten_params(params.weights, params.biases)
    theta = theta - rate * m_hat / (np.sqrt(v_hat) + epsilon)
    return unflatten_params(params.layer_dims, theta)


@dataclass
class BlockSolveResult:
    """Outcome of training one block."""

    params: MlpParameters
    loss_history: list[tuple[int, float, float]]  # (iteration, loss, learning rate)
    final_loss: float
    wall_time: float
    block_index: int
    failure: str | None = None


def solve_block(
    block: BlockSpec,
    init: MlpParameters,
    spec: BlockLossSpec,
    model: FluxModel,
    cfg: TrainingConfig,
) -> BlockSolveResult:
    """Minimize the block functional with ADAM; returns the best-seen parameters."""
    if init.input_dim != block.domain.d + 1:
        raise ValueError("network input width does not match block dimension")
    loss = BlockLoss(spec, model)
    t_start = time.perf_counter()
    params = init.copy()
    state = AdamState.zeros(flatten_params(params.weights, params.biases).size)
    best_loss = np.inf
    best = params
    history: list[tuple[int, float, float]] = []
    failure = None

    for it in range(cfg.iterations):
        value, grad = loss.value_and_gradient(params)
        if not np.isfinite(value) or not np.all(np.isfinite(grad)):
            failure = f"non-finite loss/gradient at iteration {it}"
            break
        rate = cfg.rate_at(it)
        if value < best_loss:
            best_loss = value
            best = params
        if it % cfg.history_stride == 0 or it == cfg.iterations - 1:
            history.append((it, value, rate))
        params = adam_step(params, grad, state, rate,
                           betas=(cfg.adam_beta1, cfg.adam_beta2), epsilon=cfg.adam_epsilon)

    if failure is None:
        # The final iterate was produced by the last step but never scored.
        value = loss.value(params)
        if np.isfinite(value) and value < best_loss:
            best_loss = value
            best = params
    final_loss = loss.value(best) if failure is None else float("nan")
    return BlockSolveResult(
        params=best,
        loss_history=history,
        final_loss=final_loss,
        wall_time=time.perf_counter() - t_start,
        block_index=block.index,
        failure=failure,
    )


def solve_all_blocks(
    domain: SpaceTimeDomain,
    n_b: int,
    layer_dims: Sequence[int],
    model: FluxModel,
    cfg: TrainingConfig | Sequence[TrainingConfig],
    *,
    h,
    delta: float,
    div_cfg: DivergenceConfig,
    alpha: float,
    initial_data: Callable,
    inflow_data: Callable | None = None,
    inflow_faces=(),
    boundary_rule: CompositeRule | None = None,
    adapt_quadrature: bool = False,
    sharpness_threshold: float | None = None,
    on_block_done: Callable | None = None,
) -> list[BlockSolveResult]:
    """March the block space-time method over k = 1..n_b.

    Block k's interface data is the previous block's trained network
    restricted to the interface plane (block 1 uses ``initial_data``);
    parameters warm-start from the previous block.  With
    ``adapt_quadrature`` the interface trace also drives the cell
    classifier, so columns crossed by a discontinuity use the refined
    sub-interval counts.  Marching stops at the first failed block; the
    partial results carry the failure marker.
    """
    configs = [cfg] * n_b if isinstance(cfg, TrainingConfig) else list(cfg)
    if len(configs) != n_b:
        raise ValueError(f"{len(configs)} training configs for {n_b} blocks")
    blocks = build_blocks(domain, n_b, inflow_faces)
    results: list[BlockSolveResult] = []
    params = init_first_block(layer_dims, blocks[0], configs[0].seed)
    interface: Callable = initial_data

    for block, block_cfg in zip(blocks, configs):
        mesh = build_mesh(block, h, delta, div_cfg.rule,
                          sub_m=np.atleast_1d(div_cfg.sub_m)[0], sub_n=div_cfg.sub_n)
        if adapt_quadrature and mesh.d == 1:
            trace = _spatial_trace(interface, block)
            mesh.refined_cells = classify_cells(mesh, model, trace, sharpness_threshold)
        spec = BlockLossSpec(
            mesh=mesh, alpha=alpha, interface_data=interface,
            inflow_data=inflow_data, div_cfg=div_cfg, boundary_rule=boundary_rule,
        )
        result = solve_block(block, params, spec, model, block_cfg)
        results.append(result)
        if result.failure is not None:
            break
        if on_block_done is not None:
            on_block_done(result)
        params = warm_start(result.params)
        interface = _network_trace(result.params, block.t_hi)
    return results


def _network_trace(params: MlpParameters, t_star: float) -> Callable:
    """The trained network as a data function on the plane t = t_star."""

    def data(points: np.ndarray) -> np.ndarray:
        pts = np.array(points, dtype=float)
        pts[:, -1] = t_star
        return evaluate_batch(params, pts)

    return data


def _spatial_trace(data: Callable, block: BlockSpec) -> Callable:
    """Adapt a points-based data function to a spatial one at the block start."""

    def trace(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        pts = np.column_stack([x, np.full(x.size, block.t_lo)])
        return np.asarray(data(pts), dtype=float)

    return trace
