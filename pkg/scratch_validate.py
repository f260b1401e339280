"""Scratch validation of the assembled loss vs a slow per-cell reference."""
import numpy as np

import lsnn_hcl as L
from lsnn_hcl.divergence import DivergenceConfig, div_t_1d
from lsnn_hcl.geometry import BoundaryFace, build_blocks, build_mesh
from lsnn_hcl.loss import BlockLoss, BlockLossSpec
from lsnn_hcl.quadrature import CompositeRule, RuleKind


def slow_loss_1d(u_fn, model, spec):
    mesh = spec.mesh
    cfg = spec.div_cfg
    alpha = spec.alpha
    p = spec.boundary_rule.p
    interior = 0.0

    def u_xt(x, t):
        pts = np.column_stack([np.broadcast_to(x, np.broadcast(x, t).shape).ravel(),
                               np.broadcast_to(t, np.broadcast(x, t).shape).ravel()])
        return np.asarray(u_fn(pts), dtype=float).reshape(np.broadcast(x, t).shape)

    if mesh.rule is RuleKind.MIDPOINT:
        for idx in mesh.cell_indices():
            refined = idx in mesh.refined_cells
            div = div_t_1d(u_xt, model, mesh.cell_bounds(idx), cfg, refined=refined)
            interior += (mesh.cell_measure * div) ** 2
    else:
        # per-node divergence over node-centered volumes
        m, n = mesh.m[0], mesh.n
        node_div = {}
        flags = np.zeros((m, n), dtype=bool)
        for (i, j) in mesh.refined_cells:
            flags[i, j] = True
        for i in range(m + 1):
            for j in range(n + 1):
                cells = [(ci, cj) for ci in (i - 1, i) for cj in (j - 1, j)
                         if 0 <= ci < m and 0 <= cj < n]
                refined = any(flags[c] for c in cells)
                vol = mesh.node_volume((i, j))
                node_div[(i, j)] = div_t_1d(u_xt, model, vol, cfg, refined=refined)
        w = mesh.cell_measure / 4.0
        for idx in mesh.cell_indices():
            i, j = idx
            s = sum(node_div[(i + a, j + b)] for a in (0, 1) for b in (0, 1))
            interior += (w * s) ** 2

    boundary = 0.0
    # interface t = t_lo, segments per spatial cell
    rule = spec.boundary_rule
    for i in range(mesh.m[0]):
        x0 = float(mesh.x_node(0, i))
        x1 = float(mesh.x_node(0, i + 1))
        nodes, wts = rule.nodes_weights(x0, x1)
        pts = np.column_stack([nodes, np.full(nodes.size, mesh.block.t_lo)])
        g = np.asarray(spec.interface_data(pts), dtype=float)
        q = float(np.dot(wts, u_fn(pts) - g))
        boundary += q * q
    for face in mesh.block.inflow_faces:
        xv = mesh.block.spatial_lo[0] if face.side == "lo" else mesh.block.spatial_hi[0]
        for j in range(mesh.n):
            t0 = float(mesh.t_node(j))
            t1 = float(mesh.t_node(j + 1))
            nodes, wts = rule.nodes_weights(t0, t1)
            pts = np.column_stack([np.full(nodes.size, xv), nodes])
            g = np.asarray(spec.inflow_data(pts), dtype=float)
            q = float(np.dot(wts, u_fn(pts) - g))
            boundary += q * q
    return interior + alpha * boundary


def main():
    rng = np.random.default_rng(42)
    domain = L.SpaceTimeDomain((-1.0,), (1.0,), 0.6)
    faces = (BoundaryFace(0, "lo"), BoundaryFace(0, "hi"))
    blocks = build_blocks(domain, 3, faces)
    model = L.builtin_flux("burgers1d")

    def u_fn(pts):
        x, t = pts[:, 0], pts[:, 1]
        return np.sin(2.3 * x) * np.cos(1.7 * t) + 0.3 * x * t

    def interface(pts):
        return np.where(pts[:, 0] <= 0.0, 1.0, 0.0)

    def inflow(pts):
        return np.where(pts[:, 0] < 0.0, 1.0, 0.0)

    for rule in ("midpoint", "trapezoidal"):
        for refined in (set(), {(2, 1), (3, 0)}):
            mesh = build_mesh(blocks[0], 0.25, 0.1, rule, sub_m=2, sub_n=2)
            mesh.refined_cells = refined
            cfg = DivergenceConfig(rule=rule, sub_m=2, sub_n=2, refined_sub_m=6, refined_sub_n=4)
            spec = BlockLossSpec(mesh=mesh, alpha=7.5, interface_data=interface,
                                 inflow_data=inflow, div_cfg=cfg,
                                 boundary_rule=CompositeRule("trapezoidal", 3))
            bl = BlockLoss(spec, model)
            fast = bl.value_from_function(u_fn)
            slow = slow_loss_1d(u_fn, model, spec)
            rel = abs(fast - slow) / abs(slow)
            print(f"rule={rule:12s} refined={bool(refined)!s:5s} fast={fast:.12e} slow={slow:.12e} rel={rel:.2e}")
            assert rel < 1e-12, "MISMATCH"

    # gradient check vs central differences
    from lsnn_hcl.network import init_first_block, flatten_params, unflatten_params
    mesh = build_mesh(blocks[0], 0.25, 0.1, "trapezoidal", sub_m=2, sub_n=2)
    spec = BlockLossSpec(mesh=mesh, alpha=7.5, interface_data=interface, inflow_data=inflow)
    bl = BlockLoss(spec, model)
    params = init_first_block([2, 10, 10, 1], blocks[0], seed=3)
    # random perturbation away from kinks
    theta = flatten_params(params.weights, params.biases) + 0.01 * rng.standard_normal(151)
    params = unflatten_params(params.layer_dims, theta)
    loss_val, grad = bl.value_and_gradient(params)
    eps = 1e-5
    idxs = rng.choice(theta.size, size=40, replace=False)
    worst = 0.0
    for i in idxs:
        tp = theta.copy(); tp[i] += eps
        tm = theta.copy(); tm[i] -= eps
        fd = (bl.value(unflatten_params(params.layer_dims, tp))
              - bl.value(unflatten_params(params.layer_dims, tm))) / (2 * eps)
        denom = max(1.0, abs(fd))
        worst = max(worst, abs(fd - grad[i]) / denom)
    print(f"loss={loss_val:.6e}  grad FD worst rel err: {worst:.3e}")
    assert worst < 1e-5


if __name__ == "__main__":
    main()
