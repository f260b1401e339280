"""Shared oracles for the test suite.

The slow block-loss references evaluate the functional cell by cell through
the public per-cell divergence operator and explicit boundary quadrature,
independent of the assembled sparse fast path they are used to check.
"""

import numpy as np
import pytest

from lsnn_hcl.divergence import div_t_1d, div_t_2d
from lsnn_hcl.quadrature import RuleKind


def u_on_grid_1d(u_fn):
    """Adapt a points-based field to the (x, t) broadcast signature."""

    def u_xt(x, t):
        shape = np.broadcast(x, t).shape
        pts = np.column_stack([
            np.broadcast_to(x, shape).ravel(),
            np.broadcast_to(t, shape).ravel(),
        ])
        return np.asarray(u_fn(pts), dtype=float).reshape(shape)

    return u_xt


def u_on_grid_2d(u_fn):
    def u_xyt(x, y, t):
        shape = np.broadcast(x, y, t).shape
        pts = np.column_stack([
            np.broadcast_to(x, shape).ravel(),
            np.broadcast_to(y, shape).ravel(),
            np.broadcast_to(t, shape).ravel(),
        ])
        return np.asarray(u_fn(pts), dtype=float).reshape(shape)

    return u_xyt


def slow_block_loss_1d(u_fn, model, spec):
    """Reference evaluation of the 1D block functional, cell by cell."""
    mesh = spec.mesh
    cfg = spec.div_cfg
    u_xt = u_on_grid_1d(u_fn)
    interior = 0.0

    if mesh.rule is RuleKind.MIDPOINT:
        for idx in mesh.cell_indices():
            div = div_t_1d(u_xt, model, mesh.cell_bounds(idx), cfg,
                           refined=idx in mesh.refined_cells)
            interior += (mesh.cell_measure * div) ** 2
    else:
        m, n = mesh.m[0], mesh.n
        flags = np.zeros((m, n), dtype=bool)
        for (i, j) in mesh.refined_cells:
            flags[i, j] = True
        node_div = {}
        for i in range(m + 1):
            for j in range(n + 1):
                cells = [(ci, cj) for ci in (i - 1, i) for cj in (j - 1, j)
                         if 0 <= ci < m and 0 <= cj < n]
                refined = any(flags[c] for c in cells)
                node_div[(i, j)] = div_t_1d(u_xt, model, mesh.node_volume((i, j)), cfg,
                                            refined=refined)
        w = mesh.cell_measure / 4.0
        for (i, j) in mesh.cell_indices():
            s = sum(node_div[(i + a, j + b)] for a in (0, 1) for b in (0, 1))
            interior += (w * s) ** 2

    boundary = 0.0
    rule = spec.boundary_rule
    for i in range(mesh.m[0]):
        nodes, wts = rule.nodes_weights(float(mesh.x_node(0, i)), float(mesh.x_node(0, i + 1)))
        pts = np.column_stack([nodes, np.full(nodes.size, mesh.block.t_lo)])
        q = float(np.dot(wts, np.asarray(u_fn(pts)) - np.asarray(spec.interface_data(pts))))
        boundary += q * q
    for face in mesh.block.inflow_faces:
        xv = mesh.block.spatial_lo[0] if face.side == "lo" else mesh.block.spatial_hi[0]
        for j in range(mesh.n):
            nodes, wts = rule.nodes_weights(float(mesh.t_node(j)), float(mesh.t_node(j + 1)))
            pts = np.column_stack([np.full(nodes.size, xv), nodes])
            q = float(np.dot(wts, np.asarray(u_fn(pts)) - np.asarray(spec.inflow_data(pts))))
            boundary += q * q
    return interior + spec.alpha * boundary


def slow_block_loss_2d(u_fn, model, spec):
    """Reference evaluation of the 2D block functional, cell by cell."""
    mesh = spec.mesh
    cfg = spec.div_cfg
    block = mesh.block
    u_xyt = u_on_grid_2d(u_fn)
    m1, m2, n = mesh.m[0], mesh.m[1], mesh.n
    interior = 0.0

    if mesh.rule is RuleKind.MIDPOINT:
        for idx in mesh.cell_indices():
            div = div_t_2d(u_xyt, model, mesh.cell_bounds(idx), cfg,
                           refined=idx in mesh.refined_cells)
            interior += (mesh.cell_measure * div) ** 2
    else:
        flags = np.zeros((m1, m2, n), dtype=bool)
        for idx in mesh.refined_cells:
            flags[idx] = True
        node_div = {}
        for i in range(m1 + 1):
            for j in range(m2 + 1):
                for k in range(n + 1):
                    cells = [(ci, cj, ck)
                             for ci in (i - 1, i) for cj in (j - 1, j) for ck in (k - 1, k)
                             if 0 <= ci < m1 and 0 <= cj < m2 and 0 <= ck < n]
                    refined = any(flags[c] for c in cells)
                    node_div[(i, j, k)] = div_t_2d(u_xyt, model, mesh.node_volume((i, j, k)),
                                                   cfg, refined=refined)
        w = mesh.cell_measure / 8.0
        for (i, j, k) in mesh.cell_indices():
            s = sum(node_div[(i + a, j + b, k + c)]
                    for a in (0, 1) for b in (0, 1) for c in (0, 1))
            interior += (w * s) ** 2

    boundary = 0.0
    rule = spec.boundary_rule

    def segment(fixed_axis, fixed_value, bounds_a, bounds_b, data):
        na, wa = rule.nodes_weights(*bounds_a)
        nb, wb = rule.nodes_weights(*bounds_b)
        A, B = np.meshgrid(na, nb, indexing="ij")
        W = np.outer(wa, wb).ravel()
        cols = [None, None, None]
        free = [a for a in range(3) if a != fixed_axis]
        cols[fixed_axis] = np.full(A.size, fixed_value)
        cols[free[0]] = A.ravel()
        cols[free[1]] = B.ravel()
        pts = np.column_stack(cols)
        q = float(np.dot(W, np.asarray(u_fn(pts)) - np.asarray(data(pts))))
        return q * q

    for i in range(m1):
        for j in range(m2):
            boundary += segment(
                2, block.t_lo,
                (float(mesh.x_node(0, i)), float(mesh.x_node(0, i + 1))),
                (float(mesh.x_node(1, j)), float(mesh.x_node(1, j + 1))),
                spec.interface_data)
    for face in block.inflow_faces:
        fixed = (block.spatial_lo[face.axis] if face.side == "lo"
                 else block.spatial_hi[face.axis])
        other = 1 - face.axis
        for j in range(mesh.m[other]):
            for k in range(n):
                boundary += segment(
                    face.axis, fixed,
                    (float(mesh.x_node(other, j)), float(mesh.x_node(other, j + 1))),
                    (float(mesh.t_node(k)), float(mesh.t_node(k + 1))),
                    spec.inflow_data)
    return interior + spec.alpha * boundary


@pytest.fixture
def rng():
    return np.random.default_rng(20240613)
