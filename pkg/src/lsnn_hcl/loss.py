"""The discrete block least-squares functional and its assembled fast path.

The functional over one space-time block is

    sum_K Q_K(div_T F(u))^2  +  alpha * sum_E Q_E(u - data)^2

where Q_K is the cell quadrature applied to the discrete divergence at the
cell's quadrature points and Q_E runs over boundary segments of the block's
interface plane (previous block's trace, or initial data) and declared
inflow faces.  The squared quantity is the quadrature-weighted *sum* per
cell, exactly as the discrete functional is written; for the midpoint rule
this reduces to (|K| div_T)^2 per cell.

Everything the functional needs from the network is its values at a fixed
finite point set, so assembly precomputes sparse matrices mapping point
values (and pointwise flux values) to per-cell and per-segment residuals.
One loss-plus-gradient evaluation is then a single batched network forward
and backward pass plus a handful of sparse products; this is what makes
full-batch training at paper scale tractable.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .divergence import DivergenceConfig
from .flux import FluxModel
from .geometry import IntegrationMesh
from .network import MlpParameters, backward_batch, flatten_params, forward_batch
from .quadrature import CompositeRule, RuleKind

__all__ = ["BlockLossSpec", "BlockLoss", "block_loss", "trace_restriction"]


@dataclass
class BlockLossSpec:
    """Everything defining the block functional besides the network itself.

    ``interface_data`` and ``inflow_data`` are callables taking an
    (n, d+1) array of space-time points and returning n values; the former
    is evaluated on the plane t = t_lo, the latter on the block's declared
    inflow faces.  ``div_cfg`` defaults to the mesh's own rule and
    sub-interval counts.
    """

    mesh: IntegrationMesh
    alpha: float
    interface_data: Callable
    inflow_data: Callable | None = None
    div_cfg: DivergenceConfig | None = None
    boundary_rule: CompositeRule | None = None

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"boundary weight alpha must be positive, got {self.alpha}")
        if self.div_cfg is None:
            self.div_cfg = DivergenceConfig(
                rule=self.mesh.rule, sub_m=self.mesh.sub_m, sub_n=self.mesh.sub_n
            )
        if self.div_cfg.rule is not self.mesh.rule:
            raise ValueError(
                f"divergence rule {self.div_cfg.rule} disagrees with mesh rule {self.mesh.rule}"
            )
        if self.boundary_rule is None:
            self.boundary_rule = CompositeRule(RuleKind.TRAPEZOIDAL, 1)
        if self.mesh.block.inflow_faces and self.inflow_data is None:
            raise ValueError("mesh block declares inflow faces but no inflow_data given")


def _lcm(*values: int) -> int:
    out = 1
    for v in values:
        v = int(v)
        out = out * v // gcd(out, v)
    return out


def _axis_offsets(kind: RuleKind, span_keys: int, subs: int, span_real: float):
    """Composite-rule nodes (integer key offsets) and real weights on one axis."""
    if kind is RuleKind.MIDPOINT:
        step2, rem = divmod(span_keys, 2 * subs)
        offs = (2 * np.arange(subs) + 1) * step2
        weights = np.full(subs, span_real / subs)
    else:
        step, rem = divmod(span_keys, subs)
        offs = np.arange(subs + 1) * step
        weights = np.full(subs + 1, span_real / subs)
        weights[0] *= 0.5
        weights[-1] *= 0.5
    if rem:
        raise AssertionError("key-space denominator does not resolve the sub-interval lattice")
    return offs.astype(np.int64), weights


class _CooBuffer:
    """Growable COO triplets (rows, integer point keys per axis, values)."""

    def __init__(self, n_axes: int):
        self.rows: list[np.ndarray] = []
        self.keys: list[list[np.ndarray]] = [[] for _ in range(n_axes)]
        self.vals: list[np.ndarray] = []

    def add(self, rows, keys, vals):
        self.rows.append(np.asarray(rows, dtype=np.int64).ravel())
        for store, k in zip(self.keys, keys):
            store.append(np.asarray(k, dtype=np.int64).ravel())
        self.vals.append(np.asarray(vals, dtype=float).ravel())

    def concat(self):
        rows = np.concatenate(self.rows) if self.rows else np.zeros(0, dtype=np.int64)
        keys = [np.concatenate(ks) if ks else np.zeros(0, dtype=np.int64) for ks in self.keys]
        vals = np.concatenate(self.vals) if self.vals else np.zeros(0)
        return rows, keys, vals


def _cell_flags(mesh: IntegrationMesh) -> np.ndarray:
    """Boolean array over cells (C-order) marking members of the refined set."""
    shape = (*mesh.m, mesh.n)
    flags = np.zeros(shape, dtype=bool)
    for idx in mesh.refined_cells:
        flags[tuple(idx)] = True
    return flags


class BlockLoss:
    """Assembled block functional; evaluate with network parameters or raw values."""

    def __init__(self, spec: BlockLossSpec, model: FluxModel):
        if model.d != spec.mesh.d:
            raise ValueError("flux dimension disagrees with mesh dimension")
        self.spec = spec
        self.model = model
        self._assemble()

    # -- assembly -----------------------------------------------------------

    def _assemble(self):
        mesh = self.spec.mesh
        cfg = self.spec.div_cfg
        d = mesh.d
        n_axes = d + 1
        p_bdy = self.spec.boundary_rule.p

        base_m = cfg.spatial_subs(d, refined=False)
        ref_m = cfg.spatial_subs(d, refined=True)
        dens = [2 * _lcm(base_m[a], ref_m[a], p_bdy) for a in range(d)]
        dens.append(2 * _lcm(cfg.temporal_subs(False), cfg.temporal_subs(True), p_bdy))
        self._dens = dens
        self._units = [mesh.h[a] / dens[a] for a in range(d)] + [mesh.delta / dens[d]]
        self._origin = [*mesh.block.spatial_lo, mesh.block.t_lo]

        counts = [*mesh.m, mesh.n]
        flags = _cell_flags(mesh)

        if mesh.rule is RuleKind.MIDPOINT:
            vol_grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
            vol_idx = [g.ravel() for g in vol_grids]
            n_vols = vol_idx[0].size
            klo = [vol_idx[a] * dens[a] for a in range(n_axes)]
            khi = [(vol_idx[a] + 1) * dens[a] for a in range(n_axes)]
            refined = flags.ravel()
            cell_map = sp.identity(n_vols, format="csr") * mesh.cell_measure
        else:
            node_counts = [c + 1 for c in counts]
            vol_grids = np.meshgrid(*[np.arange(c) for c in node_counts], indexing="ij")
            vol_idx = [g.ravel() for g in vol_grids]
            n_vols = vol_idx[0].size
            klo, khi = [], []
            for a in range(n_axes):
                half = dens[a] // 2
                klo.append(np.maximum(2 * vol_idx[a] - 1, 0) * half)
                khi.append(np.minimum(2 * vol_idx[a] + 1, 2 * counts[a]) * half)
            # A node volume overlaps up to 2^(d+1) cells; it is refined when
            # any of them is flagged.
            padded = np.zeros([c + 2 for c in counts], dtype=bool)
            padded[tuple(slice(1, 1 + c) for c in counts)] = flags
            refined = np.zeros([c + 1 for c in counts], dtype=bool)
            for corner in np.ndindex(*([2] * n_axes)):
                sl = tuple(slice(o, o + c + 1) for o, c in zip(corner, counts))
                refined |= padded[sl]
            refined = refined.ravel()
            # Q_K over a cell = |K|/2^(d+1) times the sum of its corner values.
            cell_grids = np.meshgrid(*[np.arange(c) for c in counts], indexing="ij")
            cell_flat = np.ravel_multi_index([g.ravel() for g in cell_grids], counts)
            w_corner = mesh.cell_measure / 2**n_axes
            rows, cols, vals = [], [], []
            for corner in np.ndindex(*([2] * n_axes)):
                node_idx = [g.ravel() + o for g, o in zip(cell_grids, corner)]
                cols.append(np.ravel_multi_index(node_idx, node_counts))
                rows.append(cell_flat)
                vals.append(np.full(cell_flat.size, w_corner))
            cell_map = sp.csr_matrix(
                (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                shape=(int(np.prod(counts)), n_vols),
            )

        sig_bufs = [_CooBuffer(n_axes) for _ in range(d)]
        u_buf = _CooBuffer(n_axes)
        self._emit_interior(vol_idx, klo, khi, refined, sig_bufs, u_buf, n_vols)

        bdy_buf = _CooBuffer(n_axes)
        bdy_rhs_parts: list[np.ndarray] = []
        n_bdy_rows = self._emit_boundary(bdy_buf, bdy_rhs_parts)

        # Deduplicate points across all terms.
        all_keys = []
        parts = [buf.concat() for buf in sig_bufs] + [u_buf.concat(), bdy_buf.concat()]
        for _, keys, _ in parts:
            all_keys.append(np.stack(keys, axis=1) if keys[0].size else np.zeros((0, n_axes), np.int64))
        stacked = np.concatenate(all_keys, axis=0)
        unique_keys, inverse = np.unique(stacked, axis=0, return_inverse=True)
        self.points = np.empty((unique_keys.shape[0], n_axes))
        for a in range(n_axes):
            self.points[:, a] = self._origin[a] + unique_keys[:, a] * self._units[a]

        n_pts = self.points.shape[0]
        offsets = np.cumsum([0] + [p[0].size for p in parts])
        mats = []
        for which, (rows, _, vals) in enumerate(parts):
            cols = inverse[offsets[which]: offsets[which + 1]]
            n_rows = n_vols if which < d + 1 else n_bdy_rows
            mats.append(sp.csr_matrix((vals, (rows, cols)), shape=(n_rows, n_pts)))

        self.A_sigma = [(cell_map @ mats[i]).tocsr() for i in range(d)]
        self.A_u = (cell_map @ mats[d]).tocsr()
        self.W = mats[d + 1]
        self.rhs = np.concatenate(bdy_rhs_parts) if bdy_rhs_parts else np.zeros(0)
        self.A_sigma_T = [A.T.tocsr() for A in self.A_sigma]
        self.A_u_T = self.A_u.T.tocsr()
        self.W_T = self.W.T.tocsr()
        self.n_cells = self.A_u.shape[0]

    def _emit_interior(self, vol_idx, klo, khi, refined, sig_bufs, u_buf, n_vols):
        """Surface-integral coefficients of every control volume, grouped.

        Volumes sharing (extent pattern, refined flag) get identical local
        stencils, so each group is emitted with one broadcast.
        """
        cfg = self.spec.div_cfg
        d = self.spec.mesh.d
        n_axes = d + 1
        dens = self._dens
        units = self._units
        kind = cfg.rule

        rel = [klo[a] - vol_idx[a] * dens[a] for a in range(n_axes)]
        rel += [khi[a] - vol_idx[a] * dens[a] for a in range(n_axes)]
        pattern = np.stack(rel + [refined.astype(np.int64)], axis=1)
        groups, first, inv = np.unique(pattern, axis=0, return_index=True, return_inverse=True)

        for g in range(groups.shape[0]):
            members = np.nonzero(inv == g)[0]
            ref = bool(groups[g, -1])
            subs = [*cfg.spatial_subs(d, ref), cfg.temporal_subs(ref)]
            lo_g = [int(klo[a][first[g]] - vol_idx[a][first[g]] * dens[a]) for a in range(n_axes)]
            hi_g = [int(khi[a][first[g]] - vol_idx[a][first[g]] * dens[a]) for a in range(n_axes)]
            spans_k = [hi_g[a] - lo_g[a] for a in range(n_axes)]
            spans_r = [spans_k[a] * units[a] for a in range(n_axes)]
            volume = float(np.prod(spans_r))
            base = [vol_idx[a][members] * dens[a] + lo_g[a] for a in range(n_axes)]

            for term in range(n_axes):
                # Difference quotient across the opposing faces of axis
                # ``term``, integrated over the remaining axes.
                other = [a for a in range(n_axes) if a != term]
                offs, weights = [], []
                for a in other:
                    o, w = _axis_offsets(kind, spans_k[a], subs[a], spans_r[a])
                    offs.append(o)
                    weights.append(w)
                if n_axes == 2:
                    face_offs = [offs[0]]
                    face_w = weights[0]
                else:
                    o1, o2 = np.meshgrid(offs[0], offs[1], indexing="ij")
                    face_offs = [o1.ravel(), o2.ravel()]
                    face_w = np.outer(weights[0], weights[1]).ravel()
                coef = face_w / volume
                n_face = coef.size
                rows = np.repeat(members, 2 * n_face)
                keys = []
                for a in range(n_axes):
                    if a == term:
                        hi_keys = np.broadcast_to(base[a][:, None] + spans_k[a], (members.size, n_face))
                        lo_keys = np.broadcast_to(base[a][:, None], (members.size, n_face))
                    else:
                        off = face_offs[other.index(a)]
                        hi_keys = base[a][:, None] + off[None, :]
                        lo_keys = hi_keys
                    keys.append(np.concatenate([hi_keys, lo_keys], axis=1))
                vals = np.concatenate([np.tile(coef, (members.size, 1)),
                                       np.tile(-coef, (members.size, 1))], axis=1)
                target = sig_bufs[term] if term < d else u_buf
                target.add(rows, keys, vals)

    def _emit_boundary(self, buf: _CooBuffer, rhs_parts: list[np.ndarray]) -> int:
        """Interface and inflow data-mismatch rows; returns the row count."""
        mesh = self.spec.mesh
        d = mesh.d
        n_axes = d + 1
        dens = self._dens
        rule = self.spec.boundary_rule
        counts = [*mesh.m, mesh.n]
        row_base = 0

        def emit_face(fixed_axis: int, fixed_key: int, data: Callable) -> int:
            """One boundary plane: segments are the mesh cells of the plane."""
            nonlocal row_base
            free = [a for a in range(n_axes) if a != fixed_axis]
            seg_grids = np.meshgrid(*[np.arange(counts[a]) for a in free], indexing="ij")
            seg_idx = [g.ravel() for g in seg_grids]
            n_seg = seg_idx[0].size
            offs, weights = [], []
            for a in free:
                o, w = _axis_offsets(rule.kind, dens[a], rule.p,
                                     mesh.h[a] if a < d else mesh.delta)
                offs.append(o)
                weights.append(w)
            if len(free) == 1:
                node_offs = [offs[0]]
                node_w = weights[0]
            else:
                o1, o2 = np.meshgrid(offs[0], offs[1], indexing="ij")
                node_offs = [o1.ravel(), o2.ravel()]
                node_w = np.outer(weights[0], weights[1]).ravel()
            n_node = node_w.size
            rows = np.repeat(np.arange(n_seg) + row_base, n_node)
            keys = []
            for a in range(n_axes):
                if a == fixed_axis:
                    keys.append(np.full((n_seg, n_node), fixed_key, dtype=np.int64))
                else:
                    base = seg_idx[free.index(a)] * dens[a]
                    keys.append(base[:, None] + node_offs[free.index(a)][None, :])
            vals = np.tile(node_w, (n_seg, 1))
            coords = np.empty((n_seg * n_node, n_axes))
            for a in range(n_axes):
                coords[:, a] = self._origin[a] + keys[a].ravel() * self._units[a]
            gvals = np.asarray(data(coords), dtype=float).reshape(n_seg, n_node)
            rhs_parts.append((vals * gvals).sum(axis=1))
            buf.add(rows, keys, vals)
            row_base += n_seg
            return n_seg

        emit_face(n_axes - 1, 0, self.spec.interface_data)
        for face in mesh.block.inflow_faces:
            fixed_key = 0 if face.side == "lo" else counts[face.axis] * dens[face.axis]
            emit_face(face.axis, fixed_key, self.spec.inflow_data)
        return row_base

    # -- evaluation ---------------------------------------------------------

    def residuals(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per-cell interior residuals Q_K(div_T F) and boundary residuals Q_E(u - g)."""
        r_int = self.A_u @ u
        for i, A in enumerate(self.A_sigma):
            r_int = r_int + A @ np.asarray(self.model.f[i](u), dtype=float)
        r_bdy = self.W @ u - self.rhs
        return r_int, r_bdy

    def value_and_cotangent(self, u: np.ndarray) -> tuple[float, np.ndarray]:
        r_int, r_bdy = self.residuals(u)
        alpha = self.spec.alpha
        loss = float(r_int @ r_int + alpha * (r_bdy @ r_bdy))
        cot = self.A_u_T @ (2.0 * r_int)
        for i, AT in enumerate(self.A_sigma_T):
            cot += (AT @ (2.0 * r_int)) * np.asarray(self.model.f_prime[i](u), dtype=float)
        cot += self.W_T @ (2.0 * alpha * r_bdy)
        return loss, cot

    def value_from_function(self, fn: Callable) -> float:
        """Evaluate the functional with an arbitrary field ``fn(points) -> values``."""
        r_int, r_bdy = self.residuals(np.asarray(fn(self.points), dtype=float))
        return float(r_int @ r_int + self.spec.alpha * (r_bdy @ r_bdy))

    def components(self, params: MlpParameters) -> tuple[float, float]:
        """(interior term, alpha-weighted boundary term) at the given parameters."""
        u, _ = forward_batch(params, self.points)
        r_int, r_bdy = self.residuals(u)
        return float(r_int @ r_int), float(self.spec.alpha * (r_bdy @ r_bdy))

    def value(self, params: MlpParameters) -> float:
        interior, boundary = self.components(params)
        return interior + boundary

    def value_and_gradient(self, params: MlpParameters) -> tuple[float, np.ndarray]:
        u, cache = forward_batch(params, self.points)
        loss, cot = self.value_and_cotangent(u)
        grad_w, grad_b = backward_batch(params, cache, cot)
        return loss, flatten_params(grad_w, grad_b)


def block_loss(params: MlpParameters, spec: BlockLossSpec, model: FluxModel) -> float:
    """The discrete block functional at the given parameters (assembles on the fly)."""
    return BlockLoss(spec, model).value(params)


def trace_restriction(params: MlpParameters, t_star: float, spatial_grid) -> np.ndarray:
    """Network values at (x, t_star) for every node of a spatial grid.

    ``spatial_grid`` is an (n,) array in 1D or an (n, 2) array in 2D.
    """
    grid = np.asarray(spatial_grid, dtype=float)
    if grid.ndim == 1:
        grid = grid[:, None]
    points = np.column_stack([grid, np.full(grid.shape[0], float(t_star))])
    return forward_batch(params, points)[0]
