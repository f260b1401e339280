"""Space-time domains, their block decomposition, and uniform integration meshes.

A computational domain is a spatial box times a time interval.  Training
marches over time blocks (slabs); each block carries a uniform integration
mesh whose cells host the quadrature points and control volumes of the
discrete divergence operator.  Meshes store only lattice counts and sizes;
coordinates are recomputed from indices, so a mesh is O(1) memory.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .quadrature import RuleKind

__all__ = [
    "SpaceTimeDomain",
    "BoundaryFace",
    "BlockSpec",
    "IntegrationMesh",
    "build_blocks",
    "build_mesh",
]

_DIVISIBILITY_RTOL = 1e-12


@dataclass(frozen=True)
class SpaceTimeDomain:
    """A spatial box (d = 1 or 2) times the time interval (0, t_final)."""

    spatial_lo: tuple[float, ...]
    spatial_hi: tuple[float, ...]
    t_final: float

    def __post_init__(self):
        object.__setattr__(self, "spatial_lo", tuple(float(v) for v in np.atleast_1d(self.spatial_lo)))
        object.__setattr__(self, "spatial_hi", tuple(float(v) for v in np.atleast_1d(self.spatial_hi)))
        if len(self.spatial_lo) != len(self.spatial_hi):
            raise ValueError("spatial_lo and spatial_hi must have equal length")
        if self.d not in (1, 2):
            raise ValueError(f"spatial dimension must be 1 or 2, got {self.d}")
        for i, (lo, hi) in enumerate(zip(self.spatial_lo, self.spatial_hi)):
            if not lo < hi:
                raise ValueError(f"spatial axis {i}: need lo < hi, got [{lo}, {hi}]")
        if not self.t_final > 0:
            raise ValueError(f"t_final must be positive, got {self.t_final}")

    @property
    def d(self) -> int:
        return len(self.spatial_lo)


@dataclass(frozen=True)
class BoundaryFace:
    """One spatial-boundary side of the domain: ``axis`` in {0, 1}, ``side`` in {lo, hi}."""

    axis: int
    side: str

    def __post_init__(self):
        if self.side not in ("lo", "hi"):
            raise ValueError(f"side must be 'lo' or 'hi', got {self.side!r}")
        if self.axis < 0:
            raise ValueError("axis must be nonnegative")


@dataclass(frozen=True)
class BlockSpec:
    """One space-time slab of the domain: spatial box times (t_lo, t_hi).

    ``inflow_faces`` lists the spatial-boundary faces carrying boundary data
    (declared per experiment; characteristic-based auto-detection is not
    well defined against a network approximation).  The interface plane
    t = t_lo carries the previous block's trace (the initial condition for
    block 1).
    """

    domain: SpaceTimeDomain
    index: int
    t_lo: float
    t_hi: float
    inflow_faces: tuple[BoundaryFace, ...] = ()

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("block index starts at 1")
        if not self.t_lo < self.t_hi:
            raise ValueError(f"block {self.index}: need t_lo < t_hi")
        object.__setattr__(self, "inflow_faces", tuple(self.inflow_faces))
        for face in self.inflow_faces:
            if face.axis >= self.domain.d:
                raise ValueError(f"inflow face axis {face.axis} outside dimension {self.domain.d}")

    @property
    def interface_time(self) -> float:
        """The plane t = t_lo shared with the previous block."""
        return self.t_lo

    @property
    def spatial_lo(self) -> tuple[float, ...]:
        return self.domain.spatial_lo

    @property
    def spatial_hi(self) -> tuple[float, ...]:
        return self.domain.spatial_hi

    def measure(self) -> float:
        vol = self.t_hi - self.t_lo
        for lo, hi in zip(self.spatial_lo, self.spatial_hi):
            vol *= hi - lo
        return vol


def build_blocks(
    domain: SpaceTimeDomain,
    n_b: int,
    inflow_faces: Sequence[BoundaryFace] = (),
) -> list[BlockSpec]:
    """Partition (0, t_final) into n_b equal slabs, shared interfaces exact.

    Interface times are computed as k*T/n_b, so block k's t_hi and block
    k+1's t_lo are the same float.
    """
    if n_b < 1:
        raise ValueError(f"number of blocks must be >= 1, got {n_b}")
    times = [domain.t_final * k / n_b for k in range(n_b + 1)]
    times[-1] = domain.t_final
    return [
        BlockSpec(domain=domain, index=k, t_lo=times[k - 1], t_hi=times[k],
                  inflow_faces=tuple(inflow_faces))
        for k in range(1, n_b + 1)
    ]


def _axis_cell_count(extent: float, size: float, label: str) -> int:
    if size <= 0:
        raise ValueError(f"{label}: cell size must be positive, got {size}")
    count = int(round(extent / size))
    if count < 1 or abs(count * size - extent) > _DIVISIBILITY_RTOL * abs(extent):
        raise ValueError(
            f"{label}: cell size {size} does not divide extent {extent} "
            f"(nearest count {count})"
        )
    return count


@dataclass
class IntegrationMesh:
    """Uniform partition of a block into integration cells.

    ``m`` holds the spatial cell counts per axis and ``n`` the temporal
    count.  Cells are addressed by lattice indices (i, j) in 1D or
    (i, j, k) in 2D, spatial first, temporal last.  ``refined_cells`` is
    the set of cell indices currently flagged as possibly discontinuous;
    those cells use the refined sub-interval count of the divergence
    configuration.
    """

    block: BlockSpec
    h: tuple[float, ...]
    delta: float
    m: tuple[int, ...]
    n: int
    rule: RuleKind
    sub_m: int
    sub_n: int
    refined_cells: set = field(default_factory=set)

    @property
    def d(self) -> int:
        return self.block.domain.d

    @property
    def cell_measure(self) -> float:
        meas = self.delta
        for hi in self.h:
            meas *= hi
        return meas

    @property
    def n_cells(self) -> int:
        count = self.n
        for mi in self.m:
            count *= mi
        return count

    def x_node(self, axis: int, i) -> np.ndarray | float:
        return self.block.spatial_lo[axis] + np.asarray(i) * self.h[axis]

    def t_node(self, j) -> np.ndarray | float:
        return self.block.t_lo + np.asarray(j) * self.delta

    def cell_indices(self) -> Iterator[tuple[int, ...]]:
        if self.d == 1:
            for i in range(self.m[0]):
                for j in range(self.n):
                    yield (i, j)
        else:
            for i in range(self.m[0]):
                for j in range(self.m[1]):
                    for k in range(self.n):
                        yield (i, j, k)

    def cell_bounds(self, index: tuple[int, ...]) -> tuple[tuple[float, float], ...]:
        """Per-axis (lo, hi) of one cell, spatial axes first then time."""
        *spatial, j = index
        bounds = []
        for axis, i in enumerate(spatial):
            if not 0 <= i < self.m[axis]:
                raise IndexError(f"cell index {index} outside mesh")
            bounds.append((float(self.x_node(axis, i)), float(self.x_node(axis, i + 1))))
        if not 0 <= j < self.n:
            raise IndexError(f"cell index {index} outside mesh")
        bounds.append((float(self.t_node(j)), float(self.t_node(j + 1))))
        return tuple(bounds)

    def cell_centroid(self, index: tuple[int, ...]) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.cell_bounds(index))

    def quadrature_points(self, index: tuple[int, ...]) -> list[tuple[float, ...]]:
        """Quadrature points of one cell: centroid for midpoint, corners for trapezoidal."""
        bounds = self.cell_bounds(index)
        if self.rule is RuleKind.MIDPOINT:
            return [tuple(0.5 * (lo + hi) for lo, hi in bounds)]
        corners = [()]
        for lo, hi in bounds:
            corners = [c + (v,) for c in corners for v in (lo, hi)]
        return corners

    def node_volume(self, node: tuple[int, ...]) -> tuple[tuple[float, float], ...]:
        """Control volume of a lattice node for the trapezoidal rule.

        Interior volumes are centered at the node; volumes are halved where
        the node sits on a block face and quartered at corners (the volume
        is clipped to the block).
        """
        *spatial, j = node
        out = []
        for axis, i in enumerate(spatial):
            lo = self.block.spatial_lo[axis] + max(i - 0.5, 0.0) * self.h[axis]
            hi = self.block.spatial_lo[axis] + min(i + 0.5, self.m[axis]) * self.h[axis]
            out.append((lo, hi))
        t_lo = self.block.t_lo + max(j - 0.5, 0.0) * self.delta
        t_hi = self.block.t_lo + min(j + 0.5, self.n) * self.delta
        out.append((t_lo, t_hi))
        return tuple(out)


def build_mesh(
    block: BlockSpec,
    h,
    delta: float,
    rule: RuleKind | str = RuleKind.TRAPEZOIDAL,
    sub_m: int = 1,
    sub_n: int = 1,
) -> IntegrationMesh:
    """Build the uniform integration mesh of a block.

    ``h`` is a scalar in 1D or a pair (h_1, h_2) in 2D; both h and delta
    must divide the block extents exactly (to relative 1e-12).
    """
    rule = RuleKind(rule)
    if sub_m < 1 or sub_n < 1:
        raise ValueError("sub-interval counts must be >= 1")
    d = block.domain.d
    h_tuple = tuple(float(v) for v in np.atleast_1d(h))
    if len(h_tuple) == 1 and d == 2:
        h_tuple = (h_tuple[0], h_tuple[0])
    if len(h_tuple) != d:
        raise ValueError(f"h has {len(h_tuple)} entries for a {d}-dimensional domain")
    m = tuple(
        _axis_cell_count(block.spatial_hi[a] - block.spatial_lo[a], h_tuple[a], f"spatial axis {a}")
        for a in range(d)
    )
    n = _axis_cell_count(block.t_hi - block.t_lo, float(delta), "temporal axis")
    return IntegrationMesh(
        block=block, h=h_tuple, delta=float(delta), m=m, n=n,
        rule=rule, sub_m=sub_m, sub_n=sub_n,
    )
