"""Prototype: shock problem block 1 at paper settings, short run for timing."""
import sys
import time

import numpy as np

import lsnn_hcl as L
from lsnn_hcl.divergence import DivergenceConfig
from lsnn_hcl.geometry import BoundaryFace
from lsnn_hcl.oracles import relative_l2_error, riemann_burgers
from lsnn_hcl.trainer import TrainingConfig, solve_all_blocks

iters = int(sys.argv[1]) if len(sys.argv) > 1 else 3000
n_b = int(sys.argv[2]) if len(sys.argv) > 2 else 1

domain = L.SpaceTimeDomain((-1.0,), (1.0,), 0.6 * n_b / 3)
model = L.builtin_flux("burgers1d")
exact = riemann_burgers(1.0, 0.0)

def u0(pts):
    return np.where(pts[:, 0] <= 0.0, 1.0, 0.0)

def g(pts):
    return np.where(pts[:, 0] < 0.0, 1.0, 0.0)

cfg = TrainingConfig(iterations=iters, lr_schedule=[(0, 0.003)], seed=0, history_stride=500)
div_cfg = DivergenceConfig(rule="trapezoidal", sub_m=2, sub_n=2)

t0 = time.perf_counter()
results = solve_all_blocks(
    domain, n_b, [2, 10, 10, 1], model, cfg,
    h=0.01, delta=0.01, div_cfg=div_cfg, alpha=20.0,
    initial_data=u0, inflow_data=g,
    inflow_faces=(BoundaryFace(0, "lo"), BoundaryFace(0, "hi")),
)
t1 = time.perf_counter()

for res in results:
    blk = L.build_blocks(domain, n_b, ())[res.block_index - 1]
    xs = np.arange(-1.0, 1.0 + 1e-12, 0.005)
    ts = np.arange(blk.t_lo, blk.t_hi + 1e-12, 0.005)
    def u_nn(pts, p=res.params):
        return L.evaluate_batch(p, pts)
    err = relative_l2_error(u_nn, exact, blk, [xs, ts])
    print(f"block {res.block_index}: final_loss={res.final_loss:.4e} relL2={err:.5f} "
          f"wall={res.wall_time:.1f}s")
print(f"total {t1-t0:.1f}s, per-iter {(t1-t0)/ (iters*n_b) * 1000:.2f} ms")
print("history head:", results[0].loss_history[:4])
print("history tail:", results[0].loss_history[-3:])
