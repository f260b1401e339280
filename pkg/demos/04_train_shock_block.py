"""Train one space-time block on the Riemann shock problem, end to end.

A scaled-down version of the full shock experiment (coarser mesh, fewer
iterations) that runs in about a minute and still resolves the shock: the
network's ReLU break lines align with the discontinuity instead of smearing
it.  The full published setting is the `riemann_shock_paper` preset.

Run:  python demos/04_train_shock_block.py
"""

import numpy as np

from lsnn_hcl import SpaceTimeDomain, builtin_flux, evaluate_batch
from lsnn_hcl.divergence import DivergenceConfig
from lsnn_hcl.geometry import BoundaryFace
from lsnn_hcl.oracles import relative_l2_error, riemann_burgers
from lsnn_hcl.trainer import TrainingConfig, solve_all_blocks

domain = SpaceTimeDomain((-1.0,), (1.0,), 0.2)
model = builtin_flux("burgers1d")
exact = riemann_burgers(1.0, 0.0)

initial = lambda pts: np.where(pts[:, 0] <= 0.0, 1.0, 0.0)
inflow = lambda pts: np.where(pts[:, 0] < 0.0, 1.0, 0.0)

results = solve_all_blocks(
    domain, 1, [2, 10, 10, 1], model,
    TrainingConfig(iterations=6000, lr_schedule=[(0, 0.003)], seed=0, history_stride=1000),
    h=0.02, delta=0.02,
    div_cfg=DivergenceConfig(rule="trapezoidal", sub_m=2, sub_n=2),
    alpha=20.0, initial_data=initial, inflow_data=inflow,
    inflow_faces=(BoundaryFace(0, "lo"), BoundaryFace(0, "hi")),
)
res = results[0]
print(f"final loss {res.final_loss:.3e} after {res.wall_time:.0f}s")
print("loss history:", [(it, f"{v:.2e}") for it, v, _ in res.loss_history])

from lsnn_hcl.geometry import build_blocks

xs = np.linspace(-1, 1, 201)
ts = np.linspace(0.0, 0.2, 21)
blk = build_blocks(domain, 1)[0]
err = relative_l2_error(lambda p: evaluate_batch(res.params, p), exact, blk, [xs, ts])
print(f"relative L2 error over the block: {err:.4f}")

print("\ntrace at t = 0.2 (shock sits at x = 0.1):")
grid = np.linspace(-0.1, 0.3, 21)
pts = np.column_stack([grid, np.full_like(grid, 0.2)])
nn = evaluate_batch(res.params, pts)
ex = exact.evaluate(pts)
for x, a, b in zip(grid, ex, nn):
    bar = "#" * int(max(b, 0) * 30)
    print(f"  x={x:+.3f}  exact {a:4.1f}  nn {b:+.3f}  {bar}")
