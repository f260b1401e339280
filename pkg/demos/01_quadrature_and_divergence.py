"""Composite quadrature and the discrete divergence operator.

The solver never differentiates the network: the conservation law is tested
in its control-volume form, div F(u) averaged over a cell = net outward flux
through the cell boundary per unit volume.  This script shows the two
composite rules, the per-cell divergence, and why the composite form matters
when the field has a jump.

Run:  python demos/01_quadrature_and_divergence.py
"""

import numpy as np

from lsnn_hcl import CompositeRule, builtin_flux, integrate_1d
from lsnn_hcl.divergence import DivergenceConfig, brute_force_avg_div, div_t_1d

# -- composite rules ----------------------------------------------------------

print("composite rules on f(s) = s^2 over [0, 1] (exact: 1/3)")
for kind in ("midpoint", "trapezoidal"):
    for p in (1, 2, 8, 32):
        val = integrate_1d(lambda s: s**2, 0.0, 1.0, CompositeRule(kind, p))
        print(f"  {kind:12s} p={p:3d}: {val:.8f}  (err {abs(val - 1/3):.2e})")

# -- discrete divergence on a smooth field -------------------------------------

model = b = builtin_flux("burgers1d")
cell = ((0.0, 1.0), (0.0, 1.0))

print("\nsmooth field u = x + t, Burgers flux, cell (0,1)^2")
print("  exact cell-average of div F(u) is 2 (u_t + u u_x = 1 + (x+t))")
u_smooth = lambda x, t: np.asarray(x, dtype=float) + np.asarray(t, dtype=float)
for m in (1, 2, 4):
    cfg = DivergenceConfig(rule="trapezoidal", sub_m=m, sub_n=m)
    print(f"  div_T with m_hat = n_hat = {m}: {div_t_1d(u_smooth, model, cell, cfg):.12f}")

# -- a field with a moving jump -------------------------------------------------

# A step traveling through the cell: u = 1 left of x = 0.3371 + 0.3 t, else 0.
# Its jump crosses both horizontal edges, so the edge integrands are steps in
# x and a single-panel rule cannot see where the jump sits.  The composite
# rule localizes it to one sub-interval: the error decays like jump / m_hat.
u_step = lambda x, t: np.where(
    np.asarray(x, dtype=float) < 0.3371 + 0.3 * np.asarray(t, dtype=float), 1.0, 0.0)

exact = brute_force_avg_div(u_step, model, cell, nodes_per_edge=200_000)
print("\nmoving step (x = 0.3371 + 0.3 t), Burgers flux")
print(f"  reference cell-average of div F: {exact:.6f}")
for m in (1, 2, 4, 8, 16, 64):
    cfg = DivergenceConfig(rule="midpoint", sub_m=m, sub_n=1)
    approx = div_t_1d(u_step, model, cell, cfg)
    print(f"  m_hat={m:3d}: div_T = {approx:+.6f}   |err| = {abs(approx - exact):.2e}")
print("  raising m_hat shrinks the error (first order, jump-driven): the operator")
print("  stays usable across discontinuities, which coordinate-direction")
print("  differentiation does not.")
