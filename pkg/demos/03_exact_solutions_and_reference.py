"""The oracle layer: closed-form Riemann solutions and the WENO3 reference.

Every trained run is scored against one of these.  Closed forms cover the
Riemann problems (including the non-convex cubic flux, whose solution is a
compound wave: a shock tangentially attached to a rarefaction); a WENO3+RK4
finite-volume solve stands in where no closed form exists.

Run:  python demos/03_exact_solutions_and_reference.py
"""

import numpy as np

from lsnn_hcl import builtin_flux
from lsnn_hcl.oracles import (
    characteristic_solution,
    riemann_burgers,
    riemann_cubic_osher,
    weno3_rk4_reference,
)

# -- Riemann solutions ---------------------------------------------------------

shock = riemann_burgers(1.0, 0.0)
print("Burgers shock (u_l=1, u_r=0):", shock.descriptor["shocks"])
x = np.array([-0.3, 0.05, 0.15, 0.6])
print("  u(x, 0.2) at", x.tolist(), "->", shock.evaluate(np.column_stack([x, 0.2 + 0 * x])).tolist())

fan = riemann_burgers(0.0, 1.0)
print("\nBurgers rarefaction (u_l=0, u_r=1): fan edges", fan.descriptor["fans"])
x = np.linspace(-0.2, 0.6, 9)
print("  u(x, 0.4):", np.round(fan.evaluate(np.column_stack([x, 0.4 + 0 * x])), 3).tolist())

compound = riemann_cubic_osher(1.0, -1.0)
print("\ncubic flux compound wave (u_l=1, u_r=-1):")
s, ul, ur = compound.descriptor["shocks"][0]
print(f"  shock speed {s}, jump {ul} -> {ur}")
fp = builtin_flux("cubic1d").f_prime[0]
print(f"  tangency: f'({ur}) = {float(fp(np.float64(ur)))} equals the shock speed")
x = np.linspace(0.0, 1.2, 7)
print("  u(x, 1.0):", np.round(compound.evaluate(np.column_stack([x, 1.0 + 0 * x])), 4).tolist())

# -- characteristic tracer vs WENO reference ------------------------------------

model = builtin_flux("burgers1d")
u0 = lambda s: 0.5 + np.sin(np.pi * np.asarray(s, dtype=float))
u0p = lambda s: np.pi * np.cos(np.pi * np.asarray(s, dtype=float))

print("\nsinusoidal data: WENO3+RK4 reference vs characteristic tracing (pre-shock)")
ref = weno3_rk4_reference(model, u0, [0.0], [2.0], 0.002, 0.0005, [0.25], bc="periodic")
tracer = characteristic_solution(model, u0, u0p)
xs = ref.centers[0]
exact = tracer(np.column_stack([xs, np.full_like(xs, 0.25)]))
rel = np.sqrt(np.sum((ref.snapshots[-1] - exact) ** 2) / np.sum(exact**2))
print(f"  relative L2 difference at t = 0.25: {rel:.2e}")
print(f"  discrete conservation: mass change {ref.mass[-1] - ref.mass[0]:+.2e}, "
      f"boundary flux integral {ref.boundary_flux_in[-1]:+.2e}")
