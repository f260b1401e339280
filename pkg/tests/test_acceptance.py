"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Quantitative criteria (1-6) train networks at the published settings and are
slow; they carry the ``acceptance`` marker.  Criterion 5 (2D, hours) only
runs when LSNN_HCL_RUN_2D=1.  Property criteria (7-12) are fast and always
run.  Tolerances are fixed here, straight from the acceptance statement.
"""

import csv
import os
from pathlib import Path

import numpy as np
import pytest

from lsnn_hcl.experiments import preset_config, run_divergence_study, run_experiment

RESULTS: list[str] = []


def record(criterion: str, passed: bool, detail: str):
    line = f"[{criterion}] {'PASS' if passed else 'FAIL'}: {detail}"
    RESULTS.append(line)
    print(f"\n{line}", flush=True)
    assert passed, line


def read_trace(run_dir, t):
    with open(Path(run_dir) / f"trace_t{t:g}.csv") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r["x"]) for r in rows])
    u_nn = np.array([float(r["u_nn"]) for r in rows])
    u_exact = np.array([float(r["u_exact"]) for r in rows])
    return x, u_exact, u_nn


@pytest.mark.acceptance
def test_criterion_1_riemann_shock(tmp_path):
    """Per-block relative L2 <= 0.10 on the shock preset, majority over 3 seeds."""
    passes = []
    details = []
    for seed in (0, 1, 2):
        cfg = preset_config("riemann_shock_paper",
                            {"seed": seed, "output_dir": str(tmp_path / f"seed{seed}")})
        summary = run_experiment(cfg, quiet=True)
        errs = [e for _, e in summary["errors"]]
        passes.append(all(e <= 0.10 for e in errs))
        details.append(f"seed {seed}: " + "/".join(f"{e:.4f}" for e in errs))
    record("criterion 1: riemann shock", sum(passes) >= 2,
           f"{sum(passes)}/3 seeds with all blocks <= 0.10 ({'; '.join(details)})")


@pytest.mark.acceptance
def test_criterion_2_rarefaction(tmp_path):
    """Per-block relative L2 <= 0.04 and a monotone fan trace at t = 0.4."""
    cfg = preset_config("riemann_rarefaction_paper", {"output_dir": str(tmp_path / "run")})
    summary = run_experiment(cfg, quiet=True)
    errs = [e for _, e in summary["errors"]]
    x, _, u_nn = read_trace(tmp_path / "run", 0.4)
    fan = (x >= 0.0) & (x <= 0.4)
    drops = np.diff(u_nn[fan])
    span = float(u_nn[fan].max() - u_nn[fan].min())
    monotone = bool(np.all(drops >= -0.01 * max(span, 1.0)))
    ok = all(e <= 0.04 for e in errs) and monotone
    record("criterion 2: rarefaction", ok,
           f"errors {'/'.join(f'{e:.4f}' for e in errs)} (<= 0.04), "
           f"fan trace monotone within 1%: {monotone}")


@pytest.mark.acceptance
@pytest.mark.parametrize("rule", ["trapezoidal", "midpoint"])
def test_criterion_3_quartic_subinterval_ladder(tmp_path, rule):
    """Block-1 error improves monotonically in sub_m = sub_n and <= 0.02 at 6."""
    errs = {}
    for m in (2, 4, 6):
        cfg = preset_config(f"quartic_{rule}_paper", {
            "domain": {"spatial_lo": [-1.0], "spatial_hi": [1.0], "t_final": 0.2},
            "n_blocks": 1,
            "mesh": {"h": 0.01, "delta": 0.01, "rule": rule, "sub_m": m, "sub_n": m},
            "trace_times": [],
            "output_dir": str(tmp_path / f"{rule}_{m}"),
        })
        summary = run_experiment(cfg, quiet=True)
        errs[m] = summary["errors"][0][1]
    ok = errs[2] > errs[4] > errs[6] and errs[6] <= 0.02
    record(f"criterion 3: quartic ladder ({rule})", ok,
           f"errors m=2/4/6: {errs[2]:.5f} > {errs[4]:.5f} > {errs[6]:.5f}, "
           f"m=6 <= 0.02")


@pytest.mark.acceptance
def test_criterion_4_cubic_compound_wave(tmp_path):
    """Blocks <= 0.10; shock near x = 0.1 at t = 0.4; plateau -0.5 behind it."""
    cfg = preset_config("cubic_nonconvex_desk", {"output_dir": str(tmp_path / "run")})
    summary = run_experiment(cfg, quiet=True)
    errs = [e for _, e in summary["errors"]]
    x, _, u_nn = read_trace(tmp_path / "run", 0.4)
    # fitted shock: first crossing of the level midway between 1 and -0.5
    level = 0.25
    inside = np.nonzero((x > -0.5) & (x < 0.5))[0]
    xi, ui = x[inside], u_nn[inside]
    below = np.nonzero(ui <= level)[0]
    i = below[0]
    x_shock = xi[i - 1] + (xi[i] - xi[i - 1]) * (ui[i - 1] - level) / (ui[i - 1] - ui[i])
    window = (x > x_shock + 0.005) & (x < x_shock + 0.03)
    plateau = float(np.mean(u_nn[window]))
    ok = (all(e <= 0.10 for e in errs)
          and abs(x_shock - 0.1) <= 0.03
          and abs(plateau - (-0.5)) <= 0.05)
    record("criterion 4: cubic compound wave", ok,
           f"errors {'/'.join(f'{e:.4f}' for e in errs)} (<= 0.10), "
           f"shock at {x_shock:.4f} (0.1 +- 0.03), plateau {plateau:.4f} (-0.5 +- 0.05)")


@pytest.mark.acceptance
@pytest.mark.skipif(os.environ.get("LSNN_HCL_RUN_2D") != "1",
                    reason="2D run takes hours; set LSNN_HCL_RUN_2D=1 to include it")
def test_criterion_5_burgers_2d(tmp_path):
    """Block-1 relative L2 vs the reference solve <= 0.18 (long-running)."""
    cfg = preset_config("burgers_2d_paper", {"output_dir": str(tmp_path / "run")})
    summary = run_experiment(cfg, quiet=False)
    err1 = summary["errors"][0][1]
    record("criterion 5: 2d burgers", err1 <= 0.18, f"block-1 error {err1:.4f} <= 0.18")


@pytest.mark.acceptance
def test_criterion_6_sinusoidal_preshock(tmp_path):
    """First four blocks (t <= 0.2) within 0.03 of the WENO reference."""
    cfg = preset_config("sinusoidal_first4", {"output_dir": str(tmp_path / "run")})
    summary = run_experiment(cfg, quiet=True)
    errs = [e for _, e in summary["errors"]]
    ok = all(e <= 0.03 for e in errs)
    record("criterion 6: sinusoidal pre-shock", ok,
           "errors " + "/".join(f"{e:.4f}" for e in errs) + " (<= 0.03)")


# -- property criteria (always run) -------------------------------------------


def test_criterion_7_quadrature():
    from lsnn_hcl.quadrature import CompositeRule, integrate_1d

    rng = np.random.default_rng(5)
    worst = 0.0
    for kind in ("midpoint", "trapezoidal"):
        for p in (1, 2, 3, 5, 8):
            a, b = rng.uniform(-2, 2, 2)
            c, d = -1.3, 0.9
            exact = a * (d**2 - c**2) / 2 + b * (d - c)
            got = integrate_1d(lambda s: a * s + b, c, d, CompositeRule(kind, p))
            worst = max(worst, abs(got - exact) / max(abs(exact), 1e-30))
    orders = []
    exact = 1.0 - np.cos(1.0)
    for kind in ("midpoint", "trapezoidal"):
        errs = [abs(integrate_1d(np.sin, 0.0, 1.0, CompositeRule(kind, p)) - exact)
                for p in (1, 2, 4, 8, 16)]
        orders.append(-np.polyfit(np.log([1, 2, 4, 8, 16]), np.log(errs), 1)[0])
    ok = worst <= 1e-13 and all(abs(o - 2.0) <= 0.1 for o in orders)
    record("criterion 7: quadrature", ok,
           f"affine rel err {worst:.2e} <= 1e-13; sin orders {orders[0]:.3f}, {orders[1]:.3f} (2.0 +- 0.1)")


def test_criterion_8_divergence_identities():
    from lsnn_hcl.divergence import DivergenceConfig, div_t_1d, div_t_2d
    from lsnn_hcl.flux import builtin_flux, custom_flux
    from lsnn_hcl.quadrature import CompositeRule, integrate_1d

    linear = custom_flux(lambda u: u, lambda u: np.ones_like(u), name="linear")
    rng = np.random.default_rng(8)
    worst_affine = 0.0
    for _ in range(10):
        a, b, c = rng.uniform(-2, 2, 3)
        u = lambda x, t: a * np.asarray(x, dtype=float) + b * np.asarray(t, dtype=float) + c
        cell = ((-0.3, 0.4), (0.1, 0.6))
        for rule in ("midpoint", "trapezoidal"):
            cfg = DivergenceConfig(rule=rule, sub_m=int(rng.integers(1, 5)), sub_n=int(rng.integers(1, 5)))
            got = div_t_1d(u, linear, cell, cfg)
            worst_affine = max(worst_affine, abs(got - (a + b)) / max(abs(a + b), 1e-30))

    burgers = builtin_flux("burgers1d")
    u = lambda x, t: np.sin(1.3 * np.asarray(x, dtype=float)) * np.exp(0.2 * np.asarray(t, dtype=float))
    cfg = DivergenceConfig(rule="trapezoidal", sub_m=1, sub_n=1)
    h, delta, t0 = 0.2, 0.3, 0.4
    edges = np.arange(-0.6, 1.0 + 1e-12, h)  # asymmetric row: boundary flux is O(1)
    total = sum(h * delta * div_t_1d(u, burgers, ((edges[i], edges[i + 1]), (t0, t0 + delta)), cfg)
                for i in range(len(edges) - 1))
    rule1 = CompositeRule("trapezoidal", 1)
    rule_row = CompositeRule("trapezoidal", len(edges) - 1)  # cell sums compose
    f = burgers.f[0]
    boundary = (integrate_1d(lambda t: f(u(np.full_like(t, edges[-1]), t)), t0, t0 + delta, rule1)
                - integrate_1d(lambda t: f(u(np.full_like(t, edges[0]), t)), t0, t0 + delta, rule1)
                + integrate_1d(lambda x: u(x, np.full_like(x, t0 + delta)), edges[0], edges[-1], rule_row)
                - integrate_1d(lambda x: u(x, np.full_like(x, t0)), edges[0], edges[-1], rule_row))
    telescope_err = abs(total - boundary) / abs(boundary)

    f2zero = custom_flux([burgers.f[0], lambda v: 0 * v], [burgers.f_prime[0], lambda v: 0 * v],
                         d=2, name="x-only")
    u3 = lambda x, y, t: np.sin(np.asarray(x, dtype=float)) + 0.5 * np.asarray(t, dtype=float) ** 2
    u2 = lambda x, t: np.sin(np.asarray(x, dtype=float)) + 0.5 * np.asarray(t, dtype=float) ** 2
    cell3 = ((0.0, 0.5), (0.25, 0.75), (0.0, 0.25))
    section_err = 0.0
    for rule in ("midpoint", "trapezoidal"):
        a2 = div_t_2d(u3, f2zero, cell3, DivergenceConfig(rule=rule, sub_m=(3, 2), sub_n=2))
        b2 = div_t_1d(u2, burgers, (cell3[0], cell3[2]), DivergenceConfig(rule=rule, sub_m=3, sub_n=2))
        section_err = max(section_err, abs(a2 - b2) / abs(b2))

    ok = worst_affine <= 1e-12 and telescope_err <= 1e-12 and section_err <= 1e-12
    record("criterion 8: discrete divergence", ok,
           f"affine {worst_affine:.2e}, telescoping {telescope_err:.2e}, "
           f"2d/1d section {section_err:.2e} (all <= 1e-12)")


def test_criterion_9_divergence_convergence_orders():
    details = []
    ok = True
    for rule in ("midpoint", "trapezoidal"):
        smooth = run_divergence_study("smooth_sine", rule=rule)["fitted_order"]
        ok &= abs(smooth - 2.0) <= 0.3
        details.append(f"smooth/{rule} {smooth:.2f}")
        for case in ("step_horizontal", "step_vertical", "step_mixed"):
            order = run_divergence_study(case, rule=rule)["fitted_order"]
            ok &= abs(order - 1.0) <= 0.3
            details.append(f"{case}/{rule} {order:.2f}")
    record("criterion 9: accuracy orders", bool(ok),
           "fitted orders " + ", ".join(details) + " (2.0 +- 0.3 smooth, 1.0 +- 0.3 jump)")


def test_criterion_10_gradient_check():
    from lsnn_hcl.divergence import DivergenceConfig
    from lsnn_hcl.flux import builtin_flux
    from lsnn_hcl.geometry import BoundaryFace, SpaceTimeDomain, build_blocks, build_mesh
    from lsnn_hcl.loss import BlockLoss, BlockLossSpec
    from lsnn_hcl.network import flatten_params, init_first_block, loss_gradient, unflatten_params

    rng = np.random.default_rng(17)
    block = build_blocks(SpaceTimeDomain((-1.0,), (1.0,), 0.2), 1,
                         (BoundaryFace(0, "lo"), BoundaryFace(0, "hi")))[0]
    mesh = build_mesh(block, 0.4, 0.04, "trapezoidal", 2, 2)
    spec = BlockLossSpec(mesh=mesh, alpha=20.0,
                         interface_data=lambda p: np.where(p[:, 0] <= 0, 1.0, 0.0),
                         inflow_data=lambda p: np.where(p[:, 0] < 0, 1.0, 0.0))
    loss = BlockLoss(spec, builtin_flux("burgers1d"))
    worst = 0.0
    for seed in (1, 2):
        params = init_first_block([2, 10, 10, 1], block, seed=seed)
        theta = flatten_params(params.weights, params.biases) + 0.02 * rng.standard_normal(151)
        params = unflatten_params((2, 10, 10, 1), theta)
        grad = loss_gradient(params, loss)
        for i in rng.choice(151, size=50, replace=False):
            tp = theta.copy(); tp[i] += 1e-5
            tm = theta.copy(); tm[i] -= 1e-5
            fd = (loss.value(unflatten_params((2, 10, 10, 1), tp))
                  - loss.value(unflatten_params((2, 10, 10, 1), tm))) / 2e-5
            worst = max(worst, abs(fd - grad[i]) / max(1.0, abs(fd)))
    record("criterion 10: gradient check", worst <= 1e-5,
           f"max relative component error vs central differences {worst:.2e} <= 1e-5")


def test_criterion_11_oracle_invariants():
    from lsnn_hcl.flux import builtin_flux, custom_flux
    from lsnn_hcl.oracles import riemann_burgers, riemann_cubic_osher, riemann_quartic, weno3_rk4_reference

    rh_worst = 0.0
    for sol in (riemann_burgers(1.0, 0.0), riemann_quartic(1.0, 0.0), riemann_cubic_osher(1.0, -1.0)):
        f = sol.flux.f[0]
        for s, ul, ur in sol.descriptor["shocks"]:
            rh_worst = max(rh_worst, abs(s * (ul - ur) - (float(f(np.float64(ul))) - float(f(np.float64(ur))))))
    cubic = builtin_flux("cubic1d")
    tangency = float(cubic.f_prime[0](np.float64(-0.5)))

    adv = custom_flux(lambda u: u, lambda u: np.ones_like(u), name="advection")
    u0 = lambda x: np.sin(2 * np.pi * np.asarray(x, dtype=float)) + 0.3 * np.cos(4 * np.pi * np.asarray(x, dtype=float))
    avg = lambda fn, x, dx: (fn(x - dx / 2) + 4 * fn(x) + fn(x + dx / 2)) / 6
    errs = []
    for nx in (50, 100, 200):
        dx = 1.0 / nx
        ref = weno3_rk4_reference(adv, u0, [0.0], [1.0], dx, 0.2 * dx, [0.5], bc="periodic")
        errs.append(float(np.sqrt(np.mean((ref.snapshots[-1] - avg(lambda s: u0(s - 0.5), ref.centers[0], dx)) ** 2))))
    # err ~ dx^p and the abscissa is log(dx), so the slope is the order itself
    weno_order = float(np.polyfit(np.log([1 / 50, 1 / 100, 1 / 200]), np.log(errs), 1)[0])

    model = builtin_flux("burgers1d")
    step = lambda x: np.where(np.asarray(x, dtype=float) <= 0, 1.0, 0.0)
    ref = weno3_rk4_reference(model, step, [-1.0], [1.0], 0.01, 0.004, [0.3, 0.6], bc="hold_initial")
    cons_worst = 0.0
    for k in range(1, len(ref.times)):
        dm = ref.mass[k] - ref.mass[0]
        fl = ref.boundary_flux_in[k] - ref.boundary_flux_in[0]
        cons_worst = max(cons_worst, abs(dm - fl) / max(abs(dm), 1e-30))

    ok = rh_worst <= 1e-12 and tangency == 0.25 and weno_order >= 2.5 and cons_worst <= 1e-10
    record("criterion 11: oracles", ok,
           f"RH residual {rh_worst:.1e} <= 1e-12; tangency f'(-1/2) = {tangency} = 1/4; "
           f"WENO order {weno_order:.2f} >= 2.5; conservation {cons_worst:.1e} <= 1e-10")


def test_criterion_12_determinism(tmp_path):
    overrides = {
        "training": {"iterations": 400, "lr_schedule": [[0, 0.003]]},
        "n_blocks": 2,
        "domain": {"spatial_lo": [-1.0], "spatial_hi": [1.0], "t_final": 0.4},
        "mesh": {"h": 0.1, "delta": 0.05, "rule": "trapezoidal", "sub_m": 2, "sub_n": 2},
        "trace_times": [0.4],
    }
    cfg = preset_config("riemann_shock_paper", {**overrides, "output_dir": str(tmp_path / "a")})
    run_experiment(cfg, quiet=True)
    run_experiment(cfg, out_dir=tmp_path / "b", quiet=True)
    same = True
    for name in ("errors.csv", "checkpoint_block1.json", "checkpoint_block2.json"):
        same &= (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    record("criterion 12: determinism", same,
           "identical config+seed give byte-identical errors.csv and checkpoints")


def teardown_module(module):
    if RESULTS:
        print("\n" + "=" * 72)
        print("acceptance summary:")
        for line in RESULTS:
            print("  " + line)
        print("=" * 72)
