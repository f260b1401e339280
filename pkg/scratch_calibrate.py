"""Calibration: cubic desk preset + quartic block-1 ladder, acceptance-style checks."""
import sys
import time

import numpy as np

from lsnn_hcl.experiments import preset_config, run_experiment

which = sys.argv[1]

if which == "cubic":
    cfg = preset_config("cubic_nonconvex_desk", {"output_dir": "/tmp/cal_cubic"})
    t0 = time.perf_counter()
    s = run_experiment(cfg, quiet=False)
    print("cubic errors:", [(k, round(e, 5)) for k, e in s["errors"]])
    # wave structure at t=0.4: shock near x=0.1, plateau -0.5 behind
    import csv
    with open("/tmp/cal_cubic/trace_t0.4.csv") as fh:
        rows = list(csv.DictReader(fh))
    x = np.array([float(r["x"]) for r in rows])
    u = np.array([float(r["u_nn"]) for r in rows])
    level = 0.25  # midpoint of jump from 1 to -0.5
    below = np.nonzero(u <= level)[0]
    i = below[below > np.argmax(x > -0.5)][0]
    x_shock = x[i - 1] + (x[i] - x[i - 1]) * (u[i - 1] - level) / (u[i - 1] - u[i])
    window = (x > x_shock + 0.005) & (x < x_shock + 0.03)
    plateau = float(np.mean(u[window]))
    print(f"shock location {x_shock:.4f} (target 0.1 +- 0.03), plateau {plateau:.4f} (target -0.5 +- 0.05)")
    print(f"total {time.perf_counter()-t0:.0f}s")
elif which == "quartic":
    rule = sys.argv[2]
    errs = {}
    for m in (2, 4, 6):
        cfg = preset_config(f"quartic_{rule}_paper", {
            "domain": {"spatial_lo": [-1.0], "spatial_hi": [1.0], "t_final": 0.2},
            "n_blocks": 1,
            "mesh": {"h": 0.01, "delta": 0.01, "rule": rule if rule != "trap" else "trapezoidal",
                     "sub_m": m, "sub_n": m},
            "trace_times": [0.2],
            "output_dir": f"/tmp/cal_quartic_{rule}_{m}",
        })
        t0 = time.perf_counter()
        s = run_experiment(cfg, quiet=True)
        errs[m] = s["errors"][0][1]
        print(f"{rule} m={m}: err={errs[m]:.6f} ({time.perf_counter()-t0:.0f}s)", flush=True)
    print(f"{rule}: e2={errs[2]:.5f} e4={errs[4]:.5f} e6={errs[6]:.5f} "
          f"monotone={errs[2] > errs[4] > errs[6]} e6<=0.02={errs[6] <= 0.02}")
