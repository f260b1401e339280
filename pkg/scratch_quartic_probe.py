"""Probe quartic m=4 trainability: seeds and longer schedules."""
import time

import numpy as np

from lsnn_hcl.experiments import preset_config, run_experiment

variants = [
    ("seed1_45k", 1, 45000, [[0, 0.003], [30000, 0.001]]),
    ("seed0_80k", 0, 80000, [[0, 0.003], [40000, 0.001]]),
    ("seed2_45k", 2, 45000, [[0, 0.003], [30000, 0.001]]),
]
for name, seed, iters, sched in variants:
    cfg = preset_config("quartic_trapezoidal_paper", {
        "seed": seed,
        "domain": {"spatial_lo": [-1.0], "spatial_hi": [1.0], "t_final": 0.2},
        "n_blocks": 1,
        "mesh": {"h": 0.01, "delta": 0.01, "rule": "trapezoidal", "sub_m": 4, "sub_n": 4},
        "training": {"iterations": iters, "lr_schedule": sched},
        "trace_times": [],
        "output_dir": f"/tmp/probe_quartic_{name}",
    })
    t0 = time.perf_counter()
    s = run_experiment(cfg, quiet=True)
    print(f"{name}: err={s['errors'][0][1]:.6f} ({time.perf_counter()-t0:.0f}s)", flush=True)
