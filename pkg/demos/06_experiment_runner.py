"""The config-driven experiment runner and its artifacts.

Experiments are described declaratively; presets ship the published settings
for every benchmark (see `lsnn_hcl/presets/`).  A run trains all blocks,
scores them against the configured oracle, and emits a deterministic artifact
set whose manifest carries a content hash per file: identical config and seed
reproduce every byte.

This demo overlays a scaled-down mesh/iteration budget on the shock preset so
it finishes in about a minute; drop the overrides to reproduce the published
table.  The same run is available from the command line:

    lsnn-hcl run overrides.yaml --preset riemann_shock_paper
    lsnn-hcl report <run-dir>
    lsnn-hcl study --case step_horizontal --rule trapezoidal

Run:  python demos/06_experiment_runner.py
"""

import json
from pathlib import Path

from lsnn_hcl.experiments import preset_config, preset_names, report_run, run_experiment

print("available presets:")
for name in preset_names():
    print("  ", name)

out_dir = Path("runs/demo_shock_scaled")
config = preset_config("riemann_shock_paper", {
    "mesh": {"h": 0.02, "delta": 0.02, "rule": "trapezoidal", "sub_m": 2, "sub_n": 2},
    "training": {"iterations": 5000, "lr_schedule": [[0, 0.003]]},
    "trace_times": [0.2, 0.6],
    "output_dir": str(out_dir),
})

print("\ntraining the scaled-down shock run...")
summary = run_experiment(config)
print("\nper-block relative L2 errors:")
for block, err in summary["errors"]:
    print(f"  block {block}: {err:.4f}")

manifest = json.loads((out_dir / "manifest.json").read_text())
print("\nmanifest files (name -> sha256 prefix):")
for name, digest in sorted(manifest["files"].items()):
    print(f"  {name:28s} {digest[:16]}")

print("\nre-deriving the error table from the checkpoints alone:")
report_run(out_dir)
