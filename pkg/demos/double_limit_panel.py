"""Small-scale double-limit panel: particle fronts vs the two references.

Runs a reduced (K, eps) ladder on the two-plateau medium, prints the
slope table, and writes the panel CSVs + panels.json that the figure
renderer in frontend/ consumes:

    python3 demos/double_limit_panel.py
    cd frontend && npm run render -- ../runs/demo_panel

Full-scale parameters live in the acceptance suite
(tests/test_acceptance.py::test_criterion_09_double_limit_trends).
"""

import json
from pathlib import Path

from demefront.cli import main

OUT = Path("runs/demo_panel")

cfg = {
    "kind": "figure1_panel",
    "seed": 11,
    "output_dir": str(OUT),
    "mu_plus": 3.0,
    "mu_minus": 0.1,
    "dt": 0.02,
    "dx": 1.5e-3,
    "T": 1.5,
    "eps_fixed": 0.2,
    "K_fixed": 100,
    "eps_ladder": [0.4, 0.2, 0.1],
    "K_ladder": [10, 100, 1000],
    "replicates": 3,
    "window_back": 6.0,
    "bulk_threshold": 16,
    "init_width": 4.0,
    "include_pde": True,
    "pde_h_x": 0.1,
}

cfg_path = Path("runs/demo_panel_config.json")
cfg_path.parent.mkdir(parents=True, exist_ok=True)
cfg_path.write_text(json.dumps(cfg, indent=2), encoding="utf-8")
rc = main(["run", str(cfg_path)])
assert rc == 0, "panel run failed"

index = json.loads((OUT / "panels.json").read_text())
comp = index["comparison"]
print("\nslope table (mean over replicates):")
print("  eps ladder (fixed K={}):".format(cfg["K_fixed"]))
for cell in comp["eps_cells"]:
    print(f"    eps={cell['eps']:<5g} slope {cell['mean_slope']:.3f} +- {cell['ci95'] or 0:.3f}")
print("  K ladder (fixed eps={}):".format(cfg["eps_fixed"]))
for cell in comp["K_cells"]:
    print(f"    K={cell['K']:<7} slope {cell['mean_slope']:.3f} +- {cell['ci95'] or 0:.3f}")
print(f"  trajectory-limit slope: {comp['ode_slope']:.4f}")
print(f"\npanel CSVs and panels.json written to {OUT}/")
