"""Plan a low-vibration move, then track it with the sliding-mode controller.

The script optimizes the hub-angle reference of the reference task with
both searched families, compares them with the cycloid, and closes the
loop around the best plan with a 10 % parametric disturbance.  Outputs
(plan file, CSVs and SVG panels) go to ``demos/out``.  Expect a few minutes.

Run with ``python3 demos/plan_and_track.py [seed]``.
"""
import sys
from pathlib import Path

import numpy as np

from flexarm.cli import run
from flexarm.config import load_config
from flexarm.model import build_model
from flexarm.planning import plan_trajectory
from flexarm.sim import simulate_prescribed
from flexarm.smc import ClosedLoop, UncertaintyModel, design_controller
from flexarm.trajectory import to_text

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1
out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

cfg = load_config()
_, coeffs = build_model(cfg.beam)
task = cfg.task

results = {}
for family in ("spline", "ann"):
    res = plan_trajectory(task, coeffs, family, settings=cfg.family, seed=seed,
                          inner=cfg.fitness_config(), final=cfg.sim_config())
    results[family] = res
    print(f"{family:>6}: residual vibration {res.cost:.3e} after {res.swarm.iterations} iterations")
print(f"cycloid: residual vibration {results['ann'].baseline_cost:.3e}")

best = results["ann"]
(out / "plan.txt").write_text(to_text(best.plan, {"family": "ann", "seed": seed,
                                                  "cost": repr(best.cost)}))
open_loop = simulate_prescribed(best.plan, coeffs, cfg.sim_config())
open_loop.add(t_s=open_loop.t / cfg.time_scale).to_csv(out / "open_loop.csv")

gains, unc, _ = design_controller(best.plan, coeffs, cfg.gains())
loop = ClosedLoop(best.plan, coeffs, gains, UncertaintyModel(eta=unc.eta, D=unc.D, eps=0.1, omega=20.0),
                  cfg.time_scale)
closed = loop.simulate(cfg.sim_config())
closed.add(t_s=closed.t / cfg.time_scale).to_csv(out / "closed_loop.csv")
late = closed.t > 1.5 * task.T_f
print("reaching gains A:", np.round(gains.A, 2))
print("max |e| after 1.5 T_f:", [f"{np.max(np.abs(closed[f'e{j}'][late])):.1e}" for j in (1, 2, 3)])

for name in ("open_loop.csv", "closed_loop.csv"):
    run(["--out-dir", str(out), "plot", str(out / name)])
