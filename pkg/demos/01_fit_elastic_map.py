"""
Fitting an elastic map to a handful of demonstrations
=====================================================

Three noisy sine demonstrations are pooled and fitted with a 20-node
elastic map under each of the nine construction/weighting strategies.
"""

import numpy as np

from skillforge.corpus import skill
from skillforge.elastic_map import energy, fit_demos, pooled_data, reproduce, strategies
from skillforge.elastic_map import Assignment, assign, fixed_assignment_residual
from skillforge.trajectory import DemoSet

rng = np.random.default_rng(0)
demos = DemoSet([skill("sine", 100, rng, noise=0.01) for _ in range(3)])

# every strategy gives a monotone energy trace
for name in strategies():
    emap, trace = fit_demos(demos, K=20, strategy=name)
    pts, w = pooled_data(demos, emap.weighting)
    e = energy(emap, pts, Assignment(assign(emap.nodes, pts), w))
    print(f"{name:16s} iterations={len(trace):2d}  U_y={e.U_y:.2e}  U_E={e.U_E:.2e}  "
          f"U_R={e.U_R:.2e}  residual={fixed_assignment_residual(emap, demos):.1e}")

# the reproduction is just the node polyline, resampled
emap, _ = fit_demos(demos, K=20)
traj = reproduce(emap, 50)
print("reproduction endpoints:", traj.points[0], traj.points[-1])
