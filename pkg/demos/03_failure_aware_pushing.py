"""
Learning from successes and failures
====================================

Successful pushes bulge around an obstacle at (0.5, 0); failed pushes go
straight through it. Raising ``beta`` pushes the reproduction away from the
failures; with failures only, a trust region around a straight reference
keeps the problem bounded.
"""

import numpy as np

from skillforge.constrained import ConstraintSet
from skillforge.corpus import PUSH_OBSTACLE, generate_demos
from skillforge.failure_aware import encode, min_trust_region, solve_failed_only, solve_repro
from skillforge.trajectory import DemoSet, align

demos, labels = generate_demos(11, "pushing", n_demos=5, n_samples=40, noise=0.003)
model = encode(align(DemoSet(demos, labels), 40))
cons = ConstraintSet.endpoints(model.T, [0.0, 0.0], [1.0, 0.0])

for beta in (0.0, 0.25, 0.5, 1.0, 5.0):
    traj, used = solve_repro(model, beta, smooth=(1.0, 1.0), cons=cons)
    clearance = np.min(np.linalg.norm(traj.points - PUSH_OBSTACLE, axis=1))
    print(f"beta={beta:4.2f} (used {used:.3f}): obstacle clearance {clearance:.3f}")

# failures only: treat the upward bulges as the thing to avoid
bad = encode(DemoSet(demos[:5], ["failure"] * 5))
rho = 2 * min_trust_region(bad, 1.0)
away = solve_failed_only(bad, rho, beta=1.0, smooth=(1.0, 1.0), cons=cons)
mid = bad.T // 2
print(f"failure mean at mid-path y={bad.mu_f[mid, 1]:+.3f}, reproduction y={away.points[mid, 1]:+.3f}")
