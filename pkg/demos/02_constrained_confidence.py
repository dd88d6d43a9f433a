"""
New boundary conditions, multipliers and confidence
===================================================

A map fitted to a pushing-style demonstration is reproduced from a start
point moved further and further away. The multipliers of the pins measure
how hard each pin pulls, and the confidence drops as the move grows.
"""

import numpy as np

from skillforge.constrained import (ConstraintSet, FrozenProblem, Pin, confidence_sweep,
                                    prune)
from skillforge.corpus import skill
from skillforge.elastic_map import fit_demos

demo = skill("pushing", 100, np.random.default_rng(5))
emap, _ = fit_demos(demo, K=20)
prob = FrozenProblem(emap, demo)
X0, J0 = prob.unconstrained()
print(f"unconstrained energy {J0:.4e}")

for dy in (0.0, 0.05, 0.1, 0.2, 0.4):
    cons = ConstraintSet.endpoints(emap.K, X0[0] + [0.0, dy], X0[-1])
    X, rep = prob.solve(cons)
    print(f"start moved by {dy:4.2f}: kappa={rep.kappa:.4f}  |nu_start|="
          f"{np.linalg.norm(rep.duals[0]):.3e}  |nu_goal|={np.linalg.norm(rep.duals[1]):.3e}")

# a softer pin (confidence < 1) is allowed to miss its target
cons = ConstraintSet.endpoints(emap.K, X0[0] + [0.0, 0.2], X0[-1])
for entry in confidence_sweep(emap, demo, cons, [0.1, 0.3, 0.5, 0.7, 0.9, 1.0]):
    print(f"confidence {entry.kappa:.1f}: pin violation {entry.violation:.2e}")

# pins that exert (next to) no force can be dropped
X1, _ = prob.solve(cons)
extra = ConstraintSet(list(cons.pins) + [Pin(10, X1[10])])
res = prune(emap, demo, extra, threshold=0.01)
print("pruned nodes:", res.removed, f"solution change {res.change:.1e}")
