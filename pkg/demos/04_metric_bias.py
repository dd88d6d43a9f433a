"""
What each similarity metric notices
===================================

Pairs of curves are perturbed by one family at a time; the mean distance per
metric and family shows which metrics are blind to which perturbations.
"""

from skillforge.corpus import pair_corpus
from skillforge.metrics import bias_report

report = bias_report(pair_corpus(seed=2024, pairs_per_family=10))
width = max(len(m) for m in report.metrics)
print(" " * width, " ".join(f"{f:>11s}" for f in report.families))
for m in report.metrics:
    cells = []
    for f in report.families:
        mark = "*" if report.invariant[m, f] else " "
        cells.append(f"{report.mean[m, f]:10.3g}{mark}")
    print(f"{m:>{width}s}", " ".join(cells))
print("* = invariant (mean distance below 1e-9)")
