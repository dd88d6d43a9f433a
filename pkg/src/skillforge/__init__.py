"""Learning point-to-point skills from demonstrations.

Elastic-map skill models with confidence-scaled constrained reproduction,
success/failure-aware reproduction, trajectory similarity metrics, DMP and
Laplacian-editing baselines, and similarity regions that pick the best
representation per boundary condition.
"""

__version__ = "0.1.0"

from .trajectory import DemoSet, Trajectory, align, arc_length, resample, second_differences
from .elastic_map import ElasticMap, construct, fit, fit_demos, reproduce, strategies
from .constrained import (ConstraintSet, DualReport, Pin, confidence, confidence_sweep, prune,
                          reproduce_constrained)
from .failure_aware import encode, solve_failed_only, solve_repro
from .metrics import METRICS, bias_report, distance, similarity
from .baselines import dmp_reproduce, dmp_train, lte_reproduce, lte_train
from .framework import RegionSpec, SimilarityRegion, build_region, select

__all__ = [
    "DemoSet", "Trajectory", "align", "arc_length", "resample", "second_differences",
    "ElasticMap", "construct", "fit", "fit_demos", "reproduce", "strategies",
    "ConstraintSet", "DualReport", "Pin", "confidence", "confidence_sweep", "prune",
    "reproduce_constrained", "encode", "solve_failed_only", "solve_repro",
    "METRICS", "bias_report", "distance", "similarity",
    "dmp_reproduce", "dmp_train", "lte_reproduce", "lte_train",
    "RegionSpec", "SimilarityRegion", "build_region", "select",
]
