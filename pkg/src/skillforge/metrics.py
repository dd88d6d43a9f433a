"""Trajectory distance measures and the similarity score built on them.

Eleven measures are provided, grouped by what they are sensitive to:

=================  ==============================================
shape / coupling   ``frechet``, ``dtw``, ``hausdorff``
pointwise          ``sse``, ``mae``, ``area``
boundary           ``endpoint``
smoothness         ``curvature``, ``jerk``
direction          ``velocity_cosine``
pose-invariant     ``procrustes``
=================  ==============================================

``frechet``, ``dtw`` and ``hausdorff`` work on the raw samples; the others
resample both curves to a common length first.
"""

from __future__ import annotations

import csv
import io
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import cdist

from .errors import InvalidArgument
from .trajectory import Trajectory, arc_length, resample

METRICS = (
    "frechet", "dtw", "hausdorff", "sse", "mae", "endpoint",
    "area", "curvature", "velocity_cosine", "procrustes", "jerk",
)
RAW_METRICS = ("frechet", "dtw", "hausdorff")
INVARIANCE_TOL = 1e-9


def _as_traj(x) -> Trajectory:
    if isinstance(x, Trajectory):
        return x
    return Trajectory.uniform(np.asarray(x, dtype=float))


def discrete_frechet(P, Q) -> float:
    """Discrete Frechet distance by the standard coupling recursion."""
    D = cdist(P, Q)
    n, m = D.shape
    ca = np.empty((n, m))
    ca[0, 0] = D[0, 0]
    for i in range(1, n):
        ca[i, 0] = max(ca[i - 1, 0], D[i, 0])
    for j in range(1, m):
        ca[0, j] = max(ca[0, j - 1], D[0, j])
    for i in range(1, n):
        for j in range(1, m):
            ca[i, j] = max(min(ca[i - 1, j], ca[i - 1, j - 1], ca[i, j - 1]), D[i, j])
    return float(ca[-1, -1])


def dtw(P, Q, normalize: bool = False) -> float:
    """Dynamic time warping with steps (1,0), (0,1), (1,1) and no window.

    With ``normalize`` the cost is divided by ``len(P) + len(Q)``.
    """
    D = cdist(P, Q)
    n, m = D.shape
    acc = np.full((n + 1, m + 1), np.inf)
    acc[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            acc[i, j] = D[i - 1, j - 1] + min(acc[i - 1, j], acc[i, j - 1], acc[i - 1, j - 1])
    cost = float(acc[n, m])
    return cost / (n + m) if normalize else cost


def hausdorff(P, Q) -> float:
    D = cdist(P, Q)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def _procrustes_disparity(P, Q) -> float:
    # optimal translation, proper rotation and uniform scale of Q onto P
    if np.array_equal(P, Q):
        return 0.0  # the SVD route leaves a rounding-level residue
    A = P - P.mean(axis=0)
    B = Q - Q.mean(axis=0)
    na, nb = np.linalg.norm(A), np.linalg.norm(B)
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    A /= na
    B /= nb
    U, s, Vt = np.linalg.svd(A.T @ B)
    if np.linalg.det(U @ Vt) < 0:
        s[-1] = -s[-1]
    return float(max(1.0 - s.sum() ** 2, 0.0))


def _velocity_cosine(P, Q) -> float:
    vp, vq = np.diff(P, axis=0), np.diff(Q, axis=0)
    npn, nqn = np.linalg.norm(vp, axis=1), np.linalg.norm(vq, axis=1)
    cos = np.zeros(len(vp))
    both = (npn > 0) & (nqn > 0)
    cos[both] = np.sum(vp[both] * vq[both], axis=1) / (npn[both] * nqn[both])
    cos[(npn == 0) & (nqn == 0)] = 1.0
    return float(max(1.0 - np.clip(cos, -1.0, 1.0).mean(), 0.0))


def _area(P, Q) -> float:
    gap = np.linalg.norm(P - Q, axis=1)
    step = 0.5 * (np.linalg.norm(np.diff(P, axis=0), axis=1)
                  + np.linalg.norm(np.diff(Q, axis=0), axis=1))
    return float(np.sum(0.5 * (gap[:-1] + gap[1:]) * step))


def _common(A: Trajectory, B: Trajectory, minimum=2):
    n = max(len(A), len(B), minimum)
    a = A if len(A) == n else resample(A, n)
    b = B if len(B) == n else resample(B, n)
    return a.points, b.points


def distance(metric: str, A, B) -> float:
    """Distance ``d(A, B) >= 0`` under ``metric`` (one of :data:`METRICS`)."""
    A, B = _as_traj(A), _as_traj(B)
    if A.dim != B.dim:
        raise InvalidArgument(f"dimension mismatch {A.dim} vs {B.dim}", module="similarity_metrics")
    if metric == "frechet":
        return discrete_frechet(A.points, B.points)
    if metric == "dtw":
        return dtw(A.points, B.points)
    if metric == "hausdorff":
        return hausdorff(A.points, B.points)
    if metric == "curvature":
        P, Q = _common(A, B, 3)
        return float(np.linalg.norm(np.diff(P, 2, axis=0) - np.diff(Q, 2, axis=0)))
    if metric == "jerk":
        P, Q = _common(A, B, 4)
        return float(np.linalg.norm(np.diff(P, 3, axis=0) - np.diff(Q, 3, axis=0)))
    P, Q = _common(A, B)
    if metric == "sse":
        return float(np.sum((P - Q) ** 2))
    if metric == "mae":
        return float(np.mean(np.linalg.norm(P - Q, axis=1)))
    if metric == "endpoint":
        return float(np.linalg.norm(P[0] - Q[0]) + np.linalg.norm(P[-1] - Q[-1]))
    if metric == "area":
        return _area(P, Q)
    if metric == "velocity_cosine":
        return _velocity_cosine(P, Q)
    if metric == "procrustes":
        return _procrustes_disparity(P, Q)
    raise InvalidArgument(f"unknown metric {metric!r}", module="similarity_metrics")


def default_sigma(demo) -> float:
    """Similarity length scale: a tenth of the demonstration's arc length."""
    s = 0.1 * arc_length(_as_traj(demo))
    return s if s > 0 else 1.0


def similarity(metric: str, A, B, sigma: float = None) -> float:
    """``exp(-d(A, B) / sigma)``, in ``(0, 1]``; ``sigma`` defaults from ``B``."""
    if sigma is None:
        sigma = default_sigma(B)
    if not sigma > 0:
        raise InvalidArgument("sigma must be positive", module="similarity_metrics")
    return float(np.exp(-distance(metric, A, B) / sigma))


class BiasReport(NamedTuple):
    families: tuple
    metrics: tuple
    mean: dict       # (metric, family) -> mean distance
    invariant: dict  # (metric, family) -> bool

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["metric"] + [f"{f}" for f in self.families]
                   + [f"{f}_invariant" for f in self.families])
        for m in self.metrics:
            w.writerow([m] + [repr(self.mean[m, f]) for f in self.families]
                       + [int(self.invariant[m, f]) for f in self.families])
        return buf.getvalue()


def bias_report(corpus, metrics=METRICS) -> BiasReport:
    """Mean distance per metric and perturbation family.

    ``corpus`` is an iterable of ``(family, A, B)`` triples. A metric is
    flagged invariant to a family when its mean distance is below 1e-9.
    """
    corpus = list(corpus)
    if not corpus:
        raise InvalidArgument("empty corpus", module="similarity_metrics")
    families = tuple(dict.fromkeys(f for f, _, _ in corpus))
    mean, invariant = {}, {}
    for m in metrics:
        for fam in families:
            vals = [distance(m, a, b) for f, a, b in corpus if f == fam]
            mean[m, fam] = float(np.mean(vals))
            invariant[m, fam] = mean[m, fam] < INVARIANCE_TOL
    return BiasReport(families, tuple(metrics), mean, invariant)
