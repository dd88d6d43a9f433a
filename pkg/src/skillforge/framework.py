"""Similarity regions over boundary conditions.

Every representation in the pool reproduces the demonstrated skill with its
point of interest moved to each point of a grid. Each reproduction is scored
against the demonstration, and every grid point remembers the best
representation and its score.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import baselines
from .constrained import ConstraintSet, FrozenProblem
from .elastic_map import fit_demos
from .errors import InvalidArgument, OutOfRegion, SkillforgeError
from .metrics import METRICS, default_sigma, similarity
from .trajectory import Trajectory, resample

log = logging.getLogger(__name__)

REPRESENTATIONS = ("elastic_map", "dmp", "lte")
POI_KINDS = ("initial", "final", "rigid")
MAX_RESOLUTION = 15
MAX_DIM = 3


@dataclass(frozen=True)
class RegionSpec:
    """Grid and scoring parameters.

    ``poi_kind`` chooses which boundary condition the grid moves: the
    initial point, the final point, or both together (``"rigid"``, which
    translates the whole task by ``g - start``). ``center`` defaults to the
    demonstration's point of interest and ``sigma`` to a tenth of its arc
    length.
    """

    half_extents: tuple
    poi_kind: str = "initial"
    center: tuple = None
    resolution: int = 5
    metric: str = "frechet"
    sigma: float = None
    threshold: float = 0.5
    representations: tuple = REPRESENTATIONS
    K: int = 20
    strategy: str = "init1xweight1"
    n_basis: int = 30

    def __post_init__(self):
        if self.poi_kind not in POI_KINDS:
            raise InvalidArgument(f"unknown poi_kind {self.poi_kind!r}", module="framework")
        if not 2 <= self.resolution <= MAX_RESOLUTION:
            raise InvalidArgument(f"resolution must lie in [2, {MAX_RESOLUTION}]", module="framework")
        if self.metric not in METRICS:
            raise InvalidArgument(f"unknown metric {self.metric!r}", module="framework")
        if not 0 < self.threshold < 1:
            raise InvalidArgument("threshold must lie in (0, 1)", module="framework")
        if self.sigma is not None and not self.sigma > 0:
            raise InvalidArgument("sigma must be positive", module="framework")
        reps = tuple(self.representations)
        if not reps or any(r not in REPRESENTATIONS for r in reps) or len(set(reps)) != len(reps):
            raise InvalidArgument(f"bad representation pool {reps}", module="framework")
        # canonical order fixes tie-breaking
        object.__setattr__(self, "representations",
                           tuple(r for r in REPRESENTATIONS if r in reps))
        he = np.atleast_1d(np.asarray(self.half_extents, dtype=float))
        if np.any(he <= 0):
            raise InvalidArgument("half extents must be positive", module="framework")
        object.__setattr__(self, "half_extents", tuple(float(h) for h in he))


@dataclass
class SimilarityRegion:
    axes: list                 # grid coordinates per dimension
    points: np.ndarray         # (G, d), row-major over ``axes``
    representations: tuple
    scores: np.ndarray         # (G, len(representations))
    values: np.ndarray         # (G,)
    best: list
    threshold: float
    inside: np.ndarray
    diagnostics: list = field(default_factory=list)

    @property
    def shape(self):
        return tuple(len(a) for a in self.axes)

    def score(self, rep):
        return self.scores[:, self.representations.index(rep)]

    def to_csv(self) -> str:
        d = self.points.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"g{k + 1}" for k in range(d)] + [f"s_{r}" for r in REPRESENTATIONS]
                   + ["v", "best", "inside"])
        for i, g in enumerate(self.points):
            row = [repr(float(x)) for x in g]
            for r in REPRESENTATIONS:
                row.append(repr(float(self.score(r)[i])) if r in self.representations else "")
            row += [repr(float(self.values[i])), self.best[i], int(self.inside[i])]
            w.writerow(row)
        return buf.getvalue()


def thread_count() -> int:
    """Worker threads from ``SKILLFORGE_THREADS`` (unset: 1, ``0``: all CPUs)."""
    raw = os.environ.get("SKILLFORGE_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return (os.cpu_count() or 1) if n == 0 else max(n, 1)


def grid_axes(center, half_extents, resolution):
    unit = np.linspace(-1.0, 1.0, resolution)
    if resolution % 2:
        unit[resolution // 2] = 0.0  # the centre itself is always a grid point
    return [c + h * unit for c, h in zip(center, half_extents)]


class _Pool:
    """Reproducers fitted once per region."""

    def __init__(self, demo: Trajectory, spec: RegionSpec):
        self.demo = demo
        self.n = len(demo)
        self.models = {}
        if "elastic_map" in spec.representations:
            K = min(spec.K, self.n)
            emap, _ = fit_demos(demo, K=K, strategy=spec.strategy)
            prob = FrozenProblem(emap, demo)
            prob.unconstrained()
            self.models["elastic_map"] = prob
        if "dmp" in spec.representations:
            self.models["dmp"] = baselines.dmp_train(demo, spec.n_basis)
        if "lte" in spec.representations:
            self.models["lte"] = baselines.lte_train(demo)

    def reproduce(self, rep, start, goal) -> Trajectory:
        model = self.models[rep]
        if rep == "elastic_map":
            cons = ConstraintSet.endpoints(model.K, start=start, goal=goal)
            X, _ = model.solve(cons)
            return resample(Trajectory.uniform(X), self.n)
        if rep == "dmp":
            return baselines.dmp_reproduce(model, start, goal, n=self.n)
        return baselines.lte_reproduce(model, start, goal)


def boundary(demo: Trajectory, poi_kind: str, g):
    start, goal = demo.points[0], demo.points[-1]
    g = np.asarray(g, dtype=float)
    if poi_kind == "initial":
        return g, goal
    if poi_kind == "final":
        return start, g
    return g, goal + (g - start)


def _evaluate(pool, spec, sigma, g):
    start, goal = boundary(pool.demo, spec.poi_kind, g)
    row, notes = [], []
    for rep in spec.representations:
        try:
            traj = pool.reproduce(rep, start, goal)
            s = similarity(spec.metric, traj, pool.demo, sigma)
            if not np.isfinite(s):
                raise FloatingPointError("non-finite similarity")
        except (SkillforgeError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
            notes.append((tuple(float(x) for x in g), rep, f"{type(exc).__name__}: {exc}"))
            s = 0.0
        row.append(s)
    return row, notes


def build_region(demo: Trajectory, spec: RegionSpec, threads: int = None) -> SimilarityRegion:
    """Score every representation at every grid point around the demo's poi."""
    d = demo.dim
    if d > MAX_DIM:
        raise InvalidArgument(f"regions are limited to {MAX_DIM} dimensions", module="framework")
    he = spec.half_extents
    if len(he) == 1 and d > 1:
        he = he * d
    if len(he) != d:
        raise InvalidArgument("half_extents must match the demo dimension", module="framework")
    poi = demo.points[-1] if spec.poi_kind == "final" else demo.points[0]
    center = poi if spec.center is None else np.asarray(spec.center, dtype=float)
    sigma = default_sigma(demo) if spec.sigma is None else spec.sigma
    axes = grid_axes(center, he, spec.resolution)
    points = np.array(list(itertools.product(*axes)), dtype=float)

    pool = _Pool(demo, spec)
    threads = thread_count() if threads is None else threads
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            results = list(ex.map(lambda g: _evaluate(pool, spec, sigma, g), points))
    else:
        results = [_evaluate(pool, spec, sigma, g) for g in points]

    scores = np.array([r for r, _ in results], dtype=float)
    diagnostics = [n for _, notes in results for n in notes]
    for note in diagnostics:
        log.warning("representation %s failed at %s: %s", note[1], note[0], note[2])
    idx = np.argmax(scores, axis=1)
    values = scores[np.arange(len(points)), idx]
    best = [spec.representations[i] for i in idx]
    return SimilarityRegion(axes, points, spec.representations, scores, values, best,
                            spec.threshold, values >= spec.threshold, diagnostics)


def select(region: SimilarityRegion, g):
    """Best representation and score at the grid point nearest to ``g``.

    Raises
    ------
    OutOfRegion
        If ``g`` lies outside the grid's bounding box; ``nearest`` holds the
        closest point on the box.
    """
    g = np.asarray(g, dtype=float)
    lo = np.array([a[0] for a in region.axes])
    hi = np.array([a[-1] for a in region.axes])
    if g.shape != lo.shape or np.any(g < lo) or np.any(g > hi):
        raise OutOfRegion(g, np.clip(g, lo, hi) if g.shape == lo.shape else lo)
    idx = [int(np.argmin(np.abs(a - x))) for a, x in zip(region.axes, g)]
    flat = int(np.ravel_multi_index(idx, region.shape))
    return region.best[flat], float(region.values[flat])
