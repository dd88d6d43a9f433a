"""Polyline elastic maps fitted to demonstrations.

A map is a chain of ``K`` nodes. Its energy has three parts:

* approximation ``U_y``: weighted mean squared distance from each data point
  to the node it is assigned to,
* stretching ``U_E = lam * sum |x[i+1] - x[i]|^2``,
* bending ``U_R = mu * sum |x[i-1] - 2 x[i] + x[i+1]|^2``.

With the assignment held fixed the energy is a convex quadratic in the node
coordinates, so :func:`fit` alternates nearest-node assignment with one SPD
solve per coordinate.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

from .errors import IllPosedEnergy, IllPosedFit, InvalidArgument, NotPositiveDefinite
from .numsolve import SPDFactor
from .trajectory import DemoSet, Trajectory, arc_length, as_demoset, resample, second_differences

log = logging.getLogger(__name__)

INIT_SCHEMES = ("time", "arclength", "segment")
WEIGHT_SCHEMES = ("uniform", "curvature", "endpoint")

DEFAULT_STRETCH = 0.01
DEFAULT_BEND = 1.0
ENDPOINT_FRACTION = 0.05
ENDPOINT_BOOST = 10.0


def strategies() -> list:
    """Names of the nine construction/weighting strategies."""
    return [strategy_name(i, w) for i, w in itertools.product(INIT_SCHEMES, WEIGHT_SCHEMES)]


def strategy_name(init: str, weighting: str) -> str:
    return f"init{INIT_SCHEMES.index(init) + 1}xweight{WEIGHT_SCHEMES.index(weighting) + 1}"


def parse_strategy(name: str) -> tuple:
    """Inverse of :func:`strategy_name`, e.g. ``"init2xweight3"``."""
    try:
        a, b = name.split("x")
        return INIT_SCHEMES[int(a[4:]) - 1], WEIGHT_SCHEMES[int(b[6:]) - 1]
    except (ValueError, IndexError):
        raise InvalidArgument(f"unknown strategy {name!r}", module="elastic_map") from None


def default_weights(K: int) -> tuple:
    """Stretching and bending weights for a ``K``-node map.

    The base values are divided by the number of edges/ribs so the tension
    terms act as per-element averages, like the normalized data term.
    """
    return DEFAULT_STRETCH / (K - 1), DEFAULT_BEND / (K - 2)


@dataclass(frozen=True, eq=False)
class ElasticMap:
    nodes: np.ndarray
    lam: float
    mu: float
    weighting: str = "uniform"
    init: str = "time"

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim == 1:
            nodes = nodes[:, None]
        if len(nodes) < 3:
            raise InvalidArgument("an elastic map needs K >= 3 nodes", module="elastic_map")
        if self.lam < 0 or self.mu < 0:
            raise InvalidArgument("lam and mu must be non-negative", module="elastic_map")
        if self.weighting not in WEIGHT_SCHEMES:
            raise InvalidArgument(f"unknown weighting {self.weighting!r}", module="elastic_map")
        if self.init not in INIT_SCHEMES:
            raise InvalidArgument(f"unknown init {self.init!r}", module="elastic_map")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "mu", float(self.mu))

    @property
    def K(self) -> int:
        return len(self.nodes)

    @property
    def dim(self) -> int:
        return self.nodes.shape[1]

    @property
    def strategy(self) -> str:
        return strategy_name(self.init, self.weighting)

    def with_nodes(self, nodes) -> "ElasticMap":
        return replace(self, nodes=nodes)


class Assignment(NamedTuple):
    owner: np.ndarray
    weights: np.ndarray


class Energy(NamedTuple):
    U_y: float
    U_E: float
    U_R: float
    U_total: float


def edge_operator(K: int) -> np.ndarray:
    """``(K-1, K)`` first-difference matrix."""
    E = np.zeros((K - 1, K))
    i = np.arange(K - 1)
    E[i, i] = -1.0
    E[i, i + 1] = 1.0
    return E


def rib_operator(K: int) -> np.ndarray:
    """``(K-2, K)`` second-difference matrix."""
    R = np.zeros((K - 2, K))
    i = np.arange(K - 2)
    R[i, i] = 1.0
    R[i, i + 1] = -2.0
    R[i, i + 2] = 1.0
    return R


def tension_matrix(K: int, lam: float, mu: float) -> np.ndarray:
    E = edge_operator(K)
    R = rib_operator(K)
    return lam * E.T @ E + mu * R.T @ R


def assign(nodes, points) -> np.ndarray:
    """Index of the nearest node for every point; ties go to the lower index."""
    nodes = np.asarray(nodes, dtype=float)
    points = np.asarray(points, dtype=float)
    d2 = ((points[:, None, :] - nodes[None, :, :]) ** 2).sum(axis=2)
    return np.argmin(d2, axis=1)


def _check(map, points, asg):
    if len(asg.owner) != len(points) or len(asg.weights) != len(points):
        raise InvalidArgument("assignment does not match the data", module="elastic_map")
    if len(points) and (asg.owner.min() < 0 or asg.owner.max() >= map.K):
        raise InvalidArgument("assignment refers to a missing node", module="elastic_map")
    if len(points) and not (np.all(asg.weights > 0) and np.all(np.isfinite(asg.weights))):
        raise InvalidArgument("data weights must be positive and finite", module="elastic_map")


def quadratic_form(map: ElasticMap, points, asg: Assignment):
    """Fixed-assignment energy as ``U = sum_k x_k' A x_k - 2 b_k' x_k + c``.

    Returns ``(A, B, c)`` where ``A`` is ``(K, K)``, column ``k`` of ``B`` is
    ``b_k`` and ``c`` is the constant part of ``U_y``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, map.dim)
    K = map.K
    A = tension_matrix(K, map.lam, map.mu)
    B = np.zeros((K, map.dim))
    c = 0.0
    if len(points):
        w = np.asarray(asg.weights, dtype=float)
        wn = w / w.sum()
        mass = np.bincount(asg.owner, weights=wn, minlength=K)
        A[np.diag_indices(K)] += mass
        for k in range(map.dim):
            B[:, k] = np.bincount(asg.owner, weights=wn * points[:, k], minlength=K)
        c = float(np.sum(wn * np.sum(points**2, axis=1)))
    return A, B, c


def energy(map: ElasticMap, points, asg: Assignment = None) -> Energy:
    """Energy terms of ``map`` for weighted ``points``.

    ``asg`` defaults to nearest-node ownership with unit weights. An empty
    point set contributes ``U_y = 0``.
    """
    points = np.asarray(points, dtype=float).reshape(-1, map.dim)
    if asg is None:
        asg = Assignment(assign(map.nodes, points), np.ones(len(points)))
    if len(points) == 0 and map.lam == 0 and map.mu == 0:
        raise IllPosedEnergy("no data and no tension terms")
    _check(map, points, asg)
    X = map.nodes
    if len(points):
        w = np.asarray(asg.weights, dtype=float)
        r2 = np.sum((points - X[asg.owner]) ** 2, axis=1)
        U_y = float(np.sum(w * r2) / np.sum(w))
    else:
        U_y = 0.0
    U_E = map.lam * float(np.sum(np.diff(X, axis=0) ** 2))
    U_R = map.mu * float(np.sum(second_differences(X) ** 2))
    return Energy(U_y, U_E, U_R, U_y + U_E + U_R)


def energy_gradient(map: ElasticMap, points, asg: Assignment) -> np.ndarray:
    """Gradient of ``U_total`` with respect to the node coordinates."""
    A, B, _ = quadratic_form(map, points, asg)
    return 2.0 * (A @ map.nodes - B)


def node_update(map: ElasticMap, points, asg: Assignment) -> np.ndarray:
    """Minimize the energy over the nodes with the assignment fixed."""
    A, B, _ = quadratic_form(map, points, asg)
    try:
        return SPDFactor(A).solve(B)
    except NotPositiveDefinite as exc:
        raise IllPosedFit(f"node update is singular (pivot {exc.pivot})") from None


def data_weights(demo: Trajectory, scheme: str) -> np.ndarray:
    """Per-sample weights of one demonstration under ``scheme``."""
    n = len(demo)
    if scheme == "uniform":
        return np.ones(n)
    if scheme == "curvature":
        kappa = np.zeros(n)
        if n >= 3:
            kappa[1:-1] = np.linalg.norm(second_differences(demo), axis=1)
            kappa[0], kappa[-1] = kappa[1], kappa[-2]
        top = kappa.max()
        return 1.0 + (kappa / top if top > 0 else kappa)
    if scheme == "endpoint":
        w = np.ones(n)
        m = max(1, int(np.ceil(ENDPOINT_FRACTION * n)))
        w[:m] = ENDPOINT_BOOST
        w[-m:] = ENDPOINT_BOOST
        return w
    raise InvalidArgument(f"unknown weighting {scheme!r}", module="elastic_map")


def pooled_data(demos, scheme: str = "uniform"):
    """Stack every sample of every demo (labels ignored) with its weight."""
    demos = as_demoset(demos)
    pts = np.vstack([d.points for d in demos.demos])
    w = np.concatenate([data_weights(d, scheme) for d in demos.demos])
    return pts, w


def mean_trajectory(demos: DemoSet) -> Trajectory:
    T = demos.common_len
    if T is None:
        T = max(len(d) for d in demos.demos)
    aligned = [resample(d, T) for d in demos.demos]
    pts = np.mean([d.points for d in aligned], axis=0)
    return Trajectory(pts, aligned[0].times)


def _arclength_nodes(traj: Trajectory, K: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(traj.points, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] == 0:
        return np.repeat(traj.points[:1], K, axis=0)
    keep = np.concatenate([[True], seg > 0])
    targets = np.linspace(0.0, s[-1], K)
    return np.column_stack(
        [np.interp(targets, s[keep], traj.points[keep, k]) for k in range(traj.dim)]
    )


def construct(demos, K: int, init: str = "time", weighting: str = "uniform",
              lam: float = None, mu: float = None) -> ElasticMap:
    """Initial map for ``demos`` using one of the nine strategies."""
    demos = as_demoset(demos)
    if K < 3:
        raise InvalidArgument("K must be at least 3", module="elastic_map")
    shortest = min(len(d) for d in demos.demos)
    if K > shortest:
        raise InvalidArgument(f"K={K} exceeds shortest demo length {shortest}", module="elastic_map")
    dl, dm = default_weights(K)
    lam = dl if lam is None else lam
    mu = dm if mu is None else mu
    mean = mean_trajectory(demos)
    if init == "time":
        nodes = resample(mean, K).points
    elif init == "arclength":
        nodes = _arclength_nodes(mean, K)
    elif init == "segment":
        t = np.linspace(0.0, 1.0, K)[:, None]
        nodes = (1 - t) * mean.points[0] + t * mean.points[-1]
    else:
        raise InvalidArgument(f"unknown init {init!r}", module="elastic_map")
    return ElasticMap(nodes, lam, mu, weighting=weighting, init=init)


def fit(map: ElasticMap, demos, max_iters: int = 200, tol: float = 1e-12):
    """Fit ``map`` to the pooled samples of ``demos``.

    Returns the fitted map and the energy after every node update. The loop
    stops when the assignment no longer changes, when the energy decrease
    drops below ``tol`` or after ``max_iters`` updates.
    """
    demos = as_demoset(demos)
    if demos.dim != map.dim:
        raise InvalidArgument("map and demos differ in dimension", module="elastic_map")
    points, w = pooled_data(demos, map.weighting)
    owner = assign(map.nodes, points)
    trace = []
    for it in range(max_iters):
        asg = Assignment(owner, w)
        map = map.with_nodes(node_update(map, points, asg))
        trace.append(energy(map, points, asg).U_total)
        new_owner = assign(map.nodes, points)
        if np.array_equal(new_owner, owner):
            break
        owner = new_owner
        if len(trace) > 1 and abs(trace[-2] - trace[-1]) < tol:
            break
    log.debug("elastic map fit: %d iterations, U=%g", len(trace), trace[-1])
    return map, trace


def fit_demos(demos, K: int = 20, strategy: str = None, init: str = "time",
              weighting: str = "uniform", lam: float = None, mu: float = None,
              max_iters: int = 200, tol: float = 1e-12):
    """Construct and fit in one call."""
    if strategy is not None:
        init, weighting = parse_strategy(strategy)
    m = construct(demos, K, init=init, weighting=weighting, lam=lam, mu=mu)
    return fit(m, demos, max_iters=max_iters, tol=tol)


def fixed_assignment_residual(map: ElasticMap, demos) -> float:
    """Largest node move when re-solving at the map's own assignment."""
    points, w = pooled_data(demos, map.weighting)
    asg = Assignment(assign(map.nodes, points), w)
    return float(np.max(np.abs(node_update(map, points, asg) - map.nodes)))


def reproduce(map: ElasticMap, n: int) -> Trajectory:
    """The node polyline resampled to ``n`` points on times ``[0, 1]``."""
    if n < 2:
        raise InvalidArgument("reproduce needs n >= 2", module="elastic_map")
    return resample(Trajectory.uniform(map.nodes), n)


def path_length(map: ElasticMap) -> float:
    return arc_length(Trajectory.uniform(map.nodes))
