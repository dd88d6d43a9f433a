"""Constrained reproduction from a fitted elastic map.

Pins fix individual nodes to target points. With confidence ``kappa == 1``
the pins are hard equality constraints solved through the KKT system; for
``kappa < 1`` each pin becomes a spring of stiffness ``kappa / (1 - kappa)``
pulling its node toward the target.

The confidence of a reproduction is derived from the energy gap between the
constrained and unconstrained optima,

    kappa = exp(-(J_con - J_unc) / max(J_unc, 1e-12)),

which is 1 exactly when the pins cost nothing. The multipliers of the hard
problem are the sensitivities of ``J_con`` to the pin targets
(``dJ_con/dp_c = -nu_c``) and drive constraint pruning.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .elastic_map import Assignment, ElasticMap, assign, pooled_data, quadratic_form
from .errors import InvalidConstraints, NotPositiveDefinite
from .numsolve import SPDFactor, settings, solve_kkt
from .trajectory import Trajectory, resample

PIN_KINDS = ("initial", "final", "via")
ENERGY_FLOOR = 1e-12


@dataclass(frozen=True)
class Pin:
    node: int
    target: tuple
    kind: str = "via"


@dataclass(frozen=True)
class ConstraintSet:
    pins: Sequence[Pin] = field(default_factory=tuple)
    confidence: float = 1.0

    def __post_init__(self):
        pins = tuple(p if isinstance(p, Pin) else Pin(*p) for p in self.pins)
        pins = tuple(Pin(int(p.node), tuple(float(v) for v in np.atleast_1d(p.target)), p.kind)
                     for p in pins)
        nodes = [p.node for p in pins]
        if len(set(nodes)) != len(nodes):
            raise InvalidConstraints(f"node pinned more than once: {nodes}")
        for p in pins:
            if p.kind not in PIN_KINDS:
                raise InvalidConstraints(f"unknown pin kind {p.kind!r}")
        if not 0.0 < self.confidence <= 1.0:
            raise InvalidConstraints(f"confidence must lie in (0, 1], got {self.confidence}")
        object.__setattr__(self, "pins", pins)

    @classmethod
    def endpoints(cls, K, start=None, goal=None, confidence=1.0, vias=()):
        """Convenience constructor pinning node 0 and/or node ``K - 1``."""
        pins = []
        if start is not None:
            pins.append(Pin(0, start, "initial"))
        pins.extend(Pin(c, p, "via") for c, p in vias)
        if goal is not None:
            pins.append(Pin(K - 1, goal, "final"))
        return cls(pins, confidence)

    def without(self, nodes) -> "ConstraintSet":
        drop = set(nodes)
        return ConstraintSet([p for p in self.pins if p.node not in drop], self.confidence)

    def with_confidence(self, kappa) -> "ConstraintSet":
        return ConstraintSet(self.pins, kappa)

    @property
    def nodes(self) -> list:
        return [p.node for p in self.pins]

    def targets(self, dim) -> np.ndarray:
        if not self.pins:
            return np.zeros((0, dim))
        return np.array([p.target for p in self.pins], dtype=float).reshape(len(self.pins), dim)


class DualReport(NamedTuple):
    duals: np.ndarray
    value_unconstrained: float
    value_constrained: float
    kappa: float
    nodes: tuple = ()


def confidence_from_values(value_constrained, value_unconstrained) -> float:
    gap = max(value_constrained - value_unconstrained, 0.0)
    kappa = float(np.exp(-gap / max(value_unconstrained, ENERGY_FLOOR)))
    # stay inside (0, 1] when the exponential underflows
    return max(kappa, np.finfo(float).tiny)


def confidence(report: DualReport) -> float:
    return confidence_from_values(report.value_constrained, report.value_unconstrained)


def soft_weight(kappa: float) -> float:
    return kappa / (1.0 - kappa)


class FrozenProblem:
    """Fixed-assignment quadratic of a map, ready for repeated pinned solves.

    ``demos=None`` drops the data term and leaves only stretching/bending.
    """

    def __init__(self, map: ElasticMap, demos=None):
        self.map = map
        if demos is None:
            points = np.zeros((0, map.dim))
            asg = Assignment(np.zeros(0, dtype=int), np.zeros(0))
        else:
            points, w = pooled_data(demos, map.weighting)
            asg = Assignment(assign(map.nodes, points), w)
        self.A, self.B, self.c = quadratic_form(map, points, asg)
        self._unc = None

    @property
    def K(self):
        return self.A.shape[0]

    @property
    def dim(self):
        return self.B.shape[1]

    def value(self, X) -> float:
        X = np.asarray(X, dtype=float).reshape(self.K, self.dim)
        return float(np.sum(X * (self.A @ X)) - 2.0 * np.sum(self.B * X) + self.c)

    def unconstrained(self):
        if self._unc is None:
            try:
                X = SPDFactor(self.A).solve(self.B)
            except NotPositiveDefinite:
                # tension-only problems: any minimizer of a consistent singular system
                X = np.linalg.lstsq(self.A, self.B, rcond=None)[0]
            self._unc = (X, self.value(X))
        return self._unc

    def _check(self, cons):
        for p in cons.pins:
            if not 0 <= p.node < self.K:
                raise InvalidConstraints(f"pin node {p.node} outside [0, {self.K})")
            if len(p.target) != self.dim:
                raise InvalidConstraints(f"pin target {p.target} has wrong dimension")

    def solve_hard(self, cons: ConstraintSet):
        """Hard pins; returns nodes ``(K, d)`` and duals ``(m, d)``."""
        self._check(cons)
        m = len(cons.pins)
        C = np.zeros((m, self.K))
        C[np.arange(m), cons.nodes] = 1.0
        P = cons.targets(self.dim)
        X = np.empty((self.K, self.dim))
        nu = np.empty((m, self.dim))
        for k in range(self.dim):
            X[:, k], nu[:, k] = solve_kkt(2.0 * self.A, C, 2.0 * self.B[:, k], P[:, k])
        return X, nu

    def solve_soft(self, cons: ConstraintSet, weight: float):
        """Spring pins of stiffness ``weight``; duals are ``2 w (x_c - p_c)``."""
        self._check(cons)
        A = self.A.copy()
        B = self.B.copy()
        P = cons.targets(self.dim)
        for p, target in zip(cons.pins, P):
            A[p.node, p.node] += weight
            B[p.node] += weight * target
        X = SPDFactor(A).solve(B)
        nu = 2.0 * weight * (X[cons.nodes] - P)
        return X, nu

    def solve(self, cons: ConstraintSet):
        """Nodes and :class:`DualReport` under ``cons``."""
        X_unc, J_unc = self.unconstrained()
        if not cons.pins:
            X, nu = X_unc.copy(), np.zeros((0, self.dim))
        elif cons.confidence >= 1.0:
            X, nu = self.solve_hard(cons)
        else:
            X, nu = self.solve_soft(cons, soft_weight(cons.confidence))
        J = self.value(X)
        report = DualReport(nu, J_unc, J, confidence_from_values(J, J_unc), tuple(cons.nodes))
        return X, report


def _to_trajectory(X, n=None):
    traj = Trajectory.uniform(X)
    return traj if n is None or n == len(traj) else resample(traj, n)


def reproduce_constrained(map: ElasticMap, demos, cons: ConstraintSet, n: int = None):
    """Reproduction of ``map`` under ``cons`` plus its :class:`DualReport`.

    The returned trajectory is the node polyline on times ``[0, 1]``,
    resampled to ``n`` points when ``n`` is given.
    """
    X, report = FrozenProblem(map, demos).solve(cons)
    return _to_trajectory(X, n), report


class PruneResult(NamedTuple):
    constraints: ConstraintSet
    removed: list
    change: float


def prune(map: ElasticMap, demos, cons: ConstraintSet, threshold: float,
          iterative: bool = False) -> PruneResult:
    """Drop pins whose multiplier norm is small relative to the largest.

    A pin is removed when ``|nu_c| < threshold * max |nu|``; if every
    multiplier is numerically zero all pins go. ``change`` is the largest
    node displacement caused by re-solving without the removed pins.
    """
    prob = FrozenProblem(map, demos)
    hard = cons.with_confidence(1.0)
    X_full, _ = prob.solve_hard(hard)
    removed = []
    current = hard
    while current.pins and threshold > 0:
        _, nu = prob.solve_hard(current)
        norms = np.linalg.norm(nu, axis=1)
        top = norms.max()
        scale = settings.dual_atol * max(1.0, prob.unconstrained()[1])
        if top <= scale:
            drop = list(current.nodes)
        else:
            drop = [c for c, v in zip(current.nodes, norms) if v < threshold * top]
        if not drop:
            break
        removed.extend(drop)
        current = current.without(drop)
        if not iterative:
            break
    X_pruned = prob.solve_hard(current)[0] if current.pins else prob.unconstrained()[0]
    kept = ConstraintSet(current.pins, cons.confidence)
    return PruneResult(kept, removed, float(np.max(np.abs(X_pruned - X_full))))


class SweepEntry(NamedTuple):
    kappa: float
    trajectory: Trajectory
    achieved: float
    violation: float
    report: DualReport


def pin_violation(X, cons: ConstraintSet) -> float:
    if not cons.pins:
        return 0.0
    X = np.asarray(X)
    return float(np.max(np.linalg.norm(X[cons.nodes] - cons.targets(X.shape[1]), axis=1)))


def confidence_sweep(map: ElasticMap, demos, cons: ConstraintSet, kappas, n: int = None) -> list:
    """One reproduction per target confidence in ``kappas`` (ascending)."""
    kappas = [float(k) for k in kappas]
    if any(not 0 < k <= 1 for k in kappas):
        raise InvalidConstraints("confidence values must lie in (0, 1]")
    if any(b < a for a, b in zip(kappas, kappas[1:])):
        raise InvalidConstraints("confidence values must be ascending")
    prob = FrozenProblem(map, demos)
    out = []
    for k in kappas:
        c = cons.with_confidence(k)
        X, rep = prob.solve(c)
        out.append(SweepEntry(k, _to_trajectory(X, n), rep.kappa, pin_violation(X, c), rep))
    return out


__all__ = [
    "Pin", "ConstraintSet", "DualReport", "FrozenProblem", "PruneResult", "SweepEntry",
    "confidence", "confidence_from_values", "confidence_sweep", "pin_violation", "prune",
    "reproduce_constrained", "soft_weight",
]
