"""Alternative skill representations: discrete DMPs and Laplacian editing.

Both operate on each coordinate independently.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import solve_banded

from .errors import InvalidArgument, InvalidTrajectory
from .trajectory import Trajectory, resample

DEFAULT_STEPS = 200


@dataclass(frozen=True, eq=False)
class DmpModel:
    """Discrete dynamic movement primitive, one transformation system per axis.

    ``tau * dz = alpha_z (beta_z (g - y) - z) + f(x)``, ``tau * dy = z``,
    ``tau * dx = -alpha_x x`` with a Gaussian-basis forcing term scaled by
    ``x (g - y0)``. Axes whose demonstrated displacement is (numerically) zero
    are learned without the displacement factor.
    """

    weights: np.ndarray   # (d, n_basis)
    centers: np.ndarray
    widths: np.ndarray
    start: np.ndarray
    goal: np.ndarray
    tau: float
    alpha_z: float = 25.0
    beta_z: float = 25.0 / 4.0
    alpha_x: float = 4.0
    scaled: np.ndarray = None  # per axis: forcing scaled by (g - y0)
    n_steps: int = DEFAULT_STEPS
    v0: np.ndarray = None  # demonstrated initial velocity

    def __post_init__(self):
        if not (self.alpha_z > 0 and self.alpha_x > 0 and self.tau > 0):
            raise InvalidArgument("DMP gains and tau must be positive", module="baselines")
        if not np.isclose(self.beta_z, self.alpha_z / 4.0):
            raise InvalidArgument("beta_z must equal alpha_z / 4", module="baselines")
        if len(self.centers) < 2:
            raise InvalidArgument("n_basis must be at least 2", module="baselines")

    @property
    def n_basis(self) -> int:
        return len(self.centers)

    @property
    def dim(self) -> int:
        return len(self.start)

    def psi(self, x):
        x = np.atleast_1d(x)
        return np.exp(-self.widths * (x[:, None] - self.centers) ** 2)

    def features(self, x):
        psi = self.psi(x)
        return psi / psi.sum(axis=1, keepdims=True) * np.atleast_1d(x)[:, None]

    def amplitude(self, start, goal):
        span = np.where(self.scaled, self.goal - self.start, 1.0)
        new = np.where(self.scaled, np.asarray(goal) - np.asarray(start), 1.0)
        return new / span

    def forcing(self, x, start, goal):
        return self.features(x) @ self.weights.T * self.amplitude(start, goal)


def _basis(n_basis, alpha_x):
    centers = np.exp(-alpha_x * np.linspace(0.0, 1.0, n_basis))
    widths = np.empty(n_basis)
    widths[:-1] = 1.0 / np.diff(centers) ** 2
    widths[-1] = widths[-2]
    return centers, widths


def dmp_train(demo: Trajectory, n_basis: int = 30, alpha_z: float = 25.0,
              alpha_x: float = 4.0, n_steps: int = None) -> DmpModel:
    """Fit the forcing term by least squares on finite-difference accelerations.

    The demonstration is resampled to ``n_steps`` uniform samples (default
    ``max(200, len(demo))``) and the accelerations are taken from the same
    difference scheme the rollout integrates, so a perfectly represented
    forcing term reproduces the samples exactly.
    """
    if len(demo) < 3:
        raise InvalidTrajectory("DMP training needs at least 3 samples")
    if demo.duration <= 0:
        raise InvalidTrajectory("demonstration has zero duration")
    if n_basis < 2:
        raise InvalidArgument("n_basis must be at least 2", module="baselines")
    n_steps = max(DEFAULT_STEPS, len(demo)) if n_steps is None else int(n_steps)
    demo = resample(demo, n_steps)
    tau = demo.duration
    dt = tau / (n_steps - 1)
    y = demo.points
    y0, g = y[0], y[-1]
    beta_z = alpha_z / 4.0
    # z_i such that y_{i+1} = y_i + dt z_{i+1} / tau
    z = np.empty_like(y)
    z[1:] = tau * np.diff(y, axis=0) / dt
    z[0] = z[1]
    f_target = tau * np.diff(z, axis=0) / dt - alpha_z * (beta_z * (g - y[:-1]) - z[:-1])
    x = np.exp(-alpha_x * np.arange(n_steps - 1) * dt / tau)
    centers, widths = _basis(n_basis, alpha_x)
    span = np.abs(g - y0)
    scale = np.max(np.abs(y - y0), axis=0)
    scaled = span > 1e-8 * np.maximum(scale, 1.0)
    model = DmpModel(np.zeros((demo.dim, n_basis)), centers, widths, y0.copy(), g.copy(),
                     float(tau), alpha_z, beta_z, alpha_x, scaled, n_steps, z[0] / tau)
    # weights are stored for the demonstrated amplitude
    weights = np.linalg.lstsq(model.features(x), f_target, rcond=None)[0].T
    return replace(model, weights=weights)


def dmp_reproduce(model: DmpModel, new_start=None, new_goal=None, n: int = None) -> Trajectory:
    """Euler rollout from ``new_start`` toward ``new_goal`` over ``tau``.

    The result has ``n`` samples (default ``model.n_steps``) with
    ``dt = tau / (n - 1)``.
    """
    n = model.n_steps if n is None else int(n)
    if n < 2:
        raise InvalidArgument("dmp_reproduce needs n >= 2", module="baselines")
    y0 = model.start if new_start is None else np.asarray(new_start, dtype=float)
    g = model.goal if new_goal is None else np.asarray(new_goal, dtype=float)
    tau = model.tau
    dt = tau / (n - 1)
    y = y0.astype(float).copy()
    v0 = np.zeros(model.dim) if model.v0 is None else model.v0
    z = tau * v0 * model.amplitude(y0, g)
    # the canonical phase has a closed form; only the transformation system is stepped
    phase = np.exp(-model.alpha_x * np.arange(n) * dt / tau)
    f_all = model.forcing(phase, y0, g)
    out = np.empty((n, model.dim))
    out[0] = y
    for i in range(1, n):
        dz = (model.alpha_z * (model.beta_z * (g - y) - z) + f_all[i - 1]) / tau
        z = z + dz * dt
        # semi-implicit Euler: position update uses the new velocity
        y = y + z / tau * dt
        out[i] = y
    return Trajectory(out, np.linspace(0.0, tau, n))


def laplacian_operator(n: int) -> np.ndarray:
    """``(n, n)`` second-difference matrix with identity boundary rows."""
    if n < 3:
        raise InvalidArgument("Laplacian editing needs n >= 3", module="baselines")
    L = np.zeros((n, n))
    L[0, 0] = L[-1, -1] = 1.0
    i = np.arange(1, n - 1)
    L[i, i - 1] = 1.0
    L[i, i] = -2.0
    L[i, i + 1] = 1.0
    return L


@dataclass(frozen=True, eq=False)
class LteModel:
    demo: Trajectory
    L: np.ndarray
    delta: np.ndarray

    @property
    def n(self) -> int:
        return len(self.demo)


def lte_train(demo: Trajectory, n: int = None) -> LteModel:
    """Laplacian coordinates of ``demo`` (resampled to ``n`` if given)."""
    if n is not None and n != len(demo):
        demo = resample(demo, n)
    L = laplacian_operator(len(demo))
    return LteModel(demo, L, L @ demo.points)


def lte_reproduce(model: LteModel, new_start=None, new_goal=None, n: int = None) -> Trajectory:
    """Solve ``L X = delta`` with the boundary rows set to the new endpoints.

    The system is solved for the displacement from the demonstration, which
    is the same square system but keeps the unchanged-endpoint case exact.
    """
    if n is not None and n != model.n:
        model = lte_train(model.demo, n)
    demo = model.demo.points
    start = demo[0] if new_start is None else np.asarray(new_start, dtype=float)
    goal = demo[-1] if new_goal is None else np.asarray(new_goal, dtype=float)
    rhs = np.zeros_like(demo)
    rhs[0] = start - demo[0]
    rhs[-1] = goal - demo[-1]
    N = model.n
    ab = np.zeros((3, N))
    ab[0, 1:] = np.diagonal(model.L, 1)
    ab[1] = np.diagonal(model.L)
    ab[2, :-1] = np.diagonal(model.L, -1)
    shift = solve_banded((1, 1), ab, rhs)
    return Trajectory(demo + shift, model.demo.times)
