"""Reproduction from successful and failed demonstrations.

Both label subsets are summarized per time step by a mean and a regularized
inverse covariance. A reproduction ``X`` (``T x d``) minimizes

    J(X) = sum_t (x_t - ms_t)' Ws_t (x_t - ms_t)
           - beta * sum_t (x_t - mf_t)' Wf_t (x_t - mf_t)
           + lam * sum |x_{t+1} - x_t|^2 + mu * sum |x_{t-1} - 2 x_t + x_{t+1}|^2

optionally with hard pins. The failure term is concave, so the assembled
Hessian is checked and ``beta`` is reduced by bisection until it is positive
definite with margin ``settings.hessian_margin``.

Without successful demonstrations the attraction term is replaced by a trust
region ``rho * sum |x_t - ref_t|^2`` around a reference path.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .elastic_map import edge_operator, rib_operator
from .errors import InvalidArgument, TrustRegionTooWeak
from .numsolve import min_eigenvalue, settings, solve_kkt
from .trajectory import FAILURE, SUCCESS, DemoSet, Trajectory, resample

log = logging.getLogger(__name__)

DEFAULT_EPS_REG = 1e-3
BISECTION_STEPS = 60


@dataclass(frozen=True, eq=False)
class StatModel:
    times: np.ndarray
    mu_s: Optional[np.ndarray]
    W_s: Optional[np.ndarray]
    mu_f: Optional[np.ndarray]
    W_f: Optional[np.ndarray]
    eps_reg: float
    cov_s: Optional[np.ndarray] = None
    cov_f: Optional[np.ndarray] = None

    @property
    def T(self) -> int:
        return len(self.times)

    @property
    def dim(self) -> int:
        m = self.mu_s if self.mu_s is not None else self.mu_f
        return m.shape[1]


def _stats(trajs, eps_reg):
    P = np.stack([d.points for d in trajs])  # (N, T, d)
    mean = P.mean(axis=0)
    dev = P - mean
    cov = np.einsum("ntk,ntl->tkl", dev, dev) / len(trajs)
    d = P.shape[2]
    W = np.linalg.inv(cov + eps_reg * np.eye(d))
    W = 0.5 * (W + np.swapaxes(W, 1, 2))
    return mean, cov, W


def encode(demos: DemoSet, eps_reg: float = DEFAULT_EPS_REG) -> StatModel:
    """Per-step mean and inverse regularized covariance of each label subset.

    Covariances use the population (divide by ``N``) convention.
    """
    if eps_reg <= 0:
        raise InvalidArgument("eps_reg must be positive", module="failure_aware")
    if demos.common_len is None:
        raise InvalidArgument("demonstrations must be aligned first", module="failure_aware")
    out = {}
    for label in (SUCCESS, FAILURE):
        sub = demos.subset(label)
        out[label] = _stats(sub, eps_reg) if sub else (None, None, None)
    ms, cs, Ws = out[SUCCESS]
    mf, cf, Wf = out[FAILURE]
    return StatModel(np.array(demos.demos[0].times), ms, Ws, mf, Wf, float(eps_reg), cs, cf)


def _smooth(smooth):
    if smooth is None:
        return 0.0, 0.0
    if isinstance(smooth, dict):
        return float(smooth.get("lam", 0.0)), float(smooth.get("mu", 0.0))
    lam, mu = smooth
    return float(lam), float(mu)


def _tension(T, d, lam, mu):
    S = np.zeros((T, T))
    if lam and T >= 2:
        E = edge_operator(T)
        S += lam * E.T @ E
    if mu and T >= 3:
        R = rib_operator(T)
        S += mu * R.T @ R
    return np.kron(S, np.eye(d))


def _blockdiag(blocks):
    T, d, _ = blocks.shape
    M = np.zeros((T * d, T * d))
    for t in range(T):
        M[t * d:(t + 1) * d, t * d:(t + 1) * d] = blocks[t]
    return M


def assemble(model: StatModel, beta: float, smooth=None, rho: float = None, reference=None):
    """Quadratic ``J(x) = 0.5 x'Hx - b'x + c`` over ``x = X.ravel()``.

    With ``rho`` given the success term is replaced by the trust region
    around ``reference`` (a ``(T, d)`` array).
    """
    T, d = model.T, model.dim
    lam, mu = _smooth(smooth)
    blocks = np.zeros((T, d, d))
    lin = np.zeros((T, d))
    c = 0.0
    if rho is None:
        blocks += model.W_s
        lin += np.einsum("tkl,tl->tk", model.W_s, model.mu_s)
        c += float(np.einsum("tk,tk->", model.mu_s, lin))
    else:
        ref = np.asarray(reference, dtype=float).reshape(T, d)
        blocks += rho * np.eye(d)
        lin += rho * ref
        c += rho * float(np.sum(ref**2))
    if beta != 0:
        f_lin = np.einsum("tkl,tl->tk", model.W_f, model.mu_f)
        blocks -= beta * model.W_f
        lin -= beta * f_lin
        c -= beta * float(np.einsum("tk,tk->", model.mu_f, f_lin))
    H = 2.0 * (_blockdiag(blocks) + _tension(T, d, lam, mu))
    return H, 2.0 * lin.reshape(-1), c


def objective(model: StatModel, X, beta: float, smooth=None, rho=None, reference=None) -> float:
    """``J`` evaluated term by term (independent of :func:`assemble`)."""
    X = np.asarray(X, dtype=float).reshape(model.T, model.dim)
    lam, mu = _smooth(smooth)
    J = 0.0
    if rho is None:
        r = X - model.mu_s
        J += float(np.einsum("tk,tkl,tl->", r, model.W_s, r))
    else:
        J += rho * float(np.sum((X - np.asarray(reference).reshape(X.shape)) ** 2))
    if beta != 0:
        r = X - model.mu_f
        J -= beta * float(np.einsum("tk,tkl,tl->", r, model.W_f, r))
    if len(X) >= 2:
        J += lam * float(np.sum(np.diff(X, axis=0) ** 2))
    if len(X) >= 3:
        J += mu * float(np.sum(np.diff(X, n=2, axis=0) ** 2))
    return J


def objective_gradient(model: StatModel, X, beta: float, smooth=None, rho=None, reference=None):
    H, b, _ = assemble(model, beta, smooth, rho, reference)
    x = np.asarray(X, dtype=float).reshape(-1)
    return (H @ x - b).reshape(model.T, model.dim)


def repulsion(model: StatModel, X) -> float:
    """``sum_t (x_t - mf_t)' Wf_t (x_t - mf_t)``."""
    r = np.asarray(X).reshape(model.T, model.dim) - model.mu_f
    return float(np.einsum("tk,tkl,tl->", r, model.W_f, r))


def _pin_system(model: StatModel, cons):
    T, d = model.T, model.dim
    if cons is None or not cons.pins:
        return np.zeros((0, T * d)), np.zeros(0)
    rows, vals = [], []
    for pin in cons.pins:
        if not 0 <= pin.node < T:
            raise InvalidArgument(f"pin step {pin.node} outside [0, {T})", module="failure_aware")
        for k in range(d):
            r = np.zeros(T * d)
            r[pin.node * d + k] = 1.0
            rows.append(r)
            vals.append(pin.target[k])
    return np.array(rows), np.array(vals)


def _solve(model, H, b, cons):
    gamma = settings.hessian_margin
    lo = min_eigenvalue(H)
    assert lo >= gamma, f"Hessian guard violated: min eigenvalue {lo}"
    C, p = _pin_system(model, cons)
    x, _ = solve_kkt(H, C, b, p)
    return x.reshape(model.T, model.dim)


def repro_points(model: StatModel, beta: float, smooth=None, cons=None):
    """Array form of :func:`solve_repro`; also valid for ``T == 1``."""
    if model.mu_s is None:
        raise InvalidArgument("no successful demonstrations; use solve_failed_only",
                              module="failure_aware")
    if not np.isfinite(beta) or beta < 0:
        raise InvalidArgument("beta must be finite and non-negative", module="failure_aware")
    if model.mu_f is None:
        beta = 0.0
    gamma = settings.hessian_margin
    H, b, _ = assemble(model, beta, smooth)
    if beta > 0 and min_eigenvalue(H) < gamma:
        lo, hi = 0.0, float(beta)
        for _ in range(BISECTION_STEPS):
            mid = 0.5 * (lo + hi)
            if min_eigenvalue(assemble(model, mid, smooth)[0]) >= gamma:
                lo = mid
            else:
                hi = mid
        log.info("convexity guard reduced beta from %g to %g", beta, lo)
        beta = lo
        H, b, _ = assemble(model, beta, smooth)
    return _solve(model, H, b, cons), beta


def solve_repro(model: StatModel, beta: float, smooth=None, cons=None):
    """Reproduction balancing attraction to successes and repulsion from failures.

    Returns the trajectory and the ``beta`` actually used after the
    convexity guard.
    """
    X, used = repro_points(model, beta, smooth, cons)
    return Trajectory(X, model.times), used


def min_trust_region(model: StatModel, beta: float) -> float:
    """Smallest ``rho`` for which every ``rho I - beta Wf_t`` is PSD."""
    return float(beta * max(np.linalg.eigvalsh(model.W_f)[:, -1].max(), 0.0))


def default_reference(model: StatModel, cons=None) -> np.ndarray:
    """Straight segment between the pinned endpoints (or the failure mean's)."""
    start, goal = model.mu_f[0], model.mu_f[-1]
    if cons is not None:
        for pin in cons.pins:
            if pin.node == 0:
                start = np.asarray(pin.target)
            elif pin.node == model.T - 1:
                goal = np.asarray(pin.target)
    s = np.linspace(0.0, 1.0, model.T)[:, None]
    return (1 - s) * start + s * goal


def solve_failed_only(model: StatModel, rho: float, reference=None, beta: float = 1.0,
                      smooth=None, cons=None) -> Trajectory:
    """Reproduction from failed demonstrations only, kept near ``reference``.

    ``reference`` defaults to the straight segment between the pinned
    endpoints.

    Raises
    ------
    TrustRegionTooWeak
        When ``rho`` does not dominate ``beta * Wf_t`` at every step.
    """
    X = failed_only_points(model, rho, reference, beta, smooth, cons)
    return Trajectory(X, model.times)


def failed_only_points(model: StatModel, rho: float, reference=None, beta: float = 1.0,
                       smooth=None, cons=None) -> np.ndarray:
    if model.mu_f is None:
        raise InvalidArgument("no failed demonstrations", module="failure_aware")
    if rho <= 0:
        raise InvalidArgument("rho must be positive", module="failure_aware")
    need = min_trust_region(model, beta)
    if rho <= need:
        raise TrustRegionTooWeak(rho, need)
    if reference is None:
        ref = default_reference(model, cons)
    elif isinstance(reference, Trajectory):
        ref = (reference if len(reference) == model.T else resample(reference, model.T)).points
    else:
        ref = np.asarray(reference, dtype=float).reshape(model.T, model.dim)
    H, b, _ = assemble(model, beta, smooth, rho=rho, reference=ref)
    if min_eigenvalue(H) < settings.hessian_margin:
        raise TrustRegionTooWeak(rho, need)
    return _solve(model, H, b, cons)
