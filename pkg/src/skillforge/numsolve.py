"""SPD solves, equality-constrained QP (KKT) solves and eigenvalue checks.

Sign convention used throughout the package: the Lagrangian of

    min 0.5 x'Hx - b'x   subject to   Cx = p

is ``L = 0.5 x'Hx - b'x + nu'(Cx - p)``, so the optimal value ``J*(p)`` has
gradient ``dJ*/dp = -nu``.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np
from scipy.linalg import lapack

from .errors import DegenerateConstraints, NotPositiveDefinite


@dataclass
class NumericSettings:
    """Global tolerances. Mutate the module-level ``settings`` instance."""

    spd_residual: float = 1e-8
    kkt_stationarity: float = 1e-8
    kkt_feasibility: float = 1e-10
    symmetry_rtol: float = 1e-12
    # relative bandwidth below which the banded Cholesky path is used
    banded_fraction: float = 0.25
    hessian_margin: float = 1e-8
    dual_atol: float = 1e-9

    def snapshot(self) -> dict:
        return asdict(self)


settings = NumericSettings()


def _bandwidth(A):
    rows, cols = np.nonzero(A)
    if rows.size == 0:
        return 0
    return int(np.max(np.abs(rows - cols)))


def check_symmetric(A):
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    scale = max(np.max(np.abs(A)), 1.0) if A.size else 1.0
    if np.max(np.abs(A - A.T), initial=0.0) > settings.symmetry_rtol * scale:
        raise ValueError("matrix is not symmetric")
    return A


class SPDFactor:
    """Cholesky factor that can be reused for several right-hand sides.

    Uses LAPACK ``pbtrf`` on the band storage when the matrix is narrow
    relative to its order, ``potrf`` otherwise.
    """

    def __init__(self, A):
        A = check_symmetric(A)
        n = A.shape[0]
        self.n = n
        bw = _bandwidth(A)
        self.banded = n > 8 and bw < settings.banded_fraction * n
        if self.banded:
            ab = np.zeros((bw + 1, n))
            for k in range(bw + 1):
                ab[k, : n - k] = np.diagonal(A, -k)
            c, info = lapack.dpbtrf(ab, lower=1)
        else:
            c, info = lapack.dpotrf(A, lower=1, clean=1)
        if info > 0:
            raise NotPositiveDefinite(info - 1)
        if info < 0:
            raise ValueError(f"LAPACK argument error {info}")
        # pivots at rounding level mean the matrix is numerically singular
        pivots = c[0] if self.banded else np.diagonal(c)
        floor = max(n, 1) * np.finfo(float).eps * max(float(np.max(np.abs(np.diagonal(A)))), 1e-300)
        small = np.flatnonzero(pivots**2 <= floor)
        if small.size:
            raise NotPositiveDefinite(int(small[0]))
        self._c = c

    def solve(self, B):
        B = np.asarray(B, dtype=float)
        vec = B.ndim == 1
        rhs = B.reshape(self.n, -1)
        if self.banded:
            X, info = lapack.dpbtrs(self._c, rhs, lower=1)
        else:
            X, info = lapack.dpotrs(self._c, rhs, lower=1)
        if info != 0:
            raise ValueError(f"LAPACK argument error {info}")
        return X.reshape(-1) if vec else X


def solve_spd(A, B):
    """Solve ``A X = B`` for symmetric positive-definite ``A``.

    Raises
    ------
    NotPositiveDefinite
        If the Cholesky factorization meets a non-positive pivot; the
        exception's ``pivot`` attribute is the 0-based pivot index.
    """
    return SPDFactor(A).solve(B)


def _dependent_rows(C, tol=1e-10):
    kept, dependent = [], []
    for i in range(C.shape[0]):
        trial = C[kept + [i]]
        if np.linalg.matrix_rank(trial, tol=tol * max(1.0, np.abs(C).max())) < len(kept) + 1:
            dependent.append(i)
        else:
            kept.append(i)
    return dependent


def _schur_solve(H, C, b, p):
    fac = SPDFactor(H)
    y = fac.solve(b)
    if C.shape[0] == 0:
        return y, np.zeros(0)
    Z = fac.solve(C.T)
    S = C @ Z
    S = 0.5 * (S + S.T)
    try:
        nu = solve_spd(S, C @ y - p)
    except NotPositiveDefinite:
        raise DegenerateConstraints(_dependent_rows(C) or [C.shape[0] - 1]) from None
    x = y - Z @ nu
    return x, nu


def solve_kkt(H, C, b, p):
    """Equality-constrained QP by Schur-complement elimination.

    Minimizes ``0.5 x'Hx - b'x`` subject to ``Cx = p`` and returns the
    minimizer together with the multipliers ``nu`` (see module docstring for
    the sign convention).

    ``H`` only has to be positive definite on the null space of ``C``. When
    it is singular the problem is regularized with ``rho C'C``, which leaves
    both ``x`` and ``nu`` unchanged on the feasible set.
    """
    H = check_symmetric(H)
    b = np.asarray(b, dtype=float).reshape(-1)
    n = H.shape[0]
    C = np.asarray(C, dtype=float).reshape(-1, n)
    p = np.asarray(p, dtype=float).reshape(-1)
    if C.shape[0] != p.shape[0]:
        raise ValueError("C and p disagree on the number of constraints")
    if C.shape[0] > n:
        raise DegenerateConstraints(_dependent_rows(C))
    try:
        x, nu = _schur_solve(H, C, b, p)
    except NotPositiveDefinite:
        if C.shape[0] == 0:
            raise
        dep = _dependent_rows(C)
        if dep:
            raise DegenerateConstraints(dep) from None
        rho = max(1.0, float(np.max(np.abs(np.diag(H)))))
        x, nu = _schur_solve(H + rho * C.T @ C, C, b + rho * C.T @ p, p)
    # one step of iterative refinement on the feasibility residual
    if C.shape[0]:
        r = p - C @ x
        if np.max(np.abs(r)) > 0:
            x = x + C.T @ np.linalg.solve(C @ C.T, r)
    return x, nu


def kkt_residuals(H, C, b, p, x, nu):
    """Return ``(stationarity, feasibility)`` infinity-norm residuals."""
    H = np.asarray(H, dtype=float)
    C = np.asarray(C, dtype=float).reshape(-1, H.shape[0])
    stat = H @ x + C.T @ nu - b
    feas = C @ x - p
    return float(np.max(np.abs(stat), initial=0.0)), float(np.max(np.abs(feas), initial=0.0))


def qp_value(H, b, x):
    return float(0.5 * x @ H @ x - b @ x)


def min_eigenvalue(A) -> float:
    A = check_symmetric(A)
    return float(np.linalg.eigvalsh(A)[0])
