"""Minimum-norm quadratic program over a handful of linear inequalities.

The per-tick filter solves

    min_v ||v||^2   s.t.   a_i . v <= b_i,  i = 1..k

with k <= 2 rows in R^2, so the active set is enumerated exhaustively:
subsets of rows ordered by cardinality then lexicographically, each solved
as an equality-constrained least-norm problem, and the first candidate whose
KKT conditions certify (primal feasibility on every row, nonnegative
multipliers on the active rows) is returned.  With G = A_S A_S^T,

    v* = A_S^T G^{-1} b_S,    lambda_S = -2 G^{-1} b_S,

which satisfies stationarity 2 v* + A_S^T lambda_S = 0 by construction.

Rows with a ~ 0 carry no direction: they are vacuous when b >= 0 and
certify infeasibility when b < 0.
"""

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .barrier import Array, ConstraintRow

# Primal residuals and duals are accepted down to -RESIDUAL_TOL so that
# boundary-active rows survive roundoff.
RESIDUAL_TOL = 1e-9
DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Farkas evidence: y >= 0 with y^T A = 0 and y^T b < 0.

    rows holds the indices with nonzero weight; a single degenerate row
    (a ~ 0, b < 0) certifies on its own with weight 1.
    """

    rows: Tuple[int, ...]
    weights: Tuple[float, ...]


@dataclass(frozen=True)
class QpSolution:
    v: Array
    status: str  # "optimal" | "infeasible"
    active: Tuple[int, ...]
    duals: Array  # one multiplier per input row, zero off the active set
    certificate: Optional[InfeasibilityCertificate] = None

    def objective(self) -> float:
        return float(self.v @ self.v)


def _validate(rows: Sequence[ConstraintRow]) -> int:
    if not rows:
        return 0
    m = rows[0].a.shape[0]
    for r in rows:
        if r.a.shape != (m,):
            raise ValueError("constraint rows must share the input dimension")
    return m


def solve_min_norm(rows: Sequence[ConstraintRow], residual_tol: float = RESIDUAL_TOL) -> QpSolution:
    """Solve min ||v||^2 s.t. a_i . v <= b_i by active-set enumeration.

    Returns status "optimal" with the certified active set and multipliers,
    or status "infeasible" with a Farkas certificate and v = 0.  The
    enumeration order (cardinality, then lexicographic row indices) makes
    ties deterministic.
    """
    m = _validate(rows)
    k = len(rows)
    if k == 0:
        return QpSolution(v=np.zeros(0), status="optimal", active=(), duals=np.zeros(0))

    duals_out = np.zeros(k)

    # Degenerate rows constrain nothing: vacuous if b >= -tol, else the row
    # alone is a Farkas certificate (y = e_i gives y^T A ~ 0, y^T b < 0).
    live: list[int] = []
    for i, r in enumerate(rows):
        if np.linalg.norm(r.a) < DEGENERATE_TOL:
            if r.b < -residual_tol:
                cert = InfeasibilityCertificate(rows=(i,), weights=(1.0,))
                return QpSolution(v=np.zeros(m), status="infeasible", active=(),
                                  duals=duals_out, certificate=cert)
        else:
            live.append(i)

    A = np.array([rows[i].a for i in live]) if live else np.zeros((0, m))
    b = np.array([rows[i].b for i in live])

    def feasible(v: Array) -> bool:
        return bool(np.all(b - A @ v >= -residual_tol))

    # Unconstrained minimizer first (empty active set), then grow.
    for size in range(0, min(len(live), m) + 1):
        for subset in itertools.combinations(range(len(live)), size):
            if size == 0:
                v = np.zeros(m)
                lam = np.zeros(0)
            else:
                A_S = A[list(subset)]
                b_S = b[list(subset)]
                G = A_S @ A_S.T
                # Rank-deficient subsets (parallel rows) carry no candidate.
                scale = float(np.prod(np.diag(G)))
                if abs(float(np.linalg.det(G))) < 1e-12 * max(scale, 1e-300):
                    continue
                Gb = np.linalg.solve(G, b_S)
                v = A_S.T @ Gb
                lam = -2.0 * Gb
            if np.any(lam < -residual_tol):
                continue
            if not feasible(v):
                continue
            duals_out[:] = 0.0
            for j, s in enumerate(subset):
                duals_out[live[s]] = max(lam[j], 0.0)
            active = tuple(live[s] for s in subset)
            return QpSolution(v=v, status="optimal", active=active, duals=duals_out.copy())

    cert = _farkas(rows, live, A, b)
    return QpSolution(v=np.zeros(m), status="infeasible", active=(),
                      duals=duals_out, certificate=cert)


def _farkas(rows: Sequence[ConstraintRow], live: list, A: Array, b: Array) -> Optional[InfeasibilityCertificate]:
    """Look for an antiparallel pair certifying an empty feasible set.

    If a_j = -c a_i with c > 0 and b_i + c b_j < 0, then y = (1, c) on rows
    (i, j) satisfies y^T A = 0, y^T b < 0.
    """
    for p, q in itertools.combinations(range(len(A)), 2):
        ni, nj = np.linalg.norm(A[p]), np.linalg.norm(A[q])
        c = ni / nj
        if np.linalg.norm(A[p] + c * A[q]) < 1e-7 * ni and b[p] + c * b[q] < 0:
            return InfeasibilityCertificate(rows=(live[p], live[q]), weights=(1.0, float(c)))
    return None


def brute_force_oracle(rows: Sequence[ConstraintRow], lo: float = -5.0, hi: float = 5.0,
                       n: int = 401) -> Tuple[Optional[Array], bool]:
    """Grid search for the min-norm feasible point on [lo, hi]^2.

    Returns (v_grid, on_boundary): the feasible grid cell of least norm
    (ties broken toward the lexicographically smallest index pair), or
    (None, False) when no cell is feasible.  on_boundary flags a minimizer
    on the box edge, where the box—not the rows—may bind.
    """
    g = np.linspace(lo, hi, n)
    V1, V2 = np.meshgrid(g, g, indexing="ij")
    mask = np.ones_like(V1, dtype=bool)
    for r in rows:
        mask &= r.a[0] * V1 + r.a[1] * V2 <= r.b
    if not mask.any():
        return None, False
    norm2 = np.where(mask, V1 * V1 + V2 * V2, np.inf)
    idx = np.unravel_index(np.argmin(norm2), norm2.shape)
    v = np.array([g[idx[0]], g[idx[1]]])
    edge = idx[0] in (0, n - 1) or idx[1] in (0, n - 1)
    return v, edge
