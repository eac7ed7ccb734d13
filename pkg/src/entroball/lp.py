"""Dense two-phase tableau simplex for ``max c.x  s.t.  A x <= b`` with free ``x``.

Bland's rule (lowest eligible index for both entering and leaving variables)
rules out cycling. Problems here are tiny, so the tableau is kept dense.
"""

from __future__ import annotations

import numpy as np


class LPError(Exception):
    pass


class InfeasibleLP(LPError):
    "The constraints admit no point."


class UnboundedLP(LPError):
    "The objective is unbounded above on the feasible set."


_PIVOT_EPS = 1e-11
_FEAS_EPS = 1e-9


def _pivot(T: np.ndarray, basis: list, row: int, col: int):
    T[row] /= T[row, col]
    col_vals = T[:, col].copy()
    col_vals[row] = 0.0
    T -= np.outer(col_vals, T[row])
    T[np.abs(T) < 1e-15] = 0.0
    basis[row] = col


def _run_simplex(T: np.ndarray, basis: list, n_allowed: int, max_pivots: int):
    """Maximize with the last row holding reduced costs; columns >= n_allowed never enter."""
    m = T.shape[0] - 1
    for _ in range(max_pivots):
        obj = T[-1, :n_allowed]
        eligible = np.flatnonzero(obj > _PIVOT_EPS)
        if eligible.size == 0:
            return
        col = int(eligible[0])
        column = T[:m, col]
        rows = np.flatnonzero(column > _PIVOT_EPS)
        if rows.size == 0:
            raise UnboundedLP("objective is unbounded")
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, basis, row, col)
    raise LPError("simplex pivot limit reached")


def lp_solve(c, A, b, max_pivots: int = 50_000):
    """Solve ``max c.x`` subject to ``A x <= b`` with ``x`` unrestricted in sign.

    Returns
    -------
    x : ndarray
        An optimal vertex.
    value : float
        ``c.x`` at that vertex.

    Raises
    ------
    InfeasibleLP, UnboundedLP
    """
    c = np.asarray(c, dtype=float).ravel()
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    m, n = A.shape
    if c.shape != (n,) or b.shape != (m,):
        raise ValueError(f"inconsistent shapes: c {c.shape}, A {A.shape}, b {b.shape}")

    # columns: x+ (n), x- (n), slacks (m), artificials (one per negative rhs)
    neg = np.flatnonzero(b < 0)
    n_core = 2 * n + m
    n_cols = n_core + neg.size
    T = np.zeros((m + 1, n_cols + 1))
    T[:m, :n] = A
    T[:m, n:2 * n] = -A
    T[:m, 2 * n:n_core] = np.eye(m)
    T[:m, -1] = b
    T[neg, :n_core] *= -1.0
    T[neg, -1] *= -1.0
    basis = [2 * n + i for i in range(m)]
    for k, i in enumerate(neg):
        T[i, n_core + k] = 1.0
        basis[i] = n_core + k

    if neg.size:
        # phase 1: maximize -sum(artificials)
        T[-1, :] = 0.0
        T[-1, n_core:n_cols] = -1.0
        for i in neg:
            T[-1] += T[i]
        _run_simplex(T, basis, n_cols, max_pivots)
        if -T[-1, -1] < -_FEAS_EPS * max(1.0, np.abs(b).max()):
            raise InfeasibleLP("constraints are infeasible")
        # drive zero-level artificials out of the basis
        keep = np.ones(m + 1, dtype=bool)
        for i in range(m):
            if basis[i] >= n_core:
                candidates = np.flatnonzero(np.abs(T[i, :n_core]) > _PIVOT_EPS)
                if candidates.size:
                    _pivot(T, basis, i, int(candidates[0]))
                else:
                    keep[i] = False
        rows = np.flatnonzero(keep[:m])
        basis = [basis[i] for i in rows]
        T = np.vstack([T[rows][:, list(range(n_core)) + [n_cols]], np.zeros((1, n_core + 1))])
    # phase 2
    cost = np.concatenate([c, -c, np.zeros(m)])
    T[-1, :n_core] = cost
    T[-1, -1] = 0.0
    for i, j in enumerate(basis):
        T[-1] -= cost[j] * T[i]
    _run_simplex(T, basis, n_core, max_pivots)

    y = np.zeros(n_core)
    for i, j in enumerate(basis):
        y[j] = T[i, -1]
    x = y[:n] - y[n:2 * n]
    return x, float(c @ x)
