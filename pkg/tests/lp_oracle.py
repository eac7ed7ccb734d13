"""Vertex-enumeration oracle for tiny LPs ``max c.x  s.t.  A x <= b``."""

import itertools

import numpy as np

EPS = 1e-9


def vertices(A, b):
    m, n = A.shape
    out = []
    for rows in itertools.combinations(range(m), n):
        sub = A[list(rows)]
        if abs(np.linalg.det(sub)) < 1e-10:
            continue
        x = np.linalg.solve(sub, b[list(rows)])
        if np.all(A @ x <= b + EPS):
            out.append(x)
    return out


def recession_improves(A, c):
    """Whether some direction ``d`` with ``A d <= 0`` has ``c.d > 0``."""
    n = A.shape[1]
    box = np.vstack([A, np.eye(n), -np.eye(n)])
    rhs = np.concatenate([np.zeros(len(A)), np.ones(n), np.ones(n)])
    return max(float(c @ v) for v in vertices(box, rhs)) > EPS


def solve(c, A, b):
    """Return ``("optimal", value)``, ``("infeasible", None)`` or ``("unbounded", None)``.

    Assumes ``A`` has full column rank, so a nonempty feasible set has a vertex.
    """
    verts = vertices(A, b)
    if not verts:
        return "infeasible", None
    if recession_improves(A, c):
        return "unbounded", None
    return "optimal", max(float(c @ v) for v in verts)
