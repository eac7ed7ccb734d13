"""Cutting-plane search for the weights of the least cross-entropy density.

``Gamma(lam)`` (the least cross-entropy under the single constraint
``E_q[phi_lambda] <= delta``) is quasi-concave with a unique maximizer. At any
``lam`` the vector ``g_i = 1/N - mass_i`` of the single-constraint optimum
over the weighted regions gives a halfspace ``<g, lam' - lam> >= 0`` that
keeps every maximizer. Starting from the box ``|lam_i| <= diam(K)``, each
iteration queries the Chebyshev center of the current polytope and adds the
cut it produces.

Zero-sum weights are handled through coordinates in a fixed orthonormal
basis of that subspace, so the Chebyshev-center LP has no equality rows and
the inscribed radius is the Euclidean radius in weight space.

Two refinements keep the iteration count low. Every region carries mass
``1/N`` at the maximizer, so it is nonempty and ``lam_j - lam_i <= d(x_i, x_j)``
holds there; these pairwise rows tighten the starting box. When the ball
constraint is slack at a center (``v = 0``, so ``Gamma = 0``), concavity of
``E_p[phi_lambda]`` lets the cut move deeper: every ``lam'`` with
``<g, lam' - lam> < delta - E_p[phi_lambda]`` also has ``Gamma = 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .domain import EmpiricalMeasure, Metric, PriorModel, SampleBatch
from .entropy import (
    DualPair,
    EntropySolution,
    RatioFn,
    _solve_from_phi,
    cross_entropy,
    default_tol,
)
from .lp import InfeasibleLP, lp_solve
from .transport import StopRule, TransportSolution, maximize_psi
from .voronoi import WeightVector, batch_phi_assign, masses_from_assignment

log = logging.getLogger(__name__)


class InfeasiblePolytope(Exception):
    """The localization polytope became empty."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


def _embedding(N: int) -> np.ndarray:
    # lam = U @ theta, columns of U an orthonormal basis of the zero-sum subspace
    B = np.vstack([np.eye(N - 1), -np.ones((1, N - 1))])
    U, _ = np.linalg.qr(B)
    return U


@dataclass
class CutPolytope:
    """Halfspaces ``normals[j] . lam <= offsets[j]`` inside the zero-sum subspace."""

    N: int
    normals: list = field(default_factory=list)
    offsets: list = field(default_factory=list)

    @classmethod
    def box(cls, N: int, bound: float) -> "CutPolytope":
        poly = cls(N)
        for i in range(N):
            e = np.zeros(N)
            e[i] = 1.0
            poly.add(e, bound)
            poly.add(-e, bound)
        return poly

    def add_pairwise(self, dist: np.ndarray):
        """Add ``lam_j - lam_i <= dist[i, j]`` for every ordered pair."""
        for i in range(self.N):
            for j in range(self.N):
                if i != j:
                    a = np.zeros(self.N)
                    a[j], a[i] = 1.0, -1.0
                    self.add(a, dist[i, j])

    def add(self, normal, offset: float):
        normal = np.asarray(normal, dtype=float)
        if normal.shape != (self.N,):
            raise ValueError("normal has the wrong length")
        self.normals.append(normal)
        self.offsets.append(float(offset))

    def add_cut(self, g, center, depth: float = 0.0):
        """Keep ``{lam : <g, lam - center> >= depth}``."""
        g = np.asarray(g, dtype=float)
        self.add(-g, -float(g @ np.asarray(center, dtype=float)) - depth)

    def relaxed(self, eps: float) -> "CutPolytope":
        return CutPolytope(self.N, list(self.normals), [b + eps for b in self.offsets])

    def theta_form(self):
        B = _embedding(self.N)
        A = np.array(self.normals) @ B
        return A, np.array(self.offsets)

    def contains(self, lam, slack: float = 1e-9) -> bool:
        lam = np.asarray(lam, dtype=float)
        return bool(np.all(np.array(self.normals) @ lam <= np.array(self.offsets) + slack))


@dataclass(frozen=True)
class CutRecord:
    k: int
    center: WeightVector
    g: np.ndarray
    chebyshev_radius: float
    gamma_estimate: float
    dual: DualPair
    masses: np.ndarray
    depth: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda": self.center.tolist(),
            "radius": self.chebyshev_radius,
            "gamma": self.gamma_estimate,
            "g": self.g.tolist(),
            "u": self.dual.u,
            "v": self.dual.v,
            "depth": self.depth,
        }


def chebyshev_center(poly: CutPolytope):
    """Center and radius of the largest ball inside ``poly``.

    Solves ``max r  s.t.  a_j . theta + r ||a_j|| <= b_j,  r >= 0`` over
    orthonormal coordinates of the zero-sum subspace. Raises :class:`InfeasiblePolytope` if empty.
    """
    N = poly.N
    if N == 1:
        if any(b < 0 for b in poly.offsets):
            raise InfeasiblePolytope("polytope is empty")
        return WeightVector(np.zeros(1)), math.inf
    A, b = poly.theta_form()
    norms = np.linalg.norm(A, axis=1)
    A_lp = np.vstack([np.column_stack([A, norms]), np.append(np.zeros(N - 1), -1.0)])
    b_lp = np.append(b, 0.0)
    c = np.zeros(N)
    c[-1] = 1.0
    try:
        x, r = lp_solve(c, A_lp, b_lp)
    except InfeasibleLP as exc:
        raise InfeasiblePolytope("polytope is empty") from exc
    lam = _embedding(N) @ x[:-1]
    return WeightVector(lam), max(r, 0.0)


@dataclass(frozen=True)
class CutOptions:
    max_iter: int = 200
    radius_tol: float | None = None   # default 1e-3 * diam(K)
    cut_tol: float | None = None      # default 0.1 / sqrt(M)
    dual_tol: float | None = None     # default max(1e-8, 0.1 / sqrt(M))
    transport_stop: StopRule = field(default_factory=StopRule)


def _evaluate(lam, delta, batch, mu, metric, tol, start):
    phi, idx = batch_phi_assign(batch, lam, mu, metric)
    res = _solve_from_phi(phi, batch.weights, delta, tol, start)
    r = np.exp(-1.0 - res.pair.v * phi - res.pair.u)
    masses = masses_from_assignment(idx, batch.weights * r, mu.N)
    return res, masses, phi, idx


def generate_cut(lam, delta: float, batch: SampleBatch, mu: EmpiricalMeasure, metric: Metric,
                 tol: float | None = None, start: DualPair | None = None, k: int = 0,
                 radius: float = math.nan) -> CutRecord:
    """Solve the inner dual at ``lam`` and return the separating direction ``g``.

    ``g_i = 1/N - mass_i`` where ``mass_i`` is the mass of the single-constraint
    optimum on weighted region ``i``; the maximizer of ``Gamma`` lies in
    ``{lam' : <g, lam' - lam> >= depth}``. ``depth`` is zero unless the
    constraint is slack at ``lam``, in which case it is
    ``delta - E_p[phi_lambda]``.
    """
    lam_w = lam if isinstance(lam, WeightVector) else WeightVector(lam)
    tol = default_tol(batch.M) if tol is None else tol
    res, masses, phi, idx = _evaluate(lam_w.values, delta, batch, mu, metric, tol, start)
    if not res.converged:
        log.warning("inner dual not converged at cut %d", k)
    depth = 0.0
    if res.pair.v == 0.0:
        # slack constraint: cut with the supergradient of E_p[phi_lambda] itself
        masses = masses_from_assignment(idx, batch.weights, mu.N)
        depth = max(delta - float(np.dot(batch.weights, phi)), 0.0)
    g = 1.0 / mu.N - masses
    return CutRecord(k, lam_w, g, radius, max(res.value, 0.0), res.pair, masses, depth)


def _finish(lam: WeightVector, pair: DualPair, delta, prior, batch, mu, metric,
            converged, extra) -> EntropySolution:
    ratio = RatioFn(lam, pair, mu, metric)
    phi, _ = batch_phi_assign(batch, lam.values, mu, metric)
    r = np.exp(ratio.log_ratio_from_phi(phi))
    mass = batch.expect(r)
    cost = batch.expect(r * phi)
    return EntropySolution(lam, pair, float(delta), prior, mass, cost,
                           cross_entropy(r, batch), converged, batch.seed, batch.M, extra)


def _abort(k, trace, best) -> InfeasiblePolytope:
    return InfeasiblePolytope(
        "localization polytope empty after relaxation",
        {"iteration": k, "cuts": len(trace),
         "best_lambda": None if best is None else best.center.tolist(),
         "best_gamma": None if best is None else best.gamma_estimate},
    )


def solve_min_cross_entropy(mu: EmpiricalMeasure, prior: PriorModel, metric: Metric,
                            delta: float, batch: SampleBatch, opts: CutOptions | None = None,
                            prior_transport: TransportSolution | None = None):
    """Least cross-entropy density relative to ``prior`` in the transport ball around ``mu``.

    Parameters
    ----------
    mu : EmpiricalMeasure
        Ball center.
    prior : PriorModel
        Reference density ``p``; ``batch`` must be drawn from it.
    delta : float
        Ball radius, positive.
    opts : CutOptions, optional
        Iteration cap and stopping tolerances.
    prior_transport : TransportSolution, optional
        Precomputed transport of ``p`` to ``mu`` on the same batch (saves work
        in sweeps).

    Returns
    -------
    solution : EntropySolution
        The iterate with the largest ``Gamma`` estimate.
    trace : list of CutRecord
        One record per queried center; empty when the prior is already in the
        ball (then ``q* = p``).
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    opts = opts or CutOptions()
    domain = prior.domain
    diam = domain.diameter(metric)
    tol = default_tol(batch.M) if opts.dual_tol is None else opts.dual_tol
    radius_tol = 1e-3 * diam if opts.radius_tol is None else opts.radius_tol
    cut_tol = 0.1 / math.sqrt(batch.M) if opts.cut_tol is None else opts.cut_tol

    if prior_transport is None:
        prior_transport = maximize_psi(batch, None, mu, metric, stop=opts.transport_stop)
    w_prior = prior_transport.wasserstein
    if delta >= w_prior:
        sol = EntropySolution(prior_transport.lambda_star, DualPair(-1.0, 0.0), float(delta),
                              prior, batch.expect(np.ones(batch.M)), w_prior, 0.0,
                              prior_transport.converged, batch.seed, batch.M,
                              {"prior_wasserstein": w_prior, "inactive": True})
        return sol, []

    N = mu.N
    if N == 1:
        rec = generate_cut(np.zeros(1), delta, batch, mu, metric, tol=tol, k=0, radius=0.0)
        sol = _finish(rec.center, rec.dual, delta, prior, batch, mu, metric, True,
                      {"prior_wasserstein": w_prior, "inactive": False, "iterations": 1})
        return sol, [rec]

    poly = CutPolytope.box(N, diam)
    poly.add_pairwise(metric.pairwise(mu.points, mu.points))
    relaxed = False
    trace: list[CutRecord] = []
    best: CutRecord | None = None
    start = None
    converged = False
    for k in range(opts.max_iter):
        try:
            center, radius = chebyshev_center(poly)
        except InfeasiblePolytope:
            if relaxed:
                raise _abort(k, trace, best) from None
            eps = 2.0 / math.sqrt(batch.M) * diam
            log.warning("empty polytope at iteration %d; relaxing offsets by %.3g", k, eps)
            poly = poly.relaxed(eps)
            relaxed = True
            try:
                center, radius = chebyshev_center(poly)
            except InfeasiblePolytope:
                raise _abort(k, trace, best) from None

        rec = generate_cut(center, delta, batch, mu, metric, tol=tol, start=start, k=k,
                           radius=radius)
        trace.append(rec)
        start = rec.dual
        if best is None or rec.gamma_estimate > best.gamma_estimate:
            best = rec
        if radius <= radius_tol or float(np.max(np.abs(rec.g))) <= cut_tol:
            converged = True
            break
        poly.add_cut(rec.g, center.values, rec.depth)

    # re-solve at the chosen weights from a cold start for a clean certificate
    res, *_ = _evaluate(best.center.values, delta, batch, mu, metric, tol, None)
    extra = {
        "prior_wasserstein": w_prior,
        "inactive": False,
        "iterations": len(trace),
        "final_radius": trace[-1].chebyshev_radius,
        "relaxed": relaxed,
    }
    sol = _finish(best.center, res.pair, delta, prior, batch, mu, metric,
                  converged and res.converged, extra)
    return sol, trace
