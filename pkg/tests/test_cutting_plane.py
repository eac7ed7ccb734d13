import math

import numpy as np
import pytest

import entroball.cutting_plane as cp
from entroball.cutting_plane import (
    CutOptions,
    CutPolytope,
    InfeasiblePolytope,
    chebyshev_center,
    generate_cut,
    solve_min_cross_entropy,
)
from entroball.demo import small_demo_measure
from entroball.domain import EUCLIDEAN, EmpiricalMeasure, draw_batch, make_uniform_prior
from entroball.entropy import gamma_value
from entroball.transport import maximize_psi


@pytest.fixture(scope="module")
def setup(square):
    prior = make_uniform_prior(square)
    batch = draw_batch(prior, 20_000, seed=11)
    mu = small_demo_measure()
    return prior, batch, mu, maximize_psi(batch, None, mu, EUCLIDEAN)


@pytest.fixture(scope="module")
def run_small(setup):
    prior, batch, mu, tp = setup
    return solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.1, batch, prior_transport=tp)


def test_box_center_two_atoms():
    # lam = (t, -t) with |t| <= 1 is a segment of half-length sqrt(2)
    center, radius = chebyshev_center(CutPolytope.box(2, 1.0))
    assert np.allclose(center.values, 0.0, atol=1e-12)
    assert radius == pytest.approx(math.sqrt(2))


def test_box_center_is_origin():
    for N in (3, 5, 8):
        center, radius = chebyshev_center(CutPolytope.box(N, 0.5))
        assert radius > 0
        assert abs(center.values.sum()) < 1e-12
        assert CutPolytope.box(N, 0.5).contains(center.values)


def test_cut_moves_the_center():
    poly = CutPolytope.box(3, 1.0)
    g = np.array([1.0, -1.0, 0.0])
    c0, r0 = chebyshev_center(poly)
    poly.add_cut(g, c0.values)
    c1, r1 = chebyshev_center(poly)
    assert g @ (c1.values - c0.values) > 0
    assert r1 < r0


def test_deep_cut_offsets_the_halfspace():
    poly = CutPolytope(2)
    poly.add_cut(np.array([1.0, -1.0]), np.zeros(2), depth=0.5)
    assert not poly.contains([0.2, -0.2])
    assert poly.contains([0.3, -0.3])


def test_empty_polytope_raises():
    poly = CutPolytope.box(3, 1.0)
    poly.add(np.array([1.0, 0.0, 0.0]), -2.0)
    with pytest.raises(InfeasiblePolytope):
        chebyshev_center(poly)


def test_relaxation_widens_offsets():
    poly = CutPolytope.box(2, 1.0)
    wider = poly.relaxed(0.1)
    assert np.allclose(wider.offsets, np.array(poly.offsets) + 0.1)
    assert len(poly.offsets) == 4


def test_wrong_normal_length_rejected():
    with pytest.raises(ValueError):
        CutPolytope(3).add(np.ones(2), 1.0)


def test_single_atom_center():
    center, radius = chebyshev_center(CutPolytope.box(1, 1.0))
    assert center.values.tolist() == [0.0]
    assert radius == math.inf


def test_inactive_ball_returns_the_prior(setup):
    prior, batch, mu, tp = setup
    sol, trace = solve_min_cross_entropy(mu, prior, EUCLIDEAN, tp.wasserstein + 0.01, batch,
                                         prior_transport=tp)
    assert trace == []
    assert sol.cross_entropy == 0.0
    assert sol.dual.v == 0.0 and sol.dual.u == -1.0
    assert np.array_equal(sol.lambda_star.values, tp.lambda_star.values)
    assert sol.extra["inactive"]


def test_active_run_is_normalized_and_tight(run_small):
    sol, trace = run_small
    tol = 3 / math.sqrt(sol.M)
    assert sol.converged
    assert abs(sol.mass - 1) <= tol
    assert abs(sol.transport_cost - 0.1) <= tol
    assert sol.dual.v > 0
    assert sol.cross_entropy > 0


def test_radius_is_nonincreasing(run_small):
    _, trace = run_small
    radii = [rec.chebyshev_radius for rec in trace]
    assert all(b <= a + 1e-12 for a, b in zip(radii, radii[1:]))


def test_best_iterate_is_returned(run_small):
    sol, trace = run_small
    best = max(trace, key=lambda rec: rec.gamma_estimate)
    assert np.array_equal(sol.lambda_star.values, best.center.values)


def test_pairwise_bounds_hold_at_the_solution(run_small):
    sol, _ = run_small
    mu = small_demo_measure()
    lam = sol.lambda_star.values
    dist = EUCLIDEAN.pairwise(mu.points, mu.points)
    assert np.all(lam[None, :] - lam[:, None] <= dist + 1e-9)


def test_cuts_are_valid_on_probes(setup, run_small):
    prior, batch, mu, _ = setup
    sol, trace = run_small
    rng = np.random.default_rng(0)
    noise = 3 / math.sqrt(batch.M)
    for rec in trace[:: max(len(trace) // 10, 1)]:
        g = rec.g
        found = 0
        while found < 5:
            lam = rec.center.values + rng.normal(size=mu.N) * 0.3
            lam -= lam.mean()
            if g @ (lam - rec.center.values) >= rec.depth:
                continue
            found += 1
            assert gamma_value(lam, 0.1, batch, mu, EUCLIDEAN)[0] <= rec.gamma_estimate + noise


def test_symmetric_interval_pair(interval):
    prior = make_uniform_prior(interval)
    batch = draw_batch(prior, 20_000, seed=2)
    mu = EmpiricalMeasure(np.array([0.25, 0.75]), interval)
    sol, _ = solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.05, batch)
    # by symmetry the weights vanish and q has the same shape around each atom
    assert np.abs(sol.lambda_star.values).max() < 0.01
    assert abs(sol.transport_cost - 0.05) <= 3 / math.sqrt(batch.M)


def test_single_atom_matches_truncated_exponential(interval):
    from test_entropy import truncated_exponential

    prior = make_uniform_prior(interval)
    batch = draw_batch(prior, 50_000, seed=4)
    mu = EmpiricalMeasure(np.array([0.0]), interval)
    sol, trace = solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.2, batch)
    assert len(trace) == 1
    v, H = truncated_exponential(0.2)
    assert sol.dual.v == pytest.approx(v, rel=0.02)
    assert sol.cross_entropy == pytest.approx(H, abs=0.01)


def test_deterministic(setup):
    prior, batch, mu, tp = setup
    a, ta = solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.12, batch, prior_transport=tp)
    b, tb = solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.12, batch, prior_transport=tp)
    assert a.to_dict() == b.to_dict()
    assert [r.to_dict() for r in ta] == [r.to_dict() for r in tb]


def test_iteration_cap_flags_nonconvergence(setup):
    prior, batch, mu, tp = setup
    sol, trace = solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.1, batch,
                                         CutOptions(max_iter=3), prior_transport=tp)
    assert len(trace) == 3
    assert not sol.converged


def test_inconsistent_cuts_abort_after_one_relaxation(setup, monkeypatch, caplog):
    prior, batch, mu, tp = setup
    real = cp.generate_cut

    def bad_cut(*args, **kw):
        rec = real(*args, **kw)
        # a cut that excludes the whole starting box, even after relaxing
        return cp.CutRecord(rec.k, rec.center, np.array([1.0, -1.0, 0.0, 0.0]), rec.chebyshev_radius,
                            rec.gamma_estimate, rec.dual, rec.masses, depth=10.0)

    monkeypatch.setattr(cp, "generate_cut", bad_cut)
    with pytest.raises(InfeasiblePolytope) as info:
        solve_min_cross_entropy(mu, prior, EUCLIDEAN, 0.1, batch, prior_transport=tp)
    assert info.value.diagnostics["iteration"] == 1
    assert "relaxing" in caplog.text


def test_generate_cut_direction(setup):
    _, batch, mu, _ = setup
    rec = generate_cut(np.zeros(4), 0.1, batch, mu, EUCLIDEAN)
    assert rec.g.shape == (4,)
    assert rec.g.sum() == pytest.approx(0.0, abs=3 / math.sqrt(batch.M))
    assert rec.dual.v > 0 and rec.depth == 0.0


def test_generate_cut_deep_when_slack(setup):
    _, batch, mu, tp = setup
    rec = generate_cut(np.zeros(4), tp.wasserstein + 0.05, batch, mu, EUCLIDEAN)
    assert rec.dual.v == 0.0
    assert rec.depth > 0.05
    assert rec.gamma_estimate == 0.0


def test_nonpositive_delta_rejected(setup):
    prior, batch, mu, tp = setup
    with pytest.raises(ValueError):
        solve_min_cross_entropy(mu, prior, EUCLIDEAN, -1.0, batch, prior_transport=tp)
