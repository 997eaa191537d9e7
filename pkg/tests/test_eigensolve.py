import numpy as np
import pytest

from eslees import (
    SolveSettings,
    assemble,
    minimize_rayleigh,
    orthogonality_check,
    random_nsd_field,
    rayleigh_F,
    scaled_inverse_metric,
    second_eigenvalue,
    shifted_nsd,
    solve_dense,
    solve_minimizer,
)
from eslees.eigensolve import residuals, spd_shift
from eslees.errors import ConfigurationError, MetricError, NonConvergence
from eslees.spectrum import Method, cluster_indices, lowest_eigenpairs


def _circle(circle, c, shift=0.0):
    return assemble(circle, scaled_inverse_metric(circle, c), shift)


def _nsd(disc, seed, shift=0.0):
    return assemble(disc, shifted_nsd(disc, random_nsd_field(disc, seed), second_eigenvalue(disc)[0]), shift)


def test_dense_circle_examples(circle):
    res = solve_dense(_circle(circle, -1.0), 5)
    assert res.method is Method.DENSE
    assert np.allclose(res.eigenvalues[:5], [0, 0, 0, 12, 12], atol=1e-10)
    assert [len(c) for c in res.clusters][:2] == [3, 2]
    low = solve_dense(_circle(circle, -4.0), 3)
    assert low.eigenvalues[0] == pytest.approx(-3.0, abs=1e-10)


def test_zero_cluster_contains_constant(circle):
    mats = _circle(circle, -1.0)
    V = solve_dense(mats, 3).cluster_vectors(0)
    one = circle.constant_vector()
    coeff = V.T @ mats.M @ one
    assert np.linalg.norm(V @ coeff - one) <= 1e-10 * np.linalg.norm(one)


def test_dense_invariants(any_disc):
    mats = _nsd(any_disc, 2)
    res = solve_dense(mats, 10)
    U = res.eigenvectors
    assert np.all(np.diff(res.eigenvalues) >= 0)
    assert np.abs(U.T @ mats.M @ U - np.eye(len(res))).max() <= 1e-9
    assert residuals(res, mats).max() <= 1e-7
    assert orthogonality_check(res, mats) <= 1e-9


def test_orthogonality_single_cluster(circle):
    mats = _circle(circle, -1.0)
    res = solve_dense(mats, 1)
    assert len(res.clusters) == 1
    assert orthogonality_check(res, mats) == 0.0


def test_dense_is_deterministic(torus):
    mats = _nsd(torus, 5)
    a, b = solve_dense(mats, 6), solve_dense(mats, 6)
    assert np.array_equal(a.eigenvalues, b.eigenvalues)
    assert np.array_equal(a.eigenvectors, b.eigenvectors)


def test_cluster_widening(sphere):
    res = solve_dense(assemble(sphere, scaled_inverse_metric(sphere, -2.0)), 2)
    assert len(res) == 4


def test_cluster_rule():
    assert cluster_indices([0.0, 5e-7, 1.0, 1.0 + 2e-6], 1e-6) == ((0, 1), (2,), (3,))
    assert cluster_indices([100.0, 100.0 + 9e-5], 1e-6) == ((0, 1),)


def test_mass_not_pd():
    with pytest.raises(MetricError):
        lowest_eigenpairs(np.eye(2), np.diag([1.0, -1.0]), 1, 1e-6)


def test_minimizer_circle_examples(circle):
    mats = _circle(circle, -1.0)
    mu, u = minimize_rayleigh(mats)
    assert mu == pytest.approx(0.0, abs=1e-8)
    assert u @ mats.M @ u == pytest.approx(1.0, abs=1e-12)
    zero = solve_dense(mats, 3).cluster_vectors(0)
    mu, u = minimize_rayleigh(mats, list(zero.T))
    assert mu == pytest.approx(12.0, abs=1e-6)
    assert np.abs(zero.T @ mats.M @ u).max() <= 1e-8


def test_minimizer_one_dimensional_feasible_set(torus):
    mats = _nsd(torus, 1)
    U = solve_dense(mats, mats.n).eigenvectors
    v = U[:, 7]
    mu, u = minimize_rayleigh(mats, list(np.delete(U, 7, axis=1).T))
    assert mu == pytest.approx(rayleigh_F(mats, v), rel=1e-8, abs=1e-8)


@pytest.mark.parametrize("seed", range(3))
def test_minimizer_agrees_with_dense(any_disc, seed):
    mats = _nsd(any_disc, seed, shift=float(seed) - 1.0)
    d = solve_dense(mats, 6)
    m = solve_minimizer(mats, len(d.clusters[0]) + 1)
    assert m.method is Method.MINIMIZER
    mu = d.eigenvalues[0]
    assert abs(m.eigenvalues[0] - mu) <= 1e-6 * max(1.0, abs(mu))
    assert orthogonality_check(m, mats) <= 1e-8
    assert abs(m.cluster_values()[1] - d.cluster_values()[1]) <= 1e-5 * max(1.0, abs(d.cluster_values()[1]))


def test_courant_bound(sphere):
    mats = _nsd(sphere, 3)
    mu = solve_dense(mats, 1).eigenvalues[0]
    U = np.random.default_rng(0).standard_normal((mats.n, 1000))
    F = np.einsum("ij,ij->j", U, mats.pencil() @ U) / np.einsum("ij,ij->j", U, mats.M @ U)
    assert np.all(F >= mu - 1e-10 * max(1.0, abs(mu)))


def test_cluster_stability_under_seed(torus):
    mats = _nsd(torus, 8)
    a = solve_minimizer(mats, 4, SolveSettings(seed=0))
    b = solve_minimizer(mats, 4, SolveSettings(seed=17))
    assert [len(c) for c in a.clusters] == [len(c) for c in b.clusters]


def test_lowest_cluster_strictly_below_rest(any_disc):
    mats = _nsd(any_disc, 6)
    res = solve_dense(mats, 8)
    mu = res.eigenvalues[0]
    rest = res.eigenvalues[len(res.clusters[0]):]
    assert np.all(rest - mu > 1e-6 * max(1.0, abs(mu)))


def test_spd_shift_makes_pencil_definite(circle):
    mats = _circle(circle, -4.0)
    alpha = spd_shift(mats.pencil(), mats.M)
    np.linalg.cholesky(mats.pencil() + alpha * mats.M)


def test_nonconvergence_payload(sphere):
    mats = _nsd(sphere, 0)
    with pytest.raises(NonConvergence) as info:
        minimize_rayleigh(mats, (), SolveSettings(residual_tol=1e-300, max_iters=2))
    err = info.value
    assert err.iterations == 2
    assert err.vector.shape == (mats.n,)
    assert np.isfinite(err.value) and err.residual > 0


def test_deflation_must_be_orthonormal(circle):
    mats = _circle(circle, -1.0)
    with pytest.raises(ConfigurationError):
        minimize_rayleigh(mats, [np.ones(mats.n), np.ones(mats.n)])


@pytest.mark.parametrize("kwargs", [{"gap_rel_tol": 0}, {"residual_tol": -1}, {"max_iters": 0}])
def test_settings_validated(kwargs):
    with pytest.raises(ConfigurationError):
        SolveSettings(**kwargs)
