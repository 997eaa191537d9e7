"""Low spectrum of the pencil ``(B + K_A + shift M, M)``.

Two independent routes:

* :func:`solve_dense` -- LAPACK generalized symmetric solve; the reference.
* :func:`minimize_rayleigh` -- minimises the Rayleigh quotient over the
  M-unit sphere, M-orthogonal to a deflation space, by constrained inverse
  iteration on an SPD-shifted pencil. It never calls a full eigensolver;
  the shift comes from Cholesky bisection, and only a small Rayleigh-Ritz
  block is diagonalised.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import OperatorMatrices
from .errors import ConfigurationError, MetricError, NonConvergence
from .spectrum import (
    Method,
    SolveSettings,
    SpectrumResult,
    cluster_indices,
    lowest_eigenpairs,
    same_cluster,
    symmetrize,
)

log = logging.getLogger(__name__)

__all__ = [
    "Method",
    "SolveSettings",
    "SpectrumResult",
    "solve_dense",
    "minimize_rayleigh",
    "solve_minimizer",
    "orthogonality_check",
    "residuals",
]


def solve_dense(mats: OperatorMatrices, count: int, settings: SolveSettings | None = None) -> SpectrumResult:
    settings = settings or SolveSettings()
    vals, vecs = lowest_eigenpairs(mats.pencil(), mats.M, min(count, mats.n), settings.gap_rel_tol)
    return SpectrumResult(vals, vecs, cluster_indices(vals, settings.gap_rel_tol), Method.DENSE)


def residuals(result: SpectrumResult, mats: OperatorMatrices) -> np.ndarray:
    """Relative residual ``|P u - mu M u| / ((|P| + |mu| |M|) |u|)`` per pair."""
    P = mats.pencil()
    U = result.eigenvectors
    r = P @ U - (mats.M @ U) * result.eigenvalues
    pn, mn = np.linalg.norm(P, 2), np.linalg.norm(mats.M, 2)
    scale = (pn + np.abs(result.eigenvalues) * mn) * np.linalg.norm(U, axis=0)
    return np.linalg.norm(r, axis=0) / scale


def orthogonality_check(result: SpectrumResult, mats: OperatorMatrices) -> float:
    """Largest ``|u_i^T M u_j|`` over pairs from different clusters."""
    if len(result.clusters) < 2:
        return 0.0
    gram = result.eigenvectors.T @ mats.M @ result.eigenvectors
    label = np.empty(len(result), dtype=int)
    for c, idx in enumerate(result.clusters):
        label[list(idx)] = c
    cross = label[:, None] != label[None, :]
    return float(np.abs(gram[cross]).max())


# -- minimizer -------------------------------------------------------------------


def _is_pd(s: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(s)
        return True
    except np.linalg.LinAlgError:
        return False


def spd_shift(pencil: np.ndarray, mass: np.ndarray) -> float:
    """A shift ``alpha`` slightly above ``-mu_1`` with ``pencil + alpha M``
    positive definite.

    Brackets ``-mu_1`` between a Gershgorin bound and the smallest diagonal
    entry of ``L^{-1} P L^{-T}`` (``M = L L^T``), then bisects using
    Cholesky success as the definiteness test.
    """
    try:
        L = np.linalg.cholesky(mass)
    except np.linalg.LinAlgError:
        raise MetricError("mass matrix is not positive definite") from None
    x = scipy.linalg.solve_triangular(L, pencil, lower=True)
    s = symmetrize(scipy.linalg.solve_triangular(L, x.T, lower=True))
    d = np.diag(s)
    radius = np.abs(s).sum(axis=1) - np.abs(d)
    scale = max(1.0, float(np.abs(d).max()))
    lo = -float(d.min())
    hi = -float((d - radius).min()) + 1e-8 * scale
    eye = np.eye(len(d))
    while not _is_pd(s + hi * eye):
        hi += max(1e-8 * scale, abs(hi - lo))
    tol = 1e-4 * max(1.0, abs(hi))
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if _is_pd(s + mid * eye):
            hi = mid
        else:
            lo = mid
    return hi + 1e-3 * max(1.0, abs(hi))


@dataclass
class _ShiftedPencil:
    pencil: np.ndarray
    mass: np.ndarray
    alpha: float
    factor: tuple

    @classmethod
    def build(cls, mats: OperatorMatrices) -> "_ShiftedPencil":
        P = symmetrize(mats.pencil())
        M = symmetrize(mats.M)
        alpha = spd_shift(P, M)
        factor = scipy.linalg.cho_factor(P + alpha * M)
        return cls(P, M, alpha, factor)


def _m_orthonormalize(Y: np.ndarray, M: np.ndarray) -> np.ndarray:
    gram = symmetrize(Y.T @ M @ Y)
    w, Q = np.linalg.eigh(gram)
    keep = w > 1e-13 * w.max()
    return Y @ (Q[:, keep] / np.sqrt(w[keep]))


def _deflation_basis(deflation, mats: OperatorMatrices) -> np.ndarray:
    if deflation is None or len(deflation) == 0:
        return np.zeros((mats.n, 0))
    V = np.column_stack([np.asarray(v, dtype=float) for v in deflation])
    if V.shape[0] != mats.n:
        raise ConfigurationError(f"deflation vectors must have length {mats.n}")
    err = np.abs(V.T @ mats.M @ V - np.eye(V.shape[1])).max()
    if err > 1e-6:
        raise ConfigurationError(f"deflation vectors are not M-orthonormal (error {err:.2e})")
    return V


def _constrained_min(sp: _ShiftedPencil, V: np.ndarray, settings: SolveSettings):
    P, M = sp.pencil, sp.mass
    n, k = V.shape
    free = n - k
    if free < 1:
        raise ConfigurationError("deflation space leaves no feasible vectors")
    block = min(free, 8)
    C = M @ V
    if k:
        Z = scipy.linalg.cho_solve(sp.factor, C)
        schur = scipy.linalg.cho_factor(symmetrize(C.T @ Z))

    def project(Y):
        # M-Gram-Schmidt against the deflation space (applied twice for stability)
        if k:
            Y = Y - V @ (C.T @ Y)
            Y = Y - V @ (C.T @ Y)
        return Y

    rng = np.random.default_rng(settings.seed)
    X = _m_orthonormalize(project(rng.standard_normal((n, block))), M)
    pn = np.linalg.norm(P, np.inf)
    mn = np.linalg.norm(M, np.inf)
    best = (np.inf, None, np.inf)
    for it in range(1, settings.max_iters + 1):
        H = symmetrize(X.T @ P @ X)
        G = symmetrize(X.T @ M @ X)
        theta, Y = scipy.linalg.eigh(H, G)
        X = X @ Y
        u, mu = X[:, 0], float(theta[0])
        r = P @ u - mu * (M @ u)
        if k:
            r = r - C @ (V.T @ r)
        rel = float(np.linalg.norm(r) / ((pn + abs(mu) * mn) * np.linalg.norm(u)))
        if rel < best[2]:
            best = (mu, u.copy(), rel)
        if rel <= settings.residual_tol:
            log.debug("minimizer converged in %d iterations (residual %.2e)", it, rel)
            return mu, u / np.sqrt(u @ M @ u), it, rel
        Y = scipy.linalg.cho_solve(sp.factor, M @ X)
        if k:
            Y = Y - Z @ scipy.linalg.cho_solve(schur, C.T @ Y)
        X = _m_orthonormalize(project(Y), M)
        if X.shape[1] < block:
            fill = project(rng.standard_normal((n, block - X.shape[1])))
            X = _m_orthonormalize(np.column_stack([X, fill]), M)
    raise NonConvergence(
        f"Rayleigh minimizer did not reach residual {settings.residual_tol:.1e} "
        f"in {settings.max_iters} iterations (best {best[2]:.2e})",
        value=best[0],
        vector=best[1],
        residual=best[2],
        iterations=settings.max_iters,
    )


def minimize_rayleigh(
    mats: OperatorMatrices, deflation=(), settings: SolveSettings | None = None
) -> tuple[float, np.ndarray]:
    """Minimise ``F(u) = u^T P u / u^T M u`` subject to ``u^T M v = 0`` for
    every deflation vector ``v``.

    Returns ``(mu, u)`` with ``u`` M-normalised.
    """
    settings = settings or SolveSettings()
    V = _deflation_basis(deflation, mats)
    mu, u, _, _ = _constrained_min(_ShiftedPencil.build(mats), V, settings)
    return mu, u


def solve_minimizer(mats: OperatorMatrices, count: int, settings: SolveSettings | None = None) -> SpectrumResult:
    """Lowest ``count`` eigenpairs by successive deflated minimisation,
    widened so the last cluster is complete."""
    settings = settings or SolveSettings()
    count = min(count, mats.n)
    sp = _ShiftedPencil.build(mats)
    vals: list[float] = []
    vecs: list[np.ndarray] = []
    while len(vals) < mats.n:
        V = np.column_stack(vecs) if vecs else np.zeros((mats.n, 0))
        mu, u, _, _ = _constrained_min(sp, V, settings)
        if len(vals) >= count and not same_cluster(vals[-1], mu, settings.gap_rel_tol):
            break
        vals.append(mu)
        vecs.append(u)
    order = np.argsort(vals, kind="stable")
    values = np.asarray(vals)[order]
    return SpectrumResult(
        values,
        np.column_stack(vecs)[:, order],
        cluster_indices(values, settings.gap_rel_tol),
        Method.MINIMIZER,
    )
