"""Spectrum containers, multiplicity clustering and the dense pencil solver."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ConfigurationError, MetricError, NumericalFailure


class Method(enum.Enum):
    DENSE = "dense"
    MINIMIZER = "minimizer"


@dataclass(frozen=True)
class SolveSettings:
    gap_rel_tol: float = 1e-6
    residual_tol: float = 1e-9
    max_iters: int = 5000
    seed: int = 0

    def __post_init__(self):
        if not (self.gap_rel_tol > 0 and self.residual_tol > 0):
            raise ConfigurationError("solver tolerances must be positive")
        if self.max_iters < 1:
            raise ConfigurationError("max_iters must be at least 1")


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # (n, k), M-orthonormal columns
    clusters: tuple[tuple[int, ...], ...]
    method: Method

    def __len__(self) -> int:
        return len(self.eigenvalues)

    def cluster_values(self) -> list[float]:
        """Mean eigenvalue of every cluster, ascending."""
        return [float(np.mean(self.eigenvalues[list(c)])) for c in self.clusters]

    def cluster_table(self) -> list[tuple[float, int]]:
        return [(v, len(c)) for v, c in zip(self.cluster_values(), self.clusters)]

    def cluster_vectors(self, index: int) -> np.ndarray:
        return self.eigenvectors[:, list(self.clusters[index])]


def same_cluster(a: float, b: float, gap_rel_tol: float) -> bool:
    return abs(b - a) <= gap_rel_tol * max(1.0, abs(a))


def cluster_indices(values, gap_rel_tol: float) -> tuple[tuple[int, ...], ...]:
    """Split an ascending sequence into runs of consecutive near-equal values."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return ()
    groups = [[0]]
    for i in range(1, len(values)):
        if same_cluster(values[i - 1], values[i], gap_rel_tol):
            groups[-1].append(i)
        else:
            groups.append([i])
    return tuple(tuple(g) for g in groups)


def fix_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.ndim == 1:
        return vectors if vectors[np.argmax(np.abs(vectors))] >= 0 else -vectors
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def symmetrize(x: np.ndarray) -> np.ndarray:
    return 0.5 * (x + x.T)


def check_positive_definite(m: np.ndarray, what: str = "mass matrix") -> None:
    try:
        np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise MetricError(f"{what} is not positive definite") from None


def lowest_eigenpairs(
    pencil: np.ndarray, mass: np.ndarray, count: int, gap_rel_tol: float
) -> tuple[np.ndarray, np.ndarray]:
    """Lowest ``count`` eigenpairs of ``pencil u = mu mass u``, widened so
    that the last multiplicity cluster is never split.

    Eigenvectors are ``mass``-orthonormal with a deterministic sign.
    """
    n = pencil.shape[0]
    if not 1 <= count <= n:
        raise ConfigurationError(f"count must lie in [1, {n}], got {count}")
    check_positive_definite(mass)
    a = symmetrize(pencil)
    b = symmetrize(mass)

    want = count
    while True:
        # one extra value decides whether the last cluster continues
        k = min(n, want + max(4, want // 2))
        try:
            vals, vecs = scipy.linalg.eigh(a, b, subset_by_index=[0, k - 1])
        except (np.linalg.LinAlgError, ValueError) as exc:
            raise NumericalFailure(f"dense eigensolve failed for n={n}, k={k}: {exc}") from None
        end = want
        while end < k and same_cluster(vals[end - 1], vals[end], gap_rel_tol):
            end += 1
        if end < k or k == n:
            return vals[:end], fix_signs(vecs[:, :end])
        want = end
