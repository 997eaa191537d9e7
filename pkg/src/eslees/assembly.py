"""Discrete quadratic forms of ``P = Delta^2 - div(A d) + shift``.

The biharmonic block is the mixed form ``B = K M^{-1} K``. Integration by
parts identities then hold exactly in the discrete setting, e.g. for a
discrete Laplace eigenvector ``K w = lam M w`` we get ``w^T B w = lam^2 w^T M w``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .errors import DegenerateInput, DimensionError
from .manifold import ManifoldDiscretization
from .spectrum import check_positive_definite, symmetrize
from .tensorfield import TensorField, _check_domain


@dataclass(frozen=True, eq=False)
class OperatorMatrices:
    M: np.ndarray
    K: np.ndarray
    B: np.ndarray
    K_A: np.ndarray
    shift: float = 0.0
    potential: Optional[np.ndarray] = None
    biharmonic: bool = True
    label: str = ""

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def form(self) -> np.ndarray:
        """Matrix of the unshifted quadratic form ``G``."""
        out = self.K_A.copy()
        if self.biharmonic:
            out += self.B
        if self.potential is not None:
            out += self.potential
        return out

    def pencil(self) -> np.ndarray:
        """Left-hand matrix of the eigenproblem ``pencil u = mu M u``."""
        return self.form() + self.shift * self.M

    def with_shift(self, shift: float) -> "OperatorMatrices":
        return OperatorMatrices(
            self.M, self.K, self.B, self.K_A, shift, self.potential, self.biharmonic, self.label
        )


def biharmonic_matrix(K: np.ndarray, M: np.ndarray) -> np.ndarray:
    """``K M^{-1} K``, with a sparse fast path for diagonal (lumped) ``M``."""
    diag = np.diag(M)
    if np.count_nonzero(M - np.diag(diag)) == 0:
        ks = sp.csr_matrix(K)
        return symmetrize((ks @ sp.diags(1.0 / diag) @ ks).toarray())
    factor = scipy.linalg.cho_factor(M)
    return symmetrize(K @ scipy.linalg.cho_solve(factor, K))


def assemble(disc: ManifoldDiscretization, A: TensorField, shift: float = 0.0) -> OperatorMatrices:
    """Mass, stiffness, biharmonic and anisotropy matrices for ``A``."""
    _check_domain(disc, A)
    M = disc.mass_matrix()
    check_positive_definite(M)
    K = disc.stiffness_matrix()
    K_A = disc.form_matrix(A.values)
    B = biharmonic_matrix(K, M)
    return OperatorMatrices(M, K, B, K_A, float(shift), label=A.label)


def assemble_second_order(
    disc: ManifoldDiscretization, potential: Optional[np.ndarray] = None, shift: float = 0.0
) -> OperatorMatrices:
    """``-Delta + h`` in the same pencil framework: biharmonic part off,
    ``K_A = K`` (i.e. ``A = g^{-1}``) and the potential as a weighted mass."""
    M = disc.mass_matrix()
    check_positive_definite(M)
    K = disc.stiffness_matrix()
    h = None if potential is None else disc.potential_mass(potential)
    return OperatorMatrices(
        M, K, np.zeros_like(K), K.copy(), float(shift), h, biharmonic=False, label="-Delta + h"
    )


def _vector(mats: OperatorMatrices, u) -> np.ndarray:
    u = np.asarray(u, dtype=float)
    if u.shape != (mats.n,):
        raise DimensionError(f"vector has shape {u.shape}, expected ({mats.n},)")
    return u


def quadratic_form_G(mats: OperatorMatrices, u) -> float:
    """``G(u) = u^T (B + K_A) u``; the shift is not included."""
    u = _vector(mats, u)
    return float(u @ mats.form() @ u)


def rayleigh_F(mats: OperatorMatrices, u) -> float:
    u = _vector(mats, u)
    mass = float(u @ mats.M @ u)
    if not np.any(u) or mass <= 0:
        raise DegenerateInput("Rayleigh quotient of the zero vector")
    return quadratic_form_G(mats, u) / mass + mats.shift


def _biharmonic_energy(mats: OperatorMatrices, U: np.ndarray) -> np.ndarray:
    # u^T K M^{-1} K u through the factors: avoids the cancellation a dense B
    # suffers on near-null vectors such as constants
    KU = mats.K @ U
    diag = np.diag(mats.M)
    if np.count_nonzero(mats.M - np.diag(diag)) == 0:
        return np.einsum("i...,i...->...", KU, KU / (diag if U.ndim == 1 else diag[:, None]))
    return np.einsum("i...,i...->...", KU, scipy.linalg.cho_solve(scipy.linalg.cho_factor(mats.M), KU))


def holder_gap(mats: OperatorMatrices, u) -> float:
    """``sqrt(u^T B u) sqrt(u^T M u) - u^T K u``, nonnegative up to rounding."""
    u = _vector(mats, u)
    b = max(float(_biharmonic_energy(mats, u)), 0.0)
    return float(np.sqrt(b) * np.sqrt(u @ mats.M @ u) - u @ mats.K @ u)


def holder_gaps(mats: OperatorMatrices, U: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`holder_gap` over the columns of ``U``; also returns
    the per-column scale ``max(1, u^T B u, u^T M u, u^T K u)``."""
    b = _biharmonic_energy(mats, U)
    m = np.einsum("ij,ij->j", U, mats.M @ U)
    k = np.einsum("ij,ij->j", U, mats.K @ U)
    gaps = np.sqrt(np.maximum(b, 0.0)) * np.sqrt(m) - k
    return gaps, np.maximum.reduce([np.ones_like(b), b, m, np.abs(k)])


def export_matrices(mats: OperatorMatrices, directory) -> list[Path]:
    """Write every matrix as plain text, one row per line."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in ("M", "K", "B", "K_A"):
        path = directory / f"{name}.txt"
        np.savetxt(path, getattr(mats, name), fmt="%.17g")
        paths.append(path)
    if mats.potential is not None:
        path = directory / "potential.txt"
        np.savetxt(path, mats.potential, fmt="%.17g")
        paths.append(path)
    return paths
