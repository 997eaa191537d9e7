"""Symmetric (2,0)-tensor fields sampled at quadrature points.

A field is stored in the same coframe as the discretization's inverse
metric. The hypothesis quantity is the largest eigenvalue of the pencil
``(A(x), g^{-1}(x))`` maximised over the sample points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainMismatch, MetricError
from .manifold import ManifoldDiscretization


@dataclass(frozen=True, eq=False)
class TensorField:
    values: np.ndarray  # (nq, dim, dim)
    label: str = ""

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 3 or v.shape[1] != v.shape[2]:
            raise ValueError(f"tensor samples must have shape (n, d, d), got {v.shape}")
        asym = np.abs(v - v.transpose(0, 2, 1)).max(initial=0.0)
        scale = max(1.0, np.abs(v).max(initial=0.0))
        if asym > 1e-12 * scale:
            raise ValueError(f"tensor samples are not symmetric (max asymmetry {asym:.3e})")
        v = 0.5 * (v + v.transpose(0, 2, 1))
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_points(self) -> int:
        return len(self.values)

    def values_at(self, point: int) -> np.ndarray:
        return self.values[point]


def _check_domain(disc: ManifoldDiscretization, field: TensorField) -> None:
    if field.values.shape != (disc.n_points, disc.dim, disc.dim):
        raise DomainMismatch(
            f"tensor field '{field.label}' has samples of shape {field.values.shape}, "
            f"discretization needs {(disc.n_points, disc.dim, disc.dim)}"
        )


def scaled_inverse_metric(disc: ManifoldDiscretization, c: float) -> TensorField:
    """``A = c g^{-1}``; the operator becomes ``Delta^2 - c Delta``."""
    return TensorField(c * disc.inverse_metric, label=f"scaled_inverse_metric({c:g})")


def shifted_nsd(disc: ManifoldDiscretization, T: TensorField, lambda2: float) -> TensorField:
    """``A = T - lambda2 g^{-1}``."""
    if not lambda2 > 0:
        raise ValueError("lambda2 must be positive")
    _check_domain(disc, T)
    return TensorField(
        T.values - lambda2 * disc.inverse_metric,
        label=f"shifted_nsd({T.label or 'T'}, {lambda2:.12g})",
    )


def tabulated(disc: ManifoldDiscretization, matrices, label: str = "tabulated") -> TensorField:
    field = TensorField(np.asarray(matrices, dtype=float).reshape(-1, disc.dim, disc.dim), label)
    _check_domain(disc, field)
    return field


def pencil_max_eigenvalues(A: np.ndarray, inv_metric: np.ndarray) -> np.ndarray:
    """Per point, the largest ``mu`` with ``A w = mu g^{-1} w``.

    Reduces by the Cholesky factor of ``g^{-1}`` and uses the closed-form
    eigenvalues of the symmetric 1x1 or 2x2 result.
    """
    try:
        chol = np.linalg.cholesky(inv_metric)
    except np.linalg.LinAlgError:
        raise MetricError("inverse metric is not positive definite at some point") from None
    dim = A.shape[-1]
    if dim == 1:
        return A[:, 0, 0] / chol[:, 0, 0] ** 2
    if dim != 2:
        # beyond the shipped backends; generic symmetric solve
        linv = np.linalg.inv(chol)
        s = linv @ A @ linv.transpose(0, 2, 1)
        return np.linalg.eigvalsh(0.5 * (s + s.transpose(0, 2, 1)))[:, -1]
    l11, l21, l22 = chol[:, 0, 0], chol[:, 1, 0], chol[:, 1, 1]
    a, b, c = A[:, 0, 0], A[:, 0, 1], A[:, 1, 1]
    # S = L^{-1} A L^{-T} for lower-triangular L
    s11 = a / l11**2
    s12 = (b - l21 * a / l11) / (l11 * l22)
    s22 = (c - 2 * l21 * b / l11 + l21**2 * a / l11**2) / l22**2
    return 0.5 * (s11 + s22) + np.hypot(0.5 * (s11 - s22), s12)


def pointwise_max_ratio(disc: ManifoldDiscretization, A: TensorField) -> float:
    """Maximum over sample points of ``max_w A(w, w) / g^{-1}(w, w)``."""
    _check_domain(disc, A)
    return float(pencil_max_eigenvalues(A.values, disc.inverse_metric).max())


def is_negative_semidefinite(disc: ManifoldDiscretization, T: TensorField, tol: float = 0.0) -> bool:
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    return pointwise_max_ratio(disc, T) <= tol


# -- random smooth fields ------------------------------------------------------


def _trig_features(disc: ManifoldDiscretization, coords: np.ndarray, rng, smoothness: int, count: int):
    """``count`` independent random trigonometric polynomials of degree
    ``<= smoothness`` evaluated at ``coords``; returns (len(coords), count)."""
    coords = np.asarray(coords, dtype=float)
    out = np.zeros((len(coords), count))
    if disc.coord_system == "angle":
        dim = coords.shape[1]
        grids = np.meshgrid(*[np.arange(-smoothness, smoothness + 1)] * dim, indexing="ij")
        freqs = np.column_stack([g.ravel() for g in grids])
        freqs = freqs[np.abs(freqs).max(axis=1) <= smoothness]
        phase = coords @ freqs.T  # (np, nfreq)
        decay = 1.0 / (1.0 + (freqs**2).sum(axis=1))
        for j in range(count):
            a = rng.standard_normal(len(freqs)) * decay
            b = rng.standard_normal(len(freqs)) * decay
            out[:, j] = np.cos(phase) @ a + np.sin(phase) @ b
    else:
        x = coords / disc.length_scale
        for j in range(count):
            out[:, j] = rng.standard_normal()
            for k in range(1, smoothness + 1):
                direction = rng.standard_normal(3)
                direction /= np.linalg.norm(direction)
                a, b = rng.standard_normal(2) / (1.0 + k * k)
                out[:, j] += a * np.cos(k * x @ direction) + b * np.sin(k * x @ direction)
    return out


def random_nsd_field(
    disc: ManifoldDiscretization, seed: int, smoothness: int = 2, amplitude: float = 1.0
) -> TensorField:
    """``T = -G^T G`` with ``G`` a matrix of smooth random trigonometric
    polynomials, deterministic in ``(seed, smoothness, disc)``.

    ``G`` is drawn in an orthonormal coframe and mapped to the
    discretization's coframe, so ``T`` scales like ``amplitude / R^2``
    relative to ``g^{-1}`` (``R`` the equal-volume radius). On embedded
    kinds ``G`` is a 3x3 ambient field restricted to the tangent plane,
    which keeps ``T`` smooth across coordinate singularities.
    """
    if smoothness < 1:
        raise ValueError("smoothness must be positive")
    rng = np.random.default_rng(seed)
    nq, dim = disc.n_points, disc.dim
    if disc.frames is not None:
        g = _trig_features(disc, disc.coords, rng, smoothness, 9).reshape(nq, 3, 3)
        g = g @ disc.frames  # (nq, 3, dim)
    else:
        g = _trig_features(disc, disc.coords, rng, smoothness, dim * dim).reshape(nq, dim, dim)
    t_on = -np.einsum("qki,qkj->qij", g, g) * (amplitude / disc.length_scale**2)
    chol = np.linalg.cholesky(disc.inverse_metric)
    t = chol @ t_on @ chol.transpose(0, 2, 1)
    return TensorField(t, label=f"random_nsd(seed={seed}, smoothness={smoothness}, amplitude={amplitude:g})")


def random_potential(
    disc: ManifoldDiscretization, seed: int, smoothness: int = 2, amplitude: float = 1.0
) -> np.ndarray:
    """Smooth random scalar field at ``disc.node_coords``, in units of
    ``1 / R^2``."""
    rng = np.random.default_rng(seed)
    h = _trig_features(disc, disc.node_coords, rng, smoothness, 1)[:, 0]
    return h * (amplitude / disc.length_scale**2)
