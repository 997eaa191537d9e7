"""Galerkin discretizations of closed Riemannian manifolds.

Three spectral backends (circle, flat torus, round sphere) use
L2-orthonormal eigenbases of the Laplacian, so every matrix has a closed
form to compare against. The mesh backend uses piecewise-linear elements
on a closed triangulated surface with a lumped mass matrix.

Every backend reduces to the same quadrature data: weights ``w_q``, the
inverse metric ``g^{-1}(x_q)`` in a local coframe, and a matrix mapping
coefficient vectors to the components of ``du`` at the quadrature points.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.special import sph_legendre_p_all

from . import mesh as meshlib
from .errors import ConfigurationError, DimensionError, MetricError
from .spectrum import SpectrumResult, Method, cluster_indices, lowest_eigenpairs, symmetrize


class Kind(enum.Enum):
    CIRCLE = "circle"
    FLAT_TORUS = "flat_torus"
    SPHERE = "sphere"
    TRIANGLE_MESH = "triangle_mesh"

    @property
    def spectral(self) -> bool:
        return self is not Kind.TRIANGLE_MESH


@dataclass(frozen=True, eq=False)
class ManifoldDiscretization:
    """Immutable discretization data.

    Attributes
    ----------
    weights : (nq,) array
        Quadrature weights for ``dvol_g``.
    inverse_metric : (nq, dim, dim) array
        ``g^{-1}`` at each quadrature point, in the coframe used by
        ``gradients``.
    gradients : (nq*dim, n) dense array or sparse matrix
        Row ``q*dim + a`` gives component ``a`` of ``d(phi_j)`` at point ``q``.
    values : (nq, n) array or None
        Basis values at quadrature points (spectral kinds only).
    coords : (nq, p) array
        Angles for circle/torus, ambient positions for sphere/mesh.
    node_coords : array
        Where zeroth-order coefficients are sampled: the quadrature points
        for spectral kinds, the vertices for meshes.
    """

    kind: Kind
    dim: int
    n_dof: int
    weights: np.ndarray
    inverse_metric: np.ndarray
    gradients: object
    values: Optional[np.ndarray]
    coords: np.ndarray
    node_coords: np.ndarray
    frames: Optional[np.ndarray] = None
    analytic_spectrum: Optional[tuple[tuple[float, int], ...]] = None
    params: dict = field(default_factory=dict)
    mesh: Optional[meshlib.TriangleMesh] = None
    lumped_mass: Optional[np.ndarray] = None
    evaluator: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def n_points(self) -> int:
        return len(self.weights)

    @property
    def volume(self) -> float:
        return float(self.weights.sum())

    @property
    def length_scale(self) -> float:
        """Radius of the round manifold with the same volume."""
        if self.dim == 1:
            return self.volume / (2 * math.pi)
        return math.sqrt(self.volume / (4 * math.pi))

    @property
    def coord_system(self) -> str:
        return "angle" if self.kind in (Kind.CIRCLE, Kind.FLAT_TORUS) else "ambient"

    @property
    def quadrature(self) -> list[tuple[int, float]]:
        return list(enumerate(self.weights.tolist()))

    def inverse_metric_at(self, point: int) -> np.ndarray:
        return self.inverse_metric[point]

    def mass_matrix(self) -> np.ndarray:
        if self.lumped_mass is not None:
            return np.diag(self.lumped_mass)
        v = self.values
        return symmetrize(v.T @ (self.weights[:, None] * v))

    def form_matrix(self, tensor: np.ndarray) -> np.ndarray:
        """Dense matrix of ``sum_q w_q d(phi_i)^T T(x_q) d(phi_j)``."""
        tensor = np.asarray(tensor, dtype=float)
        if tensor.shape != (self.n_points, self.dim, self.dim):
            raise DimensionError(
                f"tensor samples have shape {tensor.shape}, expected "
                f"{(self.n_points, self.dim, self.dim)}"
            )
        blocks = self.weights[:, None, None] * tensor
        idx = np.arange(self.n_points)
        op = sp.bsr_matrix((blocks, idx, np.arange(self.n_points + 1)), shape=(self.n_points * self.dim,) * 2)
        d = self.gradients
        out = d.T @ (op @ d)
        if sp.issparse(out):
            out = out.toarray()
        return symmetrize(np.asarray(out))

    def stiffness_matrix(self) -> np.ndarray:
        return self.form_matrix(self.inverse_metric)

    def potential_mass(self, h: np.ndarray) -> np.ndarray:
        """Matrix of ``int h u v`` for ``h`` sampled at ``node_coords``."""
        h = np.asarray(h, dtype=float)
        if h.shape != (len(self.node_coords),):
            raise DimensionError(f"potential needs {len(self.node_coords)} samples, got {h.shape}")
        if self.lumped_mass is not None:
            return np.diag(self.lumped_mass * h)
        v = self.values
        return symmetrize(v.T @ ((self.weights * h)[:, None] * v))

    def constant_vector(self) -> np.ndarray:
        """Coefficients of the constant function 1."""
        if self.lumped_mass is not None:
            return np.ones(self.n_dof)
        # the constant mode is basis function 0 with value 1/sqrt(volume)
        c = np.zeros(self.n_dof)
        c[0] = math.sqrt(self.volume)
        return c

    def sample(self, u: np.ndarray) -> np.ndarray:
        """Function values of ``u`` at the sample points (quadrature nodes
        for spectral kinds, vertices for meshes)."""
        u = np.asarray(u, dtype=float)
        if u.shape[0] != self.n_dof:
            raise DimensionError(f"vector has length {u.shape[0]}, expected {self.n_dof}")
        if self.values is None:
            return u
        return self.values @ u

    def describe(self) -> dict:
        return {"kind": self.kind.value, "dim": self.dim, "n_dof": self.n_dof, **self.params}


def _check_metric(inv_metric: np.ndarray) -> None:
    try:
        np.linalg.cholesky(inv_metric)
    except np.linalg.LinAlgError:
        raise MetricError("inverse metric is not positive definite at some point") from None


def _merge_spectrum(values: np.ndarray) -> tuple[tuple[float, int], ...]:
    values = np.sort(np.asarray(values, dtype=float))
    groups = cluster_indices(values, 1e-12)
    return tuple((float(values[g[0]]), len(g)) for g in groups)


# -- circle -----------------------------------------------------------------


def _fourier_1d(theta: np.ndarray, modes: int, length: float):
    """Orthonormal real Fourier basis on a loop of the given length and its
    derivative with respect to the angle ``theta``."""
    n = 2 * modes + 1
    vals = np.empty((len(theta), n))
    dvals = np.empty((len(theta), n))
    vals[:, 0] = 1.0 / math.sqrt(length)
    dvals[:, 0] = 0.0
    c = math.sqrt(2.0 / length)
    for k in range(1, modes + 1):
        vals[:, 2 * k - 1] = c * np.cos(k * theta)
        vals[:, 2 * k] = c * np.sin(k * theta)
        dvals[:, 2 * k - 1] = -c * k * np.sin(k * theta)
        dvals[:, 2 * k] = c * k * np.cos(k * theta)
    return vals, dvals


def build_circle(num_modes: int, radius: float = 1.0) -> ManifoldDiscretization:
    """Circle of the given radius with basis ``1, cos k t, sin k t`` for
    ``1 <= k <= num_modes``; the coframe is arc length, so ``g^{-1} = 1``."""
    if num_modes < 2:
        raise ConfigurationError("num_modes must be at least 2")
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    nq = 4 * num_modes
    theta = 2 * math.pi * np.arange(nq) / nq
    length = 2 * math.pi * radius
    vals, dvals = _fourier_1d(theta, num_modes, length)
    spectrum = ((0.0, 1),) + tuple((k * k / radius**2, 2) for k in range(1, num_modes + 1))

    def evaluator(t):
        return _fourier_1d(np.asarray(t, dtype=float).reshape(-1), num_modes, length)[0]

    return ManifoldDiscretization(
        kind=Kind.CIRCLE,
        dim=1,
        n_dof=2 * num_modes + 1,
        weights=np.full(nq, length / nq),
        inverse_metric=np.ones((nq, 1, 1)),
        gradients=dvals / radius,
        values=vals,
        coords=theta[:, None],
        node_coords=theta[:, None],
        analytic_spectrum=spectrum,
        params={"num_modes": num_modes, "radius": radius},
        evaluator=evaluator,
    )


# -- flat torus ---------------------------------------------------------------


def build_flat_torus(
    modes1: int, modes2: int, period1: float = 2 * math.pi, period2: float = 2 * math.pi
) -> ManifoldDiscretization:
    """Flat torus ``R^2 / (period1 Z x period2 Z)`` with the tensor-product
    Fourier basis.

    Gradients are taken in the angular coframe ``(d theta_1, d theta_2)``,
    ``theta_i = 2 pi x_i / period_i``, so the inverse metric is
    ``diag((2 pi / period_1)^2, (2 pi / period_2)^2)``.
    """
    if modes1 < 2 or modes2 < 2:
        raise ConfigurationError("modes1 and modes2 must be at least 2")
    if period1 <= 0 or period2 <= 0:
        raise ConfigurationError("periods must be positive")
    n1, n2 = 4 * modes1, 4 * modes2
    t1 = 2 * math.pi * np.arange(n1) / n1
    t2 = 2 * math.pi * np.arange(n2) / n2

    def basis(a1, a2):
        v1, d1 = _fourier_1d(a1, modes1, period1)
        v2, d2 = _fourier_1d(a2, modes2, period2)
        vals = (v1[:, :, None] * v2[:, None, :]).reshape(len(a1), -1)
        g1 = (d1[:, :, None] * v2[:, None, :]).reshape(len(a1), -1)
        g2 = (v1[:, :, None] * d2[:, None, :]).reshape(len(a1), -1)
        return vals, g1, g2

    a1, a2 = (x.ravel() for x in np.meshgrid(t1, t2, indexing="ij"))
    vals, g1, g2 = basis(a1, a2)
    nq = len(a1)
    grads = np.stack([g1, g2], axis=1).reshape(2 * nq, -1)
    s1, s2 = (2 * math.pi / period1) ** 2, (2 * math.pi / period2) ** 2
    inv_metric = np.tile(np.diag([s1, s2]), (nq, 1, 1))

    k1 = np.arange(-modes1, modes1 + 1)
    k2 = np.arange(-modes2, modes2 + 1)
    lattice = (s1 * k1[:, None] ** 2 + s2 * k2[None, :] ** 2).ravel()

    def evaluator(angles):
        angles = np.atleast_2d(np.asarray(angles, dtype=float))
        return basis(angles[:, 0], angles[:, 1])[0]

    coords = np.column_stack([a1, a2])
    return ManifoldDiscretization(
        kind=Kind.FLAT_TORUS,
        dim=2,
        n_dof=(2 * modes1 + 1) * (2 * modes2 + 1),
        weights=np.full(nq, period1 * period2 / nq),
        inverse_metric=inv_metric,
        gradients=grads,
        values=vals,
        coords=coords,
        node_coords=coords,
        analytic_spectrum=_merge_spectrum(lattice),
        params={"modes1": modes1, "modes2": modes2, "period1": period1, "period2": period2},
        evaluator=evaluator,
    )


# -- sphere -------------------------------------------------------------------


def _real_harmonics(theta: np.ndarray, phi: np.ndarray, max_degree: int, radius: float):
    """Real orthonormal spherical harmonics on the sphere of given radius,
    with gradient components in the orthonormal coframe (e_theta, e_phi).

    Ordering: degree l ascending; within a degree m = 0, then (cos, sin)
    pairs for m = 1..l. Points must avoid the poles.
    """
    p = sph_legendre_p_all(max_degree, max_degree, theta, diff_n=1)
    leg, dleg = p[0], p[1]
    sin_t = np.sin(theta)
    n = (max_degree + 1) ** 2
    vals = np.empty((len(theta), n))
    gth = np.empty_like(vals)
    gph = np.empty_like(vals)
    col = 0
    r2 = math.sqrt(2.0)
    for l in range(max_degree + 1):
        vals[:, col] = leg[l, 0]
        gth[:, col] = dleg[l, 0]
        gph[:, col] = 0.0
        col += 1
        for m in range(1, l + 1):
            c, s = np.cos(m * phi), np.sin(m * phi)
            pl, dpl = r2 * leg[l, m], r2 * dleg[l, m]
            vals[:, col], vals[:, col + 1] = pl * c, pl * s
            gth[:, col], gth[:, col + 1] = dpl * c, dpl * s
            gph[:, col], gph[:, col + 1] = -m * pl * s / sin_t, m * pl * c / sin_t
            col += 2
    return vals / radius, gth / radius**2, gph / radius**2


def build_sphere(max_degree: int, radius: float = 1.0) -> ManifoldDiscretization:
    """Round sphere with real spherical harmonics of degree <= max_degree.

    Quadrature is Gauss-Legendre in ``cos(theta)`` times a uniform
    longitude grid, sized so that products of two basis functions (and of
    their gradients) integrate exactly.
    """
    if max_degree < 2:
        raise ConfigurationError("max_degree must be at least 2")
    if radius <= 0:
        raise ConfigurationError("radius must be positive")
    n_theta = 2 * (max_degree + 1)
    n_phi = 4 * (max_degree + 1)
    x, w = np.polynomial.legendre.leggauss(n_theta)
    theta_1d = np.arccos(x)
    phi_1d = 2 * math.pi * np.arange(n_phi) / n_phi
    th, ph = (a.ravel() for a in np.meshgrid(theta_1d, phi_1d, indexing="ij"))
    weights = (radius**2 * (2 * math.pi / n_phi) * np.repeat(w, n_phi))

    vals, gth, gph = _real_harmonics(th, ph, max_degree, radius)
    nq = len(th)
    grads = np.stack([gth, gph], axis=1).reshape(2 * nq, -1)
    st, ct, sp_, cp = np.sin(th), np.cos(th), np.sin(ph), np.cos(ph)
    ambient = radius * np.column_stack([st * cp, st * sp_, ct])
    e_theta = np.column_stack([ct * cp, ct * sp_, -st])
    e_phi = np.column_stack([-sp_, cp, np.zeros_like(ph)])
    frames = np.stack([e_theta, e_phi], axis=2)

    def evaluator(points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return _real_harmonics(points[:, 0], points[:, 1], max_degree, radius)[0]

    return ManifoldDiscretization(
        kind=Kind.SPHERE,
        dim=2,
        n_dof=(max_degree + 1) ** 2,
        weights=weights,
        inverse_metric=np.tile(np.eye(2), (nq, 1, 1)),
        gradients=grads,
        values=vals,
        coords=ambient,
        node_coords=ambient,
        frames=frames,
        analytic_spectrum=tuple(
            (l * (l + 1) / radius**2, 2 * l + 1) for l in range(max_degree + 1)
        ),
        params={"max_degree": max_degree, "radius": radius},
        evaluator=evaluator,
    )


# -- triangle mesh --------------------------------------------------------------


def mesh_discretization(tri: meshlib.TriangleMesh) -> ManifoldDiscretization:
    """P1 elements on a closed triangle mesh.

    Each triangle carries one quadrature node at its barycenter with weight
    equal to its area, and an orthonormal frame whose first axis is the
    triangle's first edge, so ``g^{-1}`` is the identity there.
    """
    meshlib.check_closed_manifold(tri)
    v, f = tri.vertices, tri.faces
    p0, p1, p2 = v[f[:, 0]], v[f[:, 1]], v[f[:, 2]]
    e1 = p1 - p0
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    normal = np.cross(p1 - p0, p2 - p0)
    area = 0.5 * np.linalg.norm(normal, axis=1)
    normal /= np.linalg.norm(normal, axis=1, keepdims=True)
    e2 = np.cross(normal, e1)

    # local 2D coordinates of the corners, p0 at the origin
    x1 = np.einsum("ij,ij->i", p1 - p0, e1)
    x2 = np.einsum("ij,ij->i", p2 - p0, e1)
    y2 = np.einsum("ij,ij->i", p2 - p0, e2)
    twice = x1 * y2  # = 2 * area, positive by construction of e2
    # barycentric gradients: rows are corners, columns frame components
    grad = np.empty((len(f), 3, 2))
    grad[:, 0] = np.column_stack([-y2, x2 - x1]) / twice[:, None]
    grad[:, 1] = np.column_stack([y2, -x2]) / twice[:, None]
    grad[:, 2] = np.column_stack([np.zeros_like(x1), x1]) / twice[:, None]

    nf = len(f)
    rows = (2 * np.arange(nf)[:, None, None] + np.arange(2)[None, None, :]).repeat(3, axis=1)
    cols = np.broadcast_to(f[:, :, None], (nf, 3, 2))
    grads = sp.csr_matrix(
        (grad.ravel(), (rows.ravel(), cols.ravel())), shape=(2 * nf, tri.n_vertices)
    )
    lumped = np.zeros(tri.n_vertices)
    np.add.at(lumped, f.ravel(), np.repeat(area / 3.0, 3))

    return ManifoldDiscretization(
        kind=Kind.TRIANGLE_MESH,
        dim=2,
        n_dof=tri.n_vertices,
        weights=area,
        inverse_metric=np.tile(np.eye(2), (nf, 1, 1)),
        gradients=grads,
        values=None,
        coords=(p0 + p1 + p2) / 3.0,
        node_coords=v,
        frames=np.stack([e1, e2], axis=2),
        params={"n_vertices": tri.n_vertices, "n_faces": nf},
        mesh=tri,
        lumped_mass=lumped,
    )


def load_mesh(source: meshlib.Source) -> ManifoldDiscretization:
    """Read a closed triangulated surface in OFF format (bytes, path or
    binary file object)."""
    return mesh_discretization(meshlib.parse_off(source))


def build_icosphere(level: int, radius: float = 1.0) -> ManifoldDiscretization:
    return mesh_discretization(meshlib.icosphere(level, radius))


def cotangent_stiffness(tri: meshlib.TriangleMesh) -> np.ndarray:
    """Classical cotangent-weight Laplacian, assembled edge by edge."""
    v, f = tri.vertices, tri.faces
    k = np.zeros((tri.n_vertices, tri.n_vertices))
    for corner in range(3):
        i, j, o = f[:, (corner + 1) % 3], f[:, (corner + 2) % 3], f[:, corner]
        a, b = v[i] - v[o], v[j] - v[o]
        cot = np.einsum("ij,ij->i", a, b) / np.linalg.norm(np.cross(a, b), axis=1)
        np.add.at(k, (i, j), -0.5 * cot)
        np.add.at(k, (j, i), -0.5 * cot)
        np.add.at(k, (i, i), 0.5 * cot)
        np.add.at(k, (j, j), 0.5 * cot)
    return k


# -- Laplace spectrum ---------------------------------------------------------------


def laplace_eigenpairs(disc: ManifoldDiscretization, count: int, gap_rel_tol: float = 1e-6) -> SpectrumResult:
    """Lowest eigenpairs of ``K u = lambda M u`` (the discrete ``-Delta``),
    widened to whole multiplicity clusters."""
    if not 1 <= count <= disc.n_dof:
        raise ConfigurationError(f"count must lie in [1, {disc.n_dof}]")
    vals, vecs = lowest_eigenpairs(
        disc.stiffness_matrix(), disc.mass_matrix(), count, gap_rel_tol
    )
    return SpectrumResult(vals, vecs, cluster_indices(vals, gap_rel_tol), Method.DENSE)


def second_eigenvalue(disc: ManifoldDiscretization, gap_rel_tol: float = 1e-6) -> tuple[float, np.ndarray]:
    """``lambda_2`` of ``-Delta`` (the smallest positive eigenvalue) and an
    M-orthonormal basis of its eigenspace."""
    count = min(disc.n_dof, 2)
    while True:
        res = laplace_eigenpairs(disc, count, gap_rel_tol)
        if len(res.clusters) >= 2:
            return res.cluster_values()[1], res.cluster_vectors(1)
        if count >= disc.n_dof:
            raise ConfigurationError("discretization has no positive Laplace eigenvalue")
        count = min(disc.n_dof, len(res) + 1)
