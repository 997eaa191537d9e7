import io
import math

import numpy as np
import pytest

from eslees import build_circle, build_flat_torus, build_sphere, laplace_eigenpairs, load_mesh, second_eigenvalue
from eslees.errors import ConfigurationError, DegenerateElement, FormatError, NonManifold, NotClosed
from eslees.manifold import Kind, cotangent_stiffness, mesh_discretization
from eslees.mesh import TriangleMesh, check_closed_manifold, icosphere, octahedron, parse_off, write_off


def test_circle_basis_count_and_volume():
    d = build_circle(2, 1.0)
    assert d.n_dof == 5
    assert d.volume == pytest.approx(2 * math.pi, rel=1e-12)


@pytest.mark.parametrize("radius, expected", [(1.0, 1.0), (2.0, 0.25)])
def test_circle_second_spectrum_entry(radius, expected):
    spec = build_circle(8, radius).analytic_spectrum
    assert spec[0] == (0.0, 1)
    assert spec[1][0] == pytest.approx(expected, rel=1e-14)
    assert spec[1][1] == 2


@pytest.mark.parametrize("L2, expected", [(2 * math.pi, (1.0, 4)), (math.pi, (1.0, 2))])
def test_torus_second_spectrum_entry(L2, expected):
    value, mult = build_flat_torus(2, 2, 2 * math.pi, L2).analytic_spectrum[1]
    assert value == pytest.approx(expected[0], rel=1e-14)
    assert mult == expected[1]


def test_torus_volume():
    assert build_flat_torus(3, 3, 2 * math.pi, 2 * math.pi).volume == pytest.approx(4 * math.pi**2, rel=1e-12)


def test_sphere_examples():
    d = build_sphere(4, 1.0)
    assert d.n_dof == 25
    assert d.analytic_spectrum[1] == (2.0, 3)
    assert build_sphere(3, 2.0).volume == pytest.approx(16 * math.pi, rel=1e-12)


@pytest.mark.parametrize(
    "builder",
    [lambda: build_circle(1), lambda: build_flat_torus(1, 3, 1.0, 1.0), lambda: build_sphere(1)],
)
def test_too_few_modes_rejected(builder):
    with pytest.raises(ConfigurationError):
        builder()


def test_weights_positive_and_symmetric_metric(any_disc):
    assert np.all(any_disc.weights > 0)
    g = any_disc.inverse_metric
    assert np.allclose(g, np.swapaxes(g, 1, 2), atol=0)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_spectral_mass_is_identity(any_disc):
    if not any_disc.kind.spectral:
        pytest.skip("mesh mass is lumped")
    assert np.abs(any_disc.mass_matrix() - np.eye(any_disc.n_dof)).max() < 1e-12


def test_spectral_stiffness_is_diagonal_spectrum(any_disc):
    if not any_disc.kind.spectral:
        pytest.skip("mesh")
    K = any_disc.stiffness_matrix()
    expected = np.repeat(*zip(*any_disc.analytic_spectrum))
    scale = np.abs(K).max()
    assert np.abs(K - np.diag(np.diag(K))).max() <= 1e-10 * scale
    assert np.allclose(np.sort(np.diag(K)), expected, rtol=1e-10, atol=1e-10 * scale)


def test_constants_in_kernel(any_disc):
    K = any_disc.stiffness_matrix()
    assert np.abs(K @ any_disc.constant_vector()).max() <= 1e-12 * np.abs(K).max()


def test_laplace_examples(circle, sphere):
    assert np.allclose(laplace_eigenpairs(circle, 5).eigenvalues[:5], [0, 1, 1, 4, 4], atol=1e-10)
    assert np.allclose(laplace_eigenpairs(sphere, 5).eigenvalues[:5], [0, 2, 2, 2, 6], atol=1e-10)


def test_laplace_never_splits_cluster(sphere):
    res = laplace_eigenpairs(sphere, 2)
    assert len(res) == 4
    assert [len(c) for c in res.clusters] == [1, 3]


def test_laplace_ground_state_is_constant(any_disc):
    res = laplace_eigenpairs(any_disc, 3)
    assert abs(res.eigenvalues[0]) < 1e-10
    vals = any_disc.sample(res.eigenvectors[:, 0])
    assert np.ptp(vals) <= 1e-10 * np.abs(vals).max()


def test_laplace_vectors_m_orthonormal(any_disc):
    res = laplace_eigenpairs(any_disc, 8)
    U = res.eigenvectors
    assert np.abs(U.T @ any_disc.mass_matrix() @ U - np.eye(U.shape[1])).max() <= 1e-10


def test_second_eigenvalue(circle, sphere):
    lam, W = second_eigenvalue(circle)
    assert lam == pytest.approx(1.0, abs=1e-12)
    assert W.shape == (circle.n_dof, 2)
    assert second_eigenvalue(sphere)[0] == pytest.approx(2.0, abs=1e-12)


# -- meshes -------------------------------------------------------------------


def test_octahedron_loads():
    d = load_mesh(io.BytesIO(write_off(octahedron())))
    assert d.kind is Kind.TRIANGLE_MESH
    assert d.n_dof == 6
    assert d.mesh.euler_characteristic() == 2
    assert d.volume == pytest.approx(d.mesh.areas().sum(), rel=1e-12)


def test_deleted_face_is_not_closed():
    tri = octahedron()
    opened = TriangleMesh(tri.vertices, tri.faces[1:])
    with pytest.raises(NotClosed):
        load_mesh(write_off(opened))


def test_non_manifold_edge():
    tri = octahedron()
    extra = np.vstack([tri.vertices, [[0.5, 0.5, 2.0]]])
    faces = np.vstack([tri.faces, [[0, 2, 6]]])
    with pytest.raises(NonManifold):
        check_closed_manifold(TriangleMesh(extra, faces))


def test_degenerate_triangle():
    tri = octahedron()
    v = tri.vertices.copy()
    v[4] = [0.5, 0.5, 0.0]  # apex on the midpoint of edge (0, 2)
    with pytest.raises(DegenerateElement):
        load_mesh(write_off(TriangleMesh(v, tri.faces)))


@pytest.mark.parametrize(
    "text",
    [b"", b"PLY\n", b"OFF\n3 1\n0 0 0\n", b"OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n4 0 1 2 0\n",
     b"OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n", b"OFF\nx y z\n"],
)
def test_off_format_errors(text):
    with pytest.raises(FormatError):
        parse_off(text)


def test_off_comments_and_inline_counts():
    text = b"# octa\nOFF 6 8 12\n" + b"\n".join(write_off(octahedron()).splitlines()[2:]) + b"\n"
    tri = parse_off(text)
    assert tri.n_vertices == 6 and tri.n_faces == 8


def test_off_roundtrip_from_path(tmp_path):
    path = tmp_path / "ico.off"
    path.write_bytes(write_off(icosphere(1)))
    d = load_mesh(path)
    assert d.n_dof == 42


def test_icosphere_vertex_counts():
    assert [icosphere(k).n_vertices for k in range(4)] == [12, 42, 162, 642]


def test_mesh_stiffness_matches_cotangent_formula():
    tri = icosphere(2)
    d = mesh_discretization(tri)
    K = d.stiffness_matrix()
    assert np.abs(K - cotangent_stiffness(tri)).max() <= 1e-12 * np.abs(K).max()


def test_mesh_frame_metric_is_identity(ico):
    assert np.array_equal(ico.inverse_metric, np.broadcast_to(np.eye(2), ico.inverse_metric.shape))


def test_mesh_lambda2_close_to_two(ico):
    lam, W = second_eigenvalue(ico)
    assert abs(lam - 2.0) < 0.1 * 2.0
    assert W.shape[1] == 3
