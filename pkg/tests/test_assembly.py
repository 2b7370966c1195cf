import numpy as np
import pytest
import scipy.io
import scipy.sparse as sps

from tevem.assembly import BOUNDARY, assemble, build_dof_map
from tevem.eigensolve import spd_factorize
from tevem.mesh import PolygonalMesh, generate_structured


def test_single_interior_vertex():
    p = assemble(generate_structured("unit_square", "triangle", 2), 16.0)
    assert p.shape == (4, 4)
    assert np.all(np.linalg.eigvalsh(p.A.toarray()) > 0)


def test_dimension_formula():
    m = generate_structured("unit_square", "triangle", 4)
    assert build_dof_map(m).n_free == 36
    assert assemble(m, 16.0).shape == (36, 36)


def test_l_shape_dimension_by_direct_count():
    m = generate_structured("l_shape", "triangle", 4)
    x, y = m.vertices.T
    tol = 1e-12
    on_boundary = (
        (np.abs(x + 0.5) < tol) | (np.abs(y - 0.5) < tol)
        | ((np.abs(x - 0.5) < tol) & (y >= -tol))
        | ((np.abs(y + 0.5) < tol) & (x <= tol))
        | ((np.abs(x) < tol) & (y <= tol))
        | ((np.abs(y) < tol) & (x >= -tol))
    )
    assert build_dof_map(m).n_free == 4 * int(np.count_nonzero(~on_boundary))


@pytest.mark.parametrize("family", ["triangle", "quad", "hex", "distorted_hex", "voronoi"])
def test_exact_symmetry(family):
    p = assemble(generate_structured("unit_square", family, 8), 4.0)
    d = p.A - p.A.T
    assert d.nnz == 0 or np.max(np.abs(d.data)) == 0.0


def test_translation_invariance():
    m = generate_structured("unit_square", "hex", 6)
    a = assemble(m, 16.0)
    b = assemble(m.translated([0.3, -0.7]), 16.0)
    for x, y in ((a.A, b.A), (a.B, b.B)):
        assert np.max(np.abs((x - y).toarray())) <= 1e-12 * np.abs(x).max()


def test_deterministic():
    m = generate_structured("disk", "polar", 16)
    a, b = assemble(m, 16.0), assemble(m, 16.0)
    for x, y in ((a.A, b.A), (a.B, b.B)):
        assert np.array_equal(x.indptr, y.indptr) and np.array_equal(x.indices, y.indices)
        assert np.array_equal(x.data, y.data)


@pytest.mark.parametrize("domain,family", [("unit_square", "triangle"), ("disk", "polar"), ("l_shape", "quad")])
def test_spd(domain, family):
    spd_factorize(assemble(generate_structured(domain, family, 8), 16.0).A)


def test_boundary_dofs_eliminated():
    m = generate_structured("unit_square", "quad", 3)
    dofs = build_dof_map(m)
    for v in np.flatnonzero(m.boundary_vertex):
        assert dofs.u_index(v) == BOUNDARY and dofs.phi_index(v) == BOUNDARY
    inner = m.interior_vertices
    assert sorted(dofs.phi_index(v) for v in inner) == list(range(dofs.n_u, dofs.n_free))


def test_b_block_structure():
    p = assemble(generate_structured("unit_square", "triangle", 4), 16.0)
    nu = p.dof_map.n_u
    B = p.B.toarray()
    assert np.all(B[nu:, nu:] == 0)  # no psi-phi coupling
    assert np.abs(B[:nu, nu:]).max() > 0 and np.abs(B[nu:, :nu]).max() > 0


def test_no_interior_vertices():
    m = PolygonalMesh(np.array([[0, 0], [1, 0], [0, 1]], float), [[0, 1, 2]])
    with pytest.raises(ValueError, match="no interior"):
        assemble(m, 16.0)


@pytest.mark.parametrize("bad", [1.0, 0.9])
def test_bad_index(bad):
    with pytest.raises(ValueError):
        assemble(generate_structured("unit_square", "triangle", 2), bad)


def test_matrix_market_round_trip(tmp_path):
    p = assemble(generate_structured("unit_square", "hex", 4), 4.0)
    pa, pb = p.dump(str(tmp_path / "pencil"))
    A = sps.csr_matrix(scipy.io.mmread(pa))
    B = sps.csr_matrix(scipy.io.mmread(pb))
    assert np.array_equal(A.toarray(), p.A.toarray())
    assert np.array_equal(B.toarray(), p.B.toarray())


def test_backends_give_same_pencil():
    from tevem import kernels

    if "fast" not in kernels.available_backends():
        pytest.skip("extension not built")
    m = generate_structured("unit_square", "distorted_hex", 8)
    a = assemble(m, 4.0, backend="fast")
    b = assemble(m, 4.0, backend="reference")
    assert abs(a.A - b.A).max() <= 1e-12 * abs(b.A).max()
    assert abs(a.B - b.B).max() <= 1e-12 * abs(b.B).max()
