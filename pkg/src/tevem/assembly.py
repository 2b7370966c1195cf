"""Global numbering and assembly of the generalized eigenpencil (A, B).

Free DOFs are the four vertex unknowns of every interior vertex.  The
u-block (value, d/dx, d/dy per interior vertex, vertex-major) comes first,
then the phi-block.  Boundary vertices are clamped by elimination: their
value, gradient and phi DOFs simply do not appear in the pencil.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.io
import scipy.sparse as sps

from . import kernels
from .mesh import PolygonalMesh, geometry
from .vem_local import check_index

BOUNDARY = -1


@dataclass(frozen=True)
class DofMap:
    vertex_rank: np.ndarray  # rank among interior vertices, BOUNDARY otherwise
    n_interior: int

    @property
    def n_u(self) -> int:
        return 3 * self.n_interior

    @property
    def n_free(self) -> int:
        return 4 * self.n_interior

    def u_index(self, v: int, comp: int = 0) -> int:
        r = self.vertex_rank[v]
        return BOUNDARY if r < 0 else 3 * int(r) + comp

    def phi_index(self, v: int) -> int:
        r = self.vertex_rank[v]
        return BOUNDARY if r < 0 else self.n_u + int(r)

    def cell_dofs(self, cell: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Global indices of the local W and V DOFs of a cell (BOUNDARY if clamped)."""
        r = self.vertex_rank[cell]
        w = (3 * r[:, None] + np.arange(3)).ravel()
        w[np.repeat(r < 0, 3)] = BOUNDARY
        v = np.where(r < 0, BOUNDARY, self.n_u + r)
        return w, v


def build_dof_map(mesh: PolygonalMesh) -> DofMap:
    rank = np.full(mesh.n_vertices, BOUNDARY, dtype=np.int64)
    interior = mesh.interior_vertices
    if len(interior) == 0:
        raise ValueError("mesh has no interior vertices, nothing to solve for")
    rank[interior] = np.arange(len(interior))
    return DofMap(rank, len(interior))


@dataclass(frozen=True)
class EigenPencil:
    """``A x = lambda B x`` on the free DOFs; rows are test, columns trial functions."""

    A: sps.csr_matrix
    B: sps.csr_matrix
    dof_map: DofMap
    n_index: float

    @property
    def shape(self):
        return self.A.shape

    def dump(self, prefix) -> list[str]:
        """Write A and B as MatrixMarket coordinate files ``<prefix>_A.mtx`` etc."""
        paths = []
        for name, mat in (("A", self.A), ("B", self.B)):
            p = f"{prefix}_{name}.mtx"
            scipy.io.mmwrite(p, mat.tocoo(), precision=17)
            paths.append(p)
        return paths


def _triplets(rows_idx, cols_idx, blocks):
    I = np.broadcast_to(rows_idx[:, :, None], blocks.shape).ravel()
    J = np.broadcast_to(cols_idx[:, None, :], blocks.shape).ravel()
    V = blocks.ravel()
    keep = (I >= 0) & (J >= 0)
    return I[keep], J[keep], V[keep]


def _to_csr(triplets, size):
    """One COO -> CSR conversion with duplicates summed."""
    I, J, V = (np.concatenate(t) for t in zip(*triplets))
    mat = sps.coo_matrix((V, (I, J)), shape=(size, size)).tocsr()
    mat.sum_duplicates()
    return mat


def assemble(mesh: PolygonalMesh, n_index: float, backend: str | None = None) -> EigenPencil:
    check_index(n_index)
    dofs = build_dof_map(mesh)
    vertex_h = geometry(mesh).vertex_h
    blocks = kernels.element_blocks(mesh, float(n_index), vertex_h, backend=backend)
    a_parts, b_parts = [], []
    # cells are grouped by vertex count so blocks stack into dense arrays
    for nk, group in blocks.items():
        cells = np.array([mesh.cells[k] for k in group.cells])
        r = dofs.vertex_rank[cells]
        w = (3 * r[:, :, None] + np.arange(3)).reshape(len(cells), 3 * nk)
        w[np.repeat(r < 0, 3, axis=1)] = BOUNDARY
        v = np.where(r < 0, BOUNDARY, dofs.n_u + r)
        a_parts += [_triplets(w, w, group.A_W), _triplets(v, v, group.A_V)]
        b_parts += [
            _triplets(w, w, group.B_uu),
            _triplets(w, v, group.B_uphi),
            _triplets(v, w, group.B_psiu),
        ]
    size = dofs.n_free
    A = _to_csr(a_parts, size)
    # duplicate summation order is not specified, so mirror entries can differ
    # in the last bit; a + a^T is symmetric to the bit since fp addition commutes
    A = ((A + A.T) * 0.5).tocsr()
    A.sum_duplicates()
    return EigenPencil(A, _to_csr(b_parts, size), dofs, float(n_index))
