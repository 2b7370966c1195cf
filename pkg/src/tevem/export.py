"""Eigenfunction output as legacy ASCII VTK.

Virtual functions cannot be evaluated inside a cell, so each cell is drawn
with its Hessian-projected quadratic (and the P1 projection of phi): the
polynomial is sampled at the cell's vertices and centroid, and the cell is
written as a fan of triangles around the centroid.  Points are not shared
between cells, so the picture shows the (small) interelement jumps of the
projection.
"""

from __future__ import annotations

import numpy as np

from .assembly import EigenPencil
from .mesh import PolygonalMesh
from .vem_local import LocalElement, grad_projector_p1, hessian_projector, monomials


def projected_samples(mesh: PolygonalMesh, pencil: EigenPencil, x: np.ndarray):
    """Points, triangles and sampled (u, phi) of one eigenvector."""
    dofs = pencil.dof_map
    pts, tris, u_vals, phi_vals = [], [], [], []
    base = 0
    for cell in mesh.cells:
        el = LocalElement(mesh.vertices[cell])
        w, v = dofs.cell_dofs(cell)
        uw = np.where(w >= 0, x[np.maximum(w, 0)], 0.0)
        pv = np.where(v >= 0, x[np.maximum(v, 0)], 0.0)
        cu = hessian_projector(el) @ uw
        cp = grad_projector_p1(el) @ pv
        xi = np.vstack([el.xi, [0.0, 0.0]])  # vertices, then the centroid
        m = monomials(xi)
        pts.append(np.vstack([el.geom.vertices, el.geom.centroid]))
        u_vals.append(m @ cu)
        phi_vals.append(m[:, :3] @ cp)
        n = el.n
        tris += [[base + i, base + (i + 1) % n, base + n] for i in range(n)]
        base += n + 1
    return np.vstack(pts), np.array(tris), np.concatenate(u_vals), np.concatenate(phi_vals)


def write_vtk(path, mesh: PolygonalMesh, pencil: EigenPencil, x: np.ndarray, title: str = "eigenfunction"):
    pts, tris, u, phi = projected_samples(mesh, pencil, x)
    lines = ["# vtk DataFile Version 3.0", title[:255], "ASCII", "DATASET UNSTRUCTURED_GRID"]
    lines.append(f"POINTS {len(pts)} double")
    lines += [f"{a!r} {b!r} 0.0" for a, b in pts.tolist()]
    lines.append(f"CELLS {len(tris)} {4 * len(tris)}")
    lines += [f"3 {a} {b} {c}" for a, b, c in tris.tolist()]
    lines.append(f"CELL_TYPES {len(tris)}")
    lines += ["7"] * len(tris)  # VTK_POLYGON
    lines.append(f"POINT_DATA {len(pts)}")
    for name, vals in (("u_re", u.real), ("u_im", u.imag), ("phi_re", phi.real), ("phi_im", phi.imag)):
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [repr(float(s)) for s in vals]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
