"""Lloyd-relaxed Voronoi meshes of the square domains.

Seeds are mirrored across the four sides before each Voronoi construction,
so the cells of the original seeds tile the square exactly.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import Voronoi

from .core import MeshError, PolygonalMesh, signed_area

LLOYD_ITERATIONS = 100


def _mirrored(points, lo, hi):
    out = [points]
    for axis in (0, 1):
        for wall in (lo[axis], hi[axis]):
            p = points.copy()
            p[:, axis] = 2.0 * wall - p[:, axis]
            out.append(p)
    return np.vstack(out)


def _cells(points, lo, hi):
    vor = Voronoi(_mirrored(points, lo, hi))
    polys = []
    for i in range(len(points)):
        region = vor.regions[vor.point_region[i]]
        if -1 in region or not region:
            raise MeshError("unbounded Voronoi cell; seeds must lie strictly inside the square")
        polys.append(region)
    return vor.vertices, polys


def _centroid(xy):
    x, y = xy[:, 0], xy[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    a = 0.5 * cross.sum()
    return np.array([((x + xn) * cross).sum(), ((y + yn) * cross).sum()]) / (6.0 * a)


def voronoi_mesh(domain: str, N: int, seed: int, iterations: int = LLOYD_ITERATIONS) -> PolygonalMesh:
    """About ``N`` cells per side; seeds from ``default_rng(seed)``, then Lloyd steps."""
    if domain not in ("unit_square", "centered_square"):
        raise MeshError(f"voronoi meshes are only available on square domains, not {domain!r}")
    lo = np.array([0.0, 0.0]) if domain == "unit_square" else np.array([-0.5, -0.5])
    hi = lo + 1.0
    rng = np.random.default_rng(seed)
    pts = lo + 0.05 + 0.9 * rng.random((N * N, 2))
    for _ in range(iterations):
        verts, polys = _cells(pts, lo, hi)
        pts = np.array([_centroid(verts[r]) for r in polys])
    verts, polys = _cells(pts, lo, hi)
    verts = np.clip(verts, lo, hi)

    # merge vertices closer than a tiny tolerance and renumber the used ones
    tol = 1e-10
    key = np.round(verts / tol).astype(np.int64)
    _, canon, inverse = np.unique(key, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    cells = []
    for r in polys:
        loop = [int(inverse[v]) for v in r]
        loop = [v for k, v in enumerate(loop) if v != loop[k - 1]]
        if signed_area(verts[canon][loop]) < 0:
            loop = loop[::-1]
        cells.append(loop)
    used = sorted({v for c in cells for v in c})
    renum = {v: k for k, v in enumerate(used)}
    coords = verts[canon][used]
    cells = [[renum[v] for v in c] for c in cells]
    return PolygonalMesh(coords, cells, domain, {"family": "voronoi", "N": N, "seed": int(seed)})
