"""Structured mesh families on the test domains.

Refinement parameter ``N``:

* square and L-shaped domains: number of cells along each (unit-length) edge;
* disk: number of cells touching the boundary circle.
"""

from __future__ import annotations

import math

import numpy as np

from .core import DISK_RADIUS, MeshError, PolygonalMesh, signed_area

SQUARE_DOMAINS = ("unit_square", "centered_square")
_ORIGIN = {"unit_square": (0.0, 0.0), "centered_square": (-0.5, -0.5), "l_shape": (-0.5, -0.5)}

_ALLOWED = {
    "triangle": ("unit_square", "centered_square", "l_shape"),
    "quad": ("unit_square", "centered_square", "l_shape"),
    "hex": SQUARE_DOMAINS,
    "distorted_hex": SQUARE_DOMAINS,
    "polar": ("disk",),
    "voronoi": SQUARE_DOMAINS,
}

DEFAULT_SEED = 20190101


def generate_structured(domain: str, family: str, N: int, seed: int | None = None) -> PolygonalMesh:
    """Build a mesh of ``domain`` from the given ``family`` at refinement ``N``."""
    if family not in _ALLOWED:
        raise MeshError(f"unknown mesh family {family!r}")
    if domain not in _ALLOWED[family]:
        raise MeshError(f"family {family!r} is not available on domain {domain!r}")
    if not isinstance(N, (int, np.integer)) or N < 2:
        raise MeshError(f"N must be an integer >= 2, got {N!r}")
    if family in ("triangle", "quad"):
        if domain == "l_shape":
            return _l_shape(family, int(N))
        return _grid(family, int(N), _ORIGIN[domain], domain)
    if family == "hex":
        return _hexagonal(int(N), _ORIGIN[domain], domain)
    if family == "distorted_hex":
        seed = DEFAULT_SEED if seed is None else seed
        return distort(_hexagonal(int(N), _ORIGIN[domain], domain), seed)
    if family == "polar":
        return _polar_disk(int(N))
    from .voronoi import voronoi_mesh

    return voronoi_mesh(domain, int(N), DEFAULT_SEED if seed is None else seed)


# --------------------------------------------------------------------------- grids


def _grid_cells(family, N, vid, keep=lambda i, j: True, center=(0.5, 0.5)):
    """Cells of an N x N grid; triangles split each square along one diagonal.

    The diagonal of a square is perpendicular to the direction towards
    ``center`` (in grid units), so the triangulation inherits every mirror
    symmetry of the square about that point.
    """
    cells = []
    for j in range(N):
        for i in range(N):
            if not keep(i, j):
                continue
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if family == "quad":
                cells.append([a, b, c, d])
                continue
            dx = (i + 0.5) / N - center[0]
            dy = (j + 0.5) / N - center[1]
            if dx * dy > 0:
                cells += [[a, b, d], [b, c, d]]
            else:
                cells += [[a, b, c], [a, c, d]]
    return cells


def _grid(family, N, origin, domain):
    x = origin[0] + np.arange(N + 1) / N
    y = origin[1] + np.arange(N + 1) / N
    X, Y = np.meshgrid(x, y)
    verts = np.column_stack([X.ravel(), Y.ravel()])
    cells = _grid_cells(family, N, lambda i, j: j * (N + 1) + i)
    return PolygonalMesh(verts, cells, domain, {"family": family, "N": N})


def _l_shape(family, N):
    """(-1/2, 1/2)^2 minus [0, 1/2] x [-1/2, 0], ``N`` cells per unit length."""
    if N % 2:
        raise MeshError("the L-shaped domain needs an even N")
    half = N // 2

    def keep(i, j):
        return not (i >= half and j < half)

    used = {}
    coords = []

    def vid(i, j):
        if (i, j) not in used:
            used[(i, j)] = len(coords)
            coords.append((-0.5 + i / N, -0.5 + j / N))
        return used[(i, j)]

    # diagonals arranged around the re-entrant corner keep the y = -x mirror symmetry
    cells = _grid_cells(family, N, vid, keep)
    return PolygonalMesh(np.array(coords), cells, "l_shape", {"family": family, "N": N})


# --------------------------------------------------------------------------- hexagons


def _hexagonal(N, origin, domain):
    """Honeycomb of convex hexagons with clipped cells along the boundary.

    Rows alternate between an unshifted brick layout and one shifted by half a
    cell; interior horizontal lines zig-zag so every brick becomes a convex
    hexagon.  Abscissae are stored in half-cell units ``X`` (x = X / 2N).
    """
    H = 1.0 / N
    delta = H / 6.0
    index: dict[tuple[int, int], int] = {}
    coords: list[tuple[float, float]] = []

    def corner_of(row, X):
        # boundary clips X = 0, 2N of shifted rows are not corners
        return X % 2 == row % 2

    def vid(X, line):
        key = (X, line)
        if key not in index:
            y = line * H
            if 0 < line < N:
                below, above = line - 1, line
                # own corners dip toward the row they bound, neighbours' corners rise
                if corner_of(below, X):
                    y -= delta
                elif corner_of(above, X):
                    y += delta
            index[key] = len(coords)
            coords.append((origin[0] + X * H / 2.0, origin[1] + y))
        return index[key]

    def side(lo, hi, line, reverse):
        xs = [lo, hi]
        if 0 < line < N and hi - lo == 2:
            xs = [lo, lo + 1, hi]
        if reverse:
            xs = xs[::-1]
        return [vid(X, line) for X in xs]

    cells = []
    for row in range(N):
        if row % 2 == 0:
            spans = [(2 * i, 2 * i + 2) for i in range(N)]
        else:
            spans = [(max(0, 2 * i - 1), min(2 * N, 2 * i + 1)) for i in range(N + 1)]
        for lo, hi in spans:
            cells.append(side(lo, hi, row, False) + side(lo, hi, row + 1, True))
    return PolygonalMesh(np.array(coords), cells, domain, {"family": "hex", "N": N})


def _is_convex(xy):
    d1 = xy - np.roll(xy, 1, axis=0)
    d2 = np.roll(xy, -1, axis=0) - xy
    cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
    return bool(np.all(cross > 0))


def distort(mesh: PolygonalMesh, seed: int, amplitude: float = 0.2) -> PolygonalMesh:
    """Randomly move interior vertices, keeping every cell convex.

    Each interior vertex moves by at most ``amplitude`` times its shortest
    incident edge (measured on the input mesh).  A move that would break the
    convexity of an incident cell is halved until it does not.
    """
    rng = np.random.default_rng(seed)
    xy = mesh.vertices.copy()
    shortest = np.full(mesh.n_vertices, np.inf)
    for a, b in mesh.edges:
        L = np.linalg.norm(xy[a] - xy[b])
        shortest[a] = min(shortest[a], L)
        shortest[b] = min(shortest[b], L)
    incident: list[list[int]] = [[] for _ in range(mesh.n_vertices)]
    for k, c in enumerate(mesh.cells):
        for v in c.tolist():
            incident[v].append(k)
    interior = mesh.interior_vertices
    radius = amplitude * shortest[interior] * np.sqrt(rng.random(len(interior)))
    angle = 2.0 * np.pi * rng.random(len(interior))
    moves = radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])
    for v, step in zip(interior.tolist(), moves):
        base = xy[v].copy()
        for _ in range(8):
            xy[v] = base + step
            if all(_is_convex(xy[mesh.cells[k]]) for k in incident[v]):
                break
            step = 0.5 * step
        else:
            xy[v] = base
    meta = dict(mesh.metadata, family="distorted_hex", seed=int(seed))
    return PolygonalMesh(xy, [c.copy() for c in mesh.cells], mesh.domain_tag, meta)


# --------------------------------------------------------------------------- disk


def polar_layout(N: int) -> list[int]:
    """Vertex count on each ring circle, innermost first; the last equals ``N``.

    There are ``round(3N/16)`` rings, so the radial spacing ``dr`` is close to
    the boundary arc length and doubles exactly with ``N``.  Going inward the
    sector count halves as long as the arc length stays above ``dr / sqrt 2``,
    which keeps every cell's aspect ratio within ``[1/sqrt 2, sqrt 2]``.
    """
    M = max(1, round(3 * N / 16))
    counts = [N]
    for k in range(M - 1, 0, -1):
        c = counts[-1]
        # arc after halving at radius k*dr is 4 pi k dr / c
        if c % 2 == 0 and c // 2 >= max(3, math.ceil(2 * math.pi * k / math.sqrt(2))):
            c //= 2
        counts.append(c)
    return counts[::-1]


def _polar_disk(N):
    """Rings x sectors mesh of the disk x^2 + y^2 < 1/4 with chord boundary.

    The innermost ring is a fan of triangles; the sector count halves toward
    the centre, producing pentagons (one hanging vertex) at the transitions.
    """
    if N < 3:
        raise MeshError("the polar disk mesh needs N >= 3")
    counts = polar_layout(N)
    M = len(counts)
    coords = [(0.0, 0.0)]
    start = []
    for k, c in enumerate(counts, start=1):
        r = DISK_RADIUS * k / M
        start.append(len(coords))
        t = 2.0 * np.pi * np.arange(c) / c
        coords += list(zip(r * np.cos(t), r * np.sin(t)))

    def ring_vertex(k, m):
        c = counts[k]
        return start[k] + m % c

    cells = [[0, ring_vertex(0, m), ring_vertex(0, m + 1)] for m in range(counts[0])]
    for k in range(1, M):
        ci, co = counts[k - 1], counts[k]
        ratio = co // ci
        for m in range(ci):
            outer = [ring_vertex(k, ratio * m + s) for s in range(ratio + 1)]
            cells.append([ring_vertex(k - 1, m + 1), ring_vertex(k - 1, m)] + outer)
    mesh = PolygonalMesh(np.array(coords), cells, "disk", {"family": "polar", "N": N})
    return mesh


def inscribed_polygon_area(N: int) -> float:
    """Area of the regular N-gon inscribed in the boundary circle."""
    return 0.5 * N * DISK_RADIUS**2 * math.sin(2.0 * math.pi / N)


def domain_area(mesh: PolygonalMesh) -> float:
    return sum(signed_area(mesh.cell_coords(k)) for k in range(mesh.n_cells))
