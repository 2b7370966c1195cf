"""Polygonal meshes: data type, generators, file I/O, geometry and quality checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

DOMAINS = ("unit_square", "centered_square", "disk", "l_shape", "custom")
FAMILIES = ("triangle", "quad", "hex", "distorted_hex", "polar", "voronoi")
DISK_RADIUS = 0.5  # disk of diameter 1, centred at the origin
FORMAT_HEADER = "tevem-mesh 1"


class MeshError(ValueError):
    """Invalid mesh connectivity or geometry."""


class MeshFormatError(MeshError):
    """Malformed mesh file."""

    def __init__(self, msg: str, lineno: int | None = None):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {msg}" if lineno is not None else msg)


def signed_area(xy: np.ndarray) -> float:
    # relative to the first vertex: small cells far from the origin keep full accuracy
    xy = np.asarray(xy, dtype=float)
    xy = xy - xy[0]
    x, y = xy[:, 0], xy[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    # proper crossing or touching of two non-adjacent edges
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if d1 * d2 < 0 and d3 * d4 < 0:
        return True
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]):
            return True
    return False


def is_simple_polygon(xy: np.ndarray) -> bool:
    n = len(xy)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            if _segments_cross(xy[i], xy[(i + 1) % n], xy[j], xy[(j + 1) % n]):
                return False
    return True


@dataclass
class PolygonalMesh:
    """Conforming polygonal mesh of a planar, simply connected domain.

    ``cells`` are counter-clockwise vertex loops.  Boundary flags are derived
    from the connectivity, never supplied by the caller.  Construction checks
    every invariant and raises :class:`MeshError` naming the offending cell.
    """

    vertices: np.ndarray
    cells: list[np.ndarray]
    domain_tag: str = "custom"
    metadata: dict = field(default_factory=dict)
    boundary_vertex: np.ndarray = field(init=False)
    edges: np.ndarray = field(init=False, repr=False)
    boundary_edge: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.vertices = np.ascontiguousarray(self.vertices, dtype=float)
        self.cells = [np.asarray(c, dtype=np.int64) for c in self.cells]
        if self.domain_tag not in DOMAINS:
            raise MeshError(f"unknown domain tag {self.domain_tag!r}")
        self._check()

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_coords(self, k: int) -> np.ndarray:
        return self.vertices[self.cells[k]]

    @property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertex)

    def _check(self):
        nv = len(self.vertices)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 2:
            raise MeshError("vertices must be an (nv, 2) array")
        if not self.cells:
            raise MeshError("mesh has no cells")
        lo, hi = self.vertices.min(axis=0), self.vertices.max(axis=0)
        diam = float(np.hypot(*(hi - lo)))
        # duplicate vertices: sort-and-sweep in x
        order = np.argsort(self.vertices[:, 0], kind="stable")
        xs = self.vertices[order]
        tol = 1e-12 * diam
        for a in range(nv):
            b = a + 1
            while b < nv and xs[b, 0] - xs[a, 0] <= tol:
                if abs(xs[b, 1] - xs[a, 1]) <= tol:
                    raise MeshError(f"duplicate vertices {order[a]} and {order[b]}")
                b += 1

        half_edges: dict[tuple[int, int], int] = {}
        used = np.zeros(nv, dtype=bool)
        for k, c in enumerate(self.cells):
            if len(c) < 3:
                raise MeshError(f"cell {k} has fewer than 3 vertices")
            if c.min() < 0 or c.max() >= nv:
                raise MeshError(f"cell {k} references a vertex index out of range")
            if len(set(c.tolist())) != len(c):
                raise MeshError(f"cell {k} repeats a vertex")
            xy = self.vertices[c]
            area = signed_area(xy)
            if area <= 0:
                raise MeshError(f"cell {k} is not counter-clockwise (signed area {area:.3e})")
            if not is_simple_polygon(xy):
                raise MeshError(f"cell {k} is self-intersecting")
            # consecutive colinear vertices make the local edge structure degenerate
            d1 = xy - np.roll(xy, 1, axis=0)
            d2 = np.roll(xy, -1, axis=0) - xy
            cross = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
            scale = np.linalg.norm(d1, axis=1) * np.linalg.norm(d2, axis=1)
            if np.any(np.abs(cross) <= 1e-12 * scale):
                raise MeshError(f"cell {k} has colinear consecutive vertices")
            used[c] = True
            for a, b in zip(c.tolist(), np.roll(c, -1).tolist()):
                if (a, b) in half_edges:
                    raise MeshError(
                        f"cell {k}: edge ({a}, {b}) is shared with cell {half_edges[(a, b)]} "
                        "with the same orientation (or by more than two cells)"
                    )
                half_edges[(a, b)] = k
        if not used.all():
            raise MeshError(f"vertex {int(np.flatnonzero(~used)[0])} belongs to no cell")

        edges = []
        bnd = []
        for (a, b), k in half_edges.items():
            if (b, a) in half_edges:
                if a < b:
                    edges.append((a, b))
                    bnd.append(False)
            else:
                edges.append((a, b))
                bnd.append(True)
        self.edges = np.array(edges, dtype=np.int64)
        self.boundary_edge = np.array(bnd, dtype=bool)
        self.boundary_vertex = np.zeros(nv, dtype=bool)
        self.boundary_vertex[self.edges[self.boundary_edge].ravel()] = True

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges) + self.n_cells

    def translated(self, shift) -> "PolygonalMesh":
        return PolygonalMesh(self.vertices + np.asarray(shift, float), [c.copy() for c in self.cells],
                             self.domain_tag, dict(self.metadata))

    def same_as(self, other: "PolygonalMesh") -> bool:
        return (
            self.vertices.shape == other.vertices.shape
            and np.array_equal(self.vertices, other.vertices)
            and len(self.cells) == len(other.cells)
            and all(np.array_equal(a, b) for a, b in zip(self.cells, other.cells))
        )


# --------------------------------------------------------------------------- geometry


@dataclass(frozen=True)
class CellGeometry:
    """Diameter, area, centroid and edge data of one polygonal cell."""

    vertices: np.ndarray
    diameter: float
    area: float
    centroid: np.ndarray
    normals: np.ndarray
    lengths: np.ndarray

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)


def polygon_diameter(xy: np.ndarray) -> float:
    d = xy[:, None, :] - xy[None, :, :]
    return float(np.sqrt((d**2).sum(-1)).max())


def cell_geometry(xy) -> CellGeometry:
    xy = np.asarray(xy, dtype=float)
    nxt = np.roll(xy, -1, axis=0)
    # shoelace sums relative to the first vertex to avoid cancellation
    rel, rnxt = xy - xy[0], nxt - xy[0]
    cross = rel[:, 0] * rnxt[:, 1] - rnxt[:, 0] * rel[:, 1]
    area = 0.5 * cross.sum()
    if not area > 0:
        raise MeshError(f"degenerate or clockwise cell (area {area:.3e})")
    centroid = xy[0] + ((rel + rnxt) * cross[:, None]).sum(axis=0) / (6.0 * area)
    tangent = nxt - xy
    lengths = np.linalg.norm(tangent, axis=1)
    normals = np.column_stack([tangent[:, 1], -tangent[:, 0]]) / lengths[:, None]
    return CellGeometry(xy, polygon_diameter(xy), float(area), centroid, normals, lengths)


@dataclass(frozen=True)
class MeshGeometry:
    cells: list[CellGeometry]
    vertex_cells: list[list[int]]
    vertex_h: np.ndarray  # h_P: largest diameter among incident cells
    h: float


def geometry(mesh: PolygonalMesh) -> MeshGeometry:
    cells = [cell_geometry(mesh.cell_coords(k)) for k in range(mesh.n_cells)]
    incident: list[list[int]] = [[] for _ in range(mesh.n_vertices)]
    vertex_h = np.zeros(mesh.n_vertices)
    for k, c in enumerate(mesh.cells):
        hk = cells[k].diameter
        for v in c.tolist():
            incident[v].append(k)
            if hk > vertex_h[v]:
                vertex_h[v] = hk
    return MeshGeometry(cells, incident, vertex_h, max(c.diameter for c in cells))


# --------------------------------------------------------------------------- quality


def polygon_kernel(xy: np.ndarray) -> np.ndarray:
    """Kernel (points that see the whole polygon) by successive half-plane clipping."""
    poly = [tuple(p) for p in xy]
    n = len(xy)
    for i in range(n):
        a, b = xy[i], xy[(i + 1) % n]
        ex, ey = b - a

        def side(p):
            # >= 0 on the inner (left) side of a CCW edge
            return ex * (p[1] - a[1]) - ey * (p[0] - a[0])

        out = []
        m = len(poly)
        for j in range(m):
            p, q = poly[j], poly[(j + 1) % m]
            sp, sq = side(p), side(q)
            if sp >= 0:
                out.append(p)
            if sp * sq < 0:
                t = sp / (sp - sq)
                out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
        poly = out
        if len(poly) < 3:
            return np.empty((0, 2))
    return np.array(poly)


def chebyshev_radius(xy: np.ndarray) -> float:
    """Radius of the largest disk inside a convex CCW polygon.

    The optimum of the 3-variable LP max r s.t. dist-to-edge >= r sits at a
    vertex where three edge constraints are active, so enumerating edge
    triples is exact.
    """
    if len(xy) < 3:
        return 0.0
    nxt = np.roll(xy, -1, axis=0)
    t = nxt - xy
    L = np.linalg.norm(t, axis=1)
    keep = L > 1e-300
    t, L, p = t[keep], L[keep], xy[keep]
    inward = np.column_stack([-t[:, 1], t[:, 0]]) / L[:, None]
    b = (inward * p).sum(axis=1)
    # constraint i: inward_i . x - r >= b_i
    best = 0.0
    m = len(b)
    for i, j, k in itertools.combinations(range(m), 3):
        A = np.array([[*inward[i], -1.0], [*inward[j], -1.0], [*inward[k], -1.0]])
        if abs(np.linalg.det(A)) < 1e-14:
            continue
        x, y, r = np.linalg.solve(A, b[[i, j, k]])
        if r > best and np.all(inward @ np.array([x, y]) - r >= b - 1e-12 * (1 + abs(b))):
            best = r
    return float(best)


@dataclass
class MeshQualityReport:
    """Per-cell checks of the shortest-edge (A1) and star-shapedness (A2) assumptions."""

    c_t: float
    edge_ratio: np.ndarray
    star_shaped: np.ndarray
    ball_ratio: np.ndarray

    @property
    def a1_pass(self) -> np.ndarray:
        return self.edge_ratio > self.c_t

    @property
    def a2_pass(self) -> np.ndarray:
        return self.star_shaped & (self.ball_ratio >= self.c_t)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.a1_pass) and np.all(self.a2_pass))

    def failures(self) -> list[int]:
        return np.flatnonzero(~(self.a1_pass & self.a2_pass)).tolist()

    def to_dict(self) -> dict:
        return {
            "C_T": self.c_t,
            "passed": self.passed,
            "n_cells": int(len(self.edge_ratio)),
            "min_edge_ratio": float(self.edge_ratio.min()),
            "min_ball_ratio": float(self.ball_ratio.min()),
            "all_star_shaped": bool(self.star_shaped.all()),
            "failed_cells": self.failures()[:50],
        }


def validate(mesh: PolygonalMesh, c_t: float) -> MeshQualityReport:
    if not c_t > 0:
        raise ValueError("C_T must be positive")
    n = mesh.n_cells
    edge_ratio = np.empty(n)
    star = np.empty(n, dtype=bool)
    ball = np.empty(n)
    cache: dict[tuple, tuple[float, float, bool]] = {}
    for k in range(n):
        xy = mesh.cell_coords(k)
        # structured meshes repeat shapes; key on the translated, rounded outline
        key = tuple(np.round((xy - xy[0]).ravel(), 13).tolist())
        if key not in cache:
            hk = polygon_diameter(xy)
            shortest = np.linalg.norm(np.roll(xy, -1, axis=0) - xy, axis=1).min()
            kern = polygon_kernel(xy)
            ok = len(kern) >= 3 and signed_area(kern) > 0
            r = chebyshev_radius(kern) if ok else 0.0
            cache[key] = (shortest / hk, r / hk, ok)
        edge_ratio[k], ball[k], star[k] = cache[key]
    return MeshQualityReport(c_t, edge_ratio, star, ball)


# --------------------------------------------------------------------------- file I/O


def save_mesh(mesh: PolygonalMesh, path) -> None:
    lines = [FORMAT_HEADER, f"# domain {mesh.domain_tag}", f"{mesh.n_vertices} {mesh.n_cells}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [" ".join(map(str, [len(c), *c.tolist()])) for c in mesh.cells]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path) -> PolygonalMesh:
    rows: list[tuple[int, list[str]]] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                rows.append((lineno, line.split()))
    if not rows or rows[0][1] != FORMAT_HEADER.split():
        raise MeshFormatError(f"expected header {FORMAT_HEADER!r}", rows[0][0] if rows else 1)
    if len(rows) < 2 or len(rows[1][1]) != 2:
        raise MeshFormatError("expected '<nv> <nc>'", rows[1][0] if len(rows) > 1 else None)
    try:
        nv, nc = (int(s) for s in rows[1][1])
    except ValueError:
        raise MeshFormatError("counts must be integers", rows[1][0]) from None
    if nv < 3 or nc < 1:
        raise MeshFormatError("mesh needs at least 3 vertices and one cell", rows[1][0])
    if len(rows) != 2 + nv + nc:
        raise MeshFormatError(
            f"expected {nv} vertex and {nc} cell lines, found {len(rows) - 2} data lines",
            rows[-1][0],
        )
    verts = np.empty((nv, 2))
    for i in range(nv):
        lineno, tok = rows[2 + i]
        if len(tok) != 2:
            raise MeshFormatError("vertex line needs exactly 2 coordinates", lineno)
        try:
            verts[i] = [float(tok[0]), float(tok[1])]
        except ValueError:
            raise MeshFormatError(f"bad coordinate in {tok}", lineno) from None
    cells = []
    for j in range(nc):
        lineno, tok = rows[2 + nv + j]
        try:
            ints = [int(s) for s in tok]
        except ValueError:
            raise MeshFormatError("cell line must contain integers", lineno) from None
        if ints[0] != len(ints) - 1:
            raise MeshFormatError(f"cell declares {ints[0]} vertices but lists {len(ints) - 1}", lineno)
        cells.append(ints[1:])
    try:
        return PolygonalMesh(verts, cells, "custom")
    except MeshError as exc:
        raise MeshError(f"{path}: {exc}") from None
