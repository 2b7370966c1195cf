"""Brute-force reference computations shared by the tests.

Everything here works in raw coordinates about the vertex mean, integrates
by fan triangulation with a collapsed Gauss-Legendre rule and by
Gauss-Legendre on edges, and never calls into the package.
"""

from __future__ import annotations

import numpy as np

RAW_EXP = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


# ------------------------------------------------------------------ quadrature


def triangle_rule(m: int = 6):
    """Collapsed tensor Gauss rule on the unit triangle, exact to degree 2m - 2."""
    s, w = np.polynomial.legendre.leggauss(m)
    s = 0.5 * (s + 1)
    w = 0.5 * w
    U, V = np.meshgrid(s, s, indexing="ij")
    W = np.outer(w, w) * (1 - U)
    return np.column_stack([U.ravel(), (V * (1 - U)).ravel()]), W.ravel()


def fan_integral(verts, f, center=None, m: int = 6) -> float:
    """``int_K f`` over a polygon star-shaped with respect to ``center``."""
    verts = np.asarray(verts, float)
    c = verts.mean(axis=0) if center is None else np.asarray(center, float)
    ref, w = triangle_rule(m)
    total = 0.0
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        J = np.column_stack([a - c, b - c])
        pts = c + ref @ J.T
        total += 0.5 * abs(np.linalg.det(J)) * 2 * np.dot(w, f(pts[:, 0], pts[:, 1]))
    return total


def edge_rule(m: int = 6):
    s, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (s + 1), 0.5 * w


def shoelace(verts) -> float:
    x, y = np.asarray(verts, float).T
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


# ------------------------------------------------------------------ raw P2


class RawP2:
    """Quadratics in powers of ``(x - x0, y - y0)`` with ``x0`` the vertex mean."""

    def __init__(self, verts):
        self.verts = np.asarray(verts, float)
        self.x0 = self.verts.mean(axis=0)

    def value(self, c, x, y):
        X, Y = x - self.x0[0], y - self.x0[1]
        return sum(ci * X**a * Y**b for ci, (a, b) in zip(c, RAW_EXP))

    def grad(self, c, x, y):
        X, Y = x - self.x0[0], y - self.x0[1]
        gx = c[1] + 2 * c[3] * X + c[4] * Y
        gy = c[2] + c[4] * X + 2 * c[5] * Y
        return gx, gy

    @staticmethod
    def hess(c):
        return np.array([[2 * c[3], c[4]], [c[4], 2 * c[5]]])

    @staticmethod
    def lap(c):
        return 2 * c[3] + 2 * c[5]

    def basis(self, j):
        e = np.zeros(6)
        e[j] = 1.0
        return e

    def integral(self, f):
        return fan_integral(self.verts, f)


def edges(verts):
    """(start, end, length, unit tangent, outward normal) of every edge."""
    out = []
    for a, b in zip(verts, np.roll(verts, -1, axis=0)):
        d = b - a
        L = np.hypot(*d)
        t = d / L
        out.append((a, b, L, t, np.array([t[1], -t[0]])))
    return out


def hermite_trace(dofs, e, n, a, b, L, t, s):
    """Cubic Hermite value and arc-length derivative along edge e at parameters s."""
    i, j = e, (e + 1) % n
    va, ga = dofs[3 * i], dofs[3 * i + 1 : 3 * i + 3] @ t
    vb, gb = dofs[3 * j], dofs[3 * j + 1 : 3 * j + 3] @ t
    H = [1 - 3 * s**2 + 2 * s**3, (s - 2 * s**2 + s**3) * L, 3 * s**2 - 2 * s**3, (-(s**2) + s**3) * L]
    dH = [(-6 * s + 6 * s**2) / L, 1 - 4 * s + 3 * s**2, (6 * s - 6 * s**2) / L, -2 * s + 3 * s**2]
    val = H[0] * va + H[1] * ga + H[2] * vb + H[3] * gb
    der = dH[0] * va + dH[1] * ga + dH[2] * vb + dH[3] * gb
    return val, der


def normal_trace(dofs, e, n, nu, s):
    i, j = e, (e + 1) % n
    return (1 - s) * (dofs[3 * i + 1 : 3 * i + 3] @ nu) + s * (dofs[3 * j + 1 : 3 * j + 3] @ nu)


# ------------------------------------------------------------------ projectors


def hessian_pairing(verts, dofs, Q) -> float:
    """``int_K D^2 v : Q`` for constant symmetric Q, by edge integration of (Q nu) . grad v."""
    verts = np.asarray(verts, float)
    n = len(verts)
    s, w = edge_rule()
    total = 0.0
    for e, (a, b, L, t, nu) in enumerate(edges(verts)):
        _, dv_dt = hermite_trace(dofs, e, n, a, b, L, t, s)
        dv_dn = normal_trace(dofs, e, n, nu, s)
        Qn = Q @ nu
        total += L * np.dot(w, (Qn @ t) * dv_dt + (Qn @ nu) * dv_dn)
    return total


def hessian_projector(verts, dofs):
    """Raw coefficients of the Hessian projection, closed by vertex sums against P1."""
    P = RawP2(verts)
    verts = P.verts
    area = shoelace(verts)
    lhs = np.zeros((6, 6))
    rhs = np.zeros(6)
    vx = np.array([P.value(P.basis(j), verts[:, 0], verts[:, 1]) for j in range(6)])  # (6, N)
    for r, q in enumerate(range(3)):
        qv = vx[q]
        lhs[r] = vx @ qv
        rhs[r] = dofs[0::3] @ qv
    for r, q in enumerate(range(3, 6), start=3):
        Q = P.hess(P.basis(q))
        lhs[r] = [area * np.sum(P.hess(P.basis(j)) * Q) for j in range(6)]
        rhs[r] = hessian_pairing(verts, dofs, Q)
    return np.linalg.solve(lhs, rhs)


def grad_projector_p1(verts, psi):
    """Raw P1 coefficients of the gradient projection, closed by the boundary mean."""
    P = RawP2(verts)
    verts = P.verts
    area = shoelace(verts)
    n = len(verts)
    s, w = edge_rule()
    lhs = np.zeros((3, 3))
    rhs = np.zeros(3)
    for e, (a, b, L, t, nu) in enumerate(edges(verts)):
        pts = a + np.outer(s, b - a)
        trace = (1 - s) * psi[e] + s * psi[(e + 1) % n]
        for j in range(3):
            lhs[0, j] += L * np.dot(w, P.value(P.basis(j), pts[:, 0], pts[:, 1]))
        rhs[0] += L * np.dot(w, trace)
        rhs[1] += L * np.dot(w, trace) * nu[0]
        rhs[2] += L * np.dot(w, trace) * nu[1]
    lhs[1, 1] = lhs[2, 2] = area
    c = np.linalg.solve(lhs, rhs)
    return np.concatenate([c, np.zeros(3)])


def _moment(P, c, q):
    """``int_K p q`` for raw coefficient vectors."""
    return P.integral(lambda x, y: P.value(c, x, y) * P.value(q, x, y))


def _boundary_terms(verts, dofs, q, P):
    """``int_dK v d_nu q`` and ``int_dK (d_nu v) q``."""
    n = len(verts)
    s, w = edge_rule()
    v_dq = dv_q = 0.0
    for e, (a, b, L, t, nu) in enumerate(edges(verts)):
        pts = a + np.outer(s, b - a)
        val, _ = hermite_trace(dofs, e, n, a, b, L, t, s)
        gx, gy = P.grad(q, pts[:, 0], pts[:, 1])
        v_dq += L * np.dot(w, val * (gx * nu[0] + gy * nu[1]))
        dv_q += L * np.dot(w, normal_trace(dofs, e, n, nu, s) * P.value(q, pts[:, 0], pts[:, 1]))
    return v_dq, dv_q


def grad_projector_p2(verts, dofs):
    """Raw coefficients of the P2 gradient projection; cell moments from the Hessian projection."""
    P = RawP2(verts)
    verts = P.verts
    pid = hessian_projector(verts, dofs)
    lhs = np.zeros((6, 6))
    rhs = np.zeros(6)
    one = P.basis(0)
    lhs[0] = [_moment(P, P.basis(j), one) for j in range(6)]
    rhs[0] = _moment(P, pid, one)
    for r in range(1, 6):
        q = P.basis(r)
        lhs[r] = [P.integral(lambda x, y, j=j: np.add(*[g * h for g, h in zip(P.grad(P.basis(j), x, y), P.grad(q, x, y))]))
                  for j in range(6)]
        v_dq, _ = _boundary_terms(verts, dofs, q, P)
        rhs[r] = v_dq - P.lap(q) * _moment(P, pid, one)
    return np.linalg.solve(lhs, rhs)


def laplacian_projector(verts, dofs):
    """Raw coefficients of the L2 projection of the Laplacian onto P2."""
    P = RawP2(verts)
    verts = P.verts
    pid = hessian_projector(verts, dofs)
    mass = np.array([[_moment(P, P.basis(i), P.basis(j)) for j in range(6)] for i in range(6)])
    rhs = np.zeros(6)
    for r in range(6):
        q = P.basis(r)
        v_dq, dv_q = _boundary_terms(verts, dofs, q, P)
        rhs[r] = dv_q - v_dq + P.lap(q) * _moment(P, pid, P.basis(0))
    return np.linalg.solve(mass, rhs)


# ------------------------------------------------------------------ local matrices


def local_matrices(verts, n_index, vertex_h):
    """Dense A_W, A_V, B_uu, B_uphi, B_psiu from their defining integrals."""
    verts = np.asarray(verts, float)
    n = len(verts)
    P = RawP2(verts)
    I3, I1 = np.eye(3 * n), np.eye(n)
    pid = np.array([hessian_projector(verts, I3[j]) for j in range(3 * n)])  # (3N, 6)
    pg1 = np.array([grad_projector_p1(verts, I1[j]) for j in range(n)])
    pg2 = np.array([grad_projector_p2(verts, I3[j]) for j in range(3 * n)])
    pil = np.array([laplacian_projector(verts, I3[j]) for j in range(3 * n)])
    area = shoelace(verts)
    c = 1.0 / (n_index - 1)
    a = n_index / (n_index - 1)

    cons = np.array([[c * area * np.sum(P.hess(p) * P.hess(q)) for q in pid] for p in pid])
    sigma = np.trace(cons) / (3 * n)
    # remainders v - PiD v at the vertices
    X, Y = verts[:, 0], verts[:, 1]
    rem = np.empty((3 * n, 3 * n))
    for j in range(3 * n):
        gx, gy = P.grad(pid[j], X, Y)
        r = I3[j].copy()
        r[0::3] -= P.value(pid[j], X, Y)
        r[1::3] -= gx
        r[2::3] -= gy
        rem[j] = r
    hp2 = np.asarray(vertex_h, float) ** 2
    wts = np.column_stack([np.ones(n), hp2, hp2]).ravel()
    A_W = cons + sigma * (rem * wts) @ rem.T

    def gradprod(p, q):
        return P.integral(lambda x, y: np.add(*[g * h for g, h in zip(P.grad(p, x, y), P.grad(q, x, y))]))

    rem1 = I1 - np.array([P.value(p, X, Y) for p in pg1])
    A_V = np.array([[gradprod(p, q) for q in pg1] for p in pg1]) + rem1 @ rem1.T

    # Laplacian projections are raw P2 coefficient vectors of a function
    B_uu = np.array([[a * _moment(P, pid[i], pil[j]) + c * _moment(P, pil[i], pid[j]) for j in range(3 * n)]
                     for i in range(3 * n)])
    B_uphi = np.array([[-gradprod(pg2[i], pg1[j]) for j in range(n)] for i in range(3 * n)])
    B_psiu = np.array([[a * _moment(P, pg1[i], pid[j]) for j in range(3 * n)] for i in range(n)])
    return A_W, A_V, B_uu, B_uphi, B_psiu


def eval_scaled(coef, xy, centroid, h):
    """Value of a scaled-monomial P2 expansion at points ``xy``."""
    xi = (np.asarray(xy, float) - centroid) / h
    x, y = xi[:, 0], xi[:, 1]
    basis = np.column_stack([np.ones_like(x), x, y, x * x, x * y, y * y])
    return basis[:, : len(coef)] @ coef


def random_star_polygon(rng, n=None, radius=1.0):
    """Polygon star-shaped about the origin, vertices counter-clockwise."""
    n = n or int(rng.integers(3, 9))
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        if gaps.max() < 0.9 * np.pi and gaps.min() > 0.15:
            break
    r = radius * rng.uniform(0.5, 1.0, n)
    return np.column_stack([r * np.cos(ang), r * np.sin(ang)])


def random_convex_polygon(rng, n=None, radius=1.0):
    n = n or int(rng.integers(3, 9))
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, n))
        gaps = np.diff(np.concatenate([ang, [ang[0] + 2 * np.pi]]))
        if gaps.max() < 0.9 * np.pi and gaps.min() > 0.15:
            return radius * np.column_stack([np.cos(ang), np.sin(ang)])
