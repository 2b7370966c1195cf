"""Element-level projectors and local matrices of the C1 virtual element pair.

Local degrees of freedom on a cell with vertices P_1..P_N (counter-clockwise):

* W space (plate unknown): ``v(P_i), dv/dx(P_i), dv/dy(P_i)`` interleaved per
  vertex, so DOF ``3*i + c``;
* V space (auxiliary unknown): ``psi(P_i)``, DOF ``i``.

Polynomials are expanded in the scaled monomials of :mod:`tevem.quadrature`
(``1, xi, eta, xi^2, xi*eta, eta^2`` with ``xi = (x - x_K)/h_K``).  Every
projector is a coefficient matrix mapping DOF vectors to those expansions.

This module is the reference implementation.  The batched kernels in
:mod:`tevem.kernels` compute the same local matrices for whole meshes.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import CellGeometry, cell_geometry
from .quadrature import EDGE_ORDER, edge_gauss, mass_matrix_from_moments, polygon_moments

# d/dxi and d/deta of each P2 monomial, as coefficient rows over the same basis
DXI = np.zeros((6, 6))
DXI[1, 0], DXI[3, 1], DXI[4, 2] = 1.0, 2.0, 1.0
DETA = np.zeros((6, 6))
DETA[2, 0], DETA[4, 1], DETA[5, 2] = 1.0, 1.0, 2.0
# Hessians (in xi, eta) of the quadratic monomials: [[xx, xy], [xy, yy]]
HESS = np.zeros((6, 2, 2))
HESS[3] = [[2.0, 0.0], [0.0, 0.0]]
HESS[4] = [[0.0, 1.0], [1.0, 0.0]]
HESS[5] = [[0.0, 0.0], [0.0, 2.0]]
LAPLACE = np.array([0.0, 0.0, 0.0, 2.0, 0.0, 2.0])


def check_index(n_index: float) -> None:
    if not n_index > 1.0:
        raise ValueError(f"index of refraction must satisfy n > 1, got {n_index}")


def monomials(xi: np.ndarray) -> np.ndarray:
    """Scaled P2 monomials at points given in scaled coordinates, shape (..., 6)."""
    x, y = xi[..., 0], xi[..., 1]
    one = np.ones_like(x)
    return np.stack([one, x, y, x * x, x * y, y * y], axis=-1)


def monomial_gradients(xi: np.ndarray) -> np.ndarray:
    """Gradients w.r.t. the scaled coordinates, shape (..., 6, 2)."""
    x, y = xi[..., 0], xi[..., 1]
    z, one = np.zeros_like(x), np.ones_like(x)
    gx = np.stack([z, one, z, 2 * x, y, z], axis=-1)
    gy = np.stack([z, z, one, z, x, 2 * y], axis=-1)
    return np.stack([gx, gy], axis=-1)


class LocalElement:
    """Geometric and polynomial data of one cell shared by all projectors."""

    def __init__(self, cell):
        self.geom: CellGeometry = cell if isinstance(cell, CellGeometry) else cell_geometry(cell)
        g = self.geom
        self.n = g.n_vertices
        self.h = g.diameter
        self.xi = (g.vertices - g.centroid) / self.h
        self.moments = polygon_moments(g.vertices, g.centroid, self.h)
        self.M = mass_matrix_from_moments(self.moments, 2)
        self.mean = self.M[0]  # int_K m_b
        # int_K grad m_a . grad m_b
        self.K = (DXI @ self.M @ DXI.T + DETA @ self.M @ DETA.T) / self.h**2
        hess = HESS / self.h**2
        self.hess = hess
        self.H = g.area * np.einsum("aij,bij->ab", hess, hess)
        self.lap = LAPLACE / self.h**2

    # ---------------------------------------------------------------- dof maps

    @cached_property
    def D(self) -> np.ndarray:
        """W-DOFs of each monomial, shape (3N, 6)."""
        D = np.empty((3 * self.n, 6))
        D[0::3] = monomials(self.xi)
        grads = monomial_gradients(self.xi) / self.h
        D[1::3] = grads[..., 0]
        D[2::3] = grads[..., 1]
        return D

    @cached_property
    def D1(self) -> np.ndarray:
        """V-DOFs of the P1 monomials, shape (N, 3)."""
        return monomials(self.xi)[:, :3]

    # ---------------------------------------------------------------- edge traces

    @cached_property
    def edge_data(self):
        """Quadrature points and DOF-to-trace rows on every edge.

        Returns ``(xi_q, w_q, V, Nd)``: scaled points (N, G, 2), physical
        weights (N, G), value-trace rows (N, G, 3N) from the cubic Hermite
        interpolant and normal-derivative rows (N, G, 3N) from the linear
        interpolant of the endpoint gradients.
        """
        rule = edge_gauss(EDGE_ORDER)
        s = rule.nodes
        g = self.geom
        n = self.n
        X = g.vertices
        t = (np.roll(X, -1, axis=0) - X) / g.lengths[:, None]
        nu = g.normals
        h0 = 1 - 3 * s**2 + 2 * s**3
        h1 = s - 2 * s**2 + s**3
        h2 = 3 * s**2 - 2 * s**3
        h3 = -(s**2) + s**3
        G = len(s)
        V = np.zeros((n, G, 3 * n))
        Nd = np.zeros((n, G, 3 * n))
        for e in range(n):
            a, b = 3 * e, 3 * ((e + 1) % n)
            L = g.lengths[e]
            V[e, :, a] = h0
            V[e, :, a + 1 : a + 3] = np.outer(h1 * L, t[e])
            V[e, :, b] = h2
            V[e, :, b + 1 : b + 3] = np.outer(h3 * L, t[e])
            Nd[e, :, a + 1 : a + 3] = np.outer(1 - s, nu[e])
            Nd[e, :, b + 1 : b + 3] = np.outer(s, nu[e])
        xi = self.xi
        xi_q = xi[:, None, :] + s[None, :, None] * (np.roll(xi, -1, axis=0) - xi)[:, None, :]
        w_q = np.outer(g.lengths, rule.weights)
        return xi_q, w_q, V, Nd

    @cached_property
    def boundary_grad_terms(self):
        """``int_dK v d_nu m_a`` and ``int_dK (d_nu v) m_a`` as (6, 3N) matrices."""
        xi_q, w_q, V, Nd = self.edge_data
        grad = monomial_gradients(xi_q) / self.h  # (N, G, 6, 2)
        dnu = np.einsum("egak,ek->ega", grad, self.geom.normals)
        v_dnu_m = np.einsum("eg,ega,egj->aj", w_q, dnu, V)
        dnu_v_m = np.einsum("eg,ega,egj->aj", w_q, monomials(xi_q), Nd)
        return v_dnu_m, dnu_v_m

    def default_moments(self, PiD: np.ndarray) -> np.ndarray:
        """``int_K v q`` for q in P2, as supplied by the enhanced space."""
        return self.M @ PiD


# ---------------------------------------------------------------------------- projectors


def hessian_projector(el: LocalElement, closure_scale: float | None = None) -> np.ndarray:
    """Energy projection onto P2 for the Hessian form, shape (6, 3N).

    For a quadratic monomial q, D^2 q is a constant symmetric matrix Q, so
    ``int_K D^2 v : Q = sum_e int_e (Q nu) . grad v``.  Splitting the gradient
    into normal and tangential parts, the normal part is linear on the edge
    and the tangential part integrates to the difference of endpoint values.
    The P1 kernel is fixed by matching vertex values against P1.
    """
    g = el.geom
    n = el.n
    scale = 1.0 / n if closure_scale is None else closure_scale
    X = g.vertices
    t = (np.roll(X, -1, axis=0) - X) / g.lengths[:, None]
    nu = g.normals
    lhs = np.zeros((6, 6))
    rhs = np.zeros((6, 3 * n))
    lhs[:3] = scale * el.D1.T @ monomials(el.xi)
    rhs[:3, 0::3] = scale * el.D1.T
    lhs[3:] = el.H[3:]
    for alpha in range(3, 6):
        Q = el.hess[alpha]
        for e in range(n):
            a, b = 3 * e, 3 * ((e + 1) % n)
            Qn = Q @ nu[e]
            half = 0.5 * g.lengths[e] * (Qn @ nu[e])
            rhs[alpha, a + 1 : a + 3] += half * nu[e]
            rhs[alpha, b + 1 : b + 3] += half * nu[e]
            qt = Qn @ t[e]
            rhs[alpha, b] += qt
            rhs[alpha, a] -= qt
    return np.linalg.solve(lhs, rhs)


def grad_projector_p1(el: LocalElement) -> np.ndarray:
    """Gradient projection of V functions onto P1, closed by the boundary mean, (3, N)."""
    g = el.geom
    n = el.n
    nxt = (np.arange(n) + 1) % n
    lhs = np.zeros((3, 3))
    rhs = np.zeros((3, n))
    # int_dK m_b for linear m_b: trapezoid rule is exact
    m_vert = monomials(el.xi)[:, :3]
    lhs[0] = 0.5 * (g.lengths[:, None] * (m_vert + m_vert[nxt])).sum(axis=0)
    half = 0.5 * g.lengths
    np.add.at(rhs[0], np.arange(n), half)
    np.add.at(rhs[0], nxt, half)
    lhs[1:] = el.K[1:3, :3]
    # grad m_a is constant for a = 1, 2: (1/h) e_x, (1/h) e_y
    for alpha, comp in ((1, 0), (2, 1)):
        flux = half * g.normals[:, comp] / el.h
        np.add.at(rhs[alpha], np.arange(n), flux)
        np.add.at(rhs[alpha], nxt, flux)
    return np.linalg.solve(lhs, rhs)


def grad_projector_p2(el: LocalElement, moments: np.ndarray) -> np.ndarray:
    """Gradient projection of W functions onto P2, closed by the cell mean, (6, 3N).

    ``moments`` is the (6, 3N) map from DOFs to ``int_K v m_b``.
    """
    v_dnu_m, _ = el.boundary_grad_terms
    lhs = np.vstack([el.mean, el.K[1:]])
    rhs = np.vstack([moments[0], v_dnu_m[1:] - np.outer(el.lap[1:], moments[0])])
    return np.linalg.solve(lhs, rhs)


def laplacian_l2_projector(el: LocalElement, moments: np.ndarray) -> np.ndarray:
    """L2 projection of the Laplacian of a W function onto P2, (6, 3N).

    Uses ``int_K (lap v) q = int_dK (d_nu v) q - int_dK v d_nu q + int_K v lap q``
    with ``lap q`` constant.
    """
    v_dnu_m, dnu_v_m = el.boundary_grad_terms
    rhs = dnu_v_m - v_dnu_m + np.outer(el.lap, moments[0])
    return np.linalg.solve(el.M, rhs)


def l2_projector_p2(el: LocalElement, moments: np.ndarray) -> np.ndarray:
    return np.linalg.solve(el.M, moments)


def l2_projectors_identity_check(
    el: LocalElement,
    w_moments: np.ndarray | None = None,
    v_moments: np.ndarray | None = None,
    tol: float = 1e-12,
) -> bool:
    """Whether the L2 projections coincide with the energy projections.

    The moments default to those of the enhanced spaces; passing different
    ones (e.g. a corrupted supply) makes the identity fail.
    """
    PiD = hessian_projector(el)
    PiG1 = grad_projector_p1(el)
    if w_moments is None:
        w_moments = el.default_moments(PiD)
    if v_moments is None:
        v_moments = el.M[:3, :3] @ PiG1
    Pi0_w = l2_projector_p2(el, w_moments)
    Pi0_v = np.linalg.solve(el.M[:3, :3], v_moments)
    ok_w = np.max(np.abs(Pi0_w - PiD)) <= tol * max(1.0, np.max(np.abs(PiD)))
    ok_v = np.max(np.abs(Pi0_v - PiG1)) <= tol * max(1.0, np.max(np.abs(PiG1)))
    return bool(ok_w and ok_v)


# ---------------------------------------------------------------------------- local matrices


@dataclass
class ElementOperators:
    PiD: np.ndarray
    PiG1: np.ndarray
    PiG2: np.ndarray
    PiL: np.ndarray
    sigma: float
    A_W: np.ndarray
    A_V: np.ndarray
    B_uu: np.ndarray
    B_uphi: np.ndarray
    B_psiu: np.ndarray


def _symmetrize(A):
    return 0.5 * (A + A.T)


def local_stiffness(el: LocalElement, n_index: float, vertex_h, PiD=None, PiG1=None):
    """Stabilized local matrices of the Hessian and gradient forms.

    Returns ``(A_W, A_V, sigma)``.  The Hessian block carries the factor
    1/(n-1); ``sigma`` is the mean eigenvalue of its consistency part.
    """
    check_index(n_index)
    PiD = hessian_projector(el) if PiD is None else PiD
    PiG1 = grad_projector_p1(el) if PiG1 is None else PiG1
    c = 1.0 / (n_index - 1.0)
    consistency = c * (PiD.T @ el.H @ PiD)
    sigma = np.trace(consistency) / (3 * el.n)
    R = np.eye(3 * el.n) - el.D @ PiD
    hP2 = np.asarray(vertex_h, dtype=float) ** 2
    weights = np.column_stack([np.ones(el.n), hP2, hP2]).ravel()
    A_W = _symmetrize(consistency + sigma * (R.T * weights) @ R)
    R1 = np.eye(el.n) - el.D1 @ PiG1
    A_V = _symmetrize(PiG1.T @ el.K[:3, :3] @ PiG1 + R1.T @ R1)
    return A_W, A_V, float(sigma)


def local_b(el: LocalElement, n_index: float, PiD=None, PiG1=None, PiG2=None, PiL=None):
    """Blocks of the right-hand form, rows = test DOFs, columns = trial DOFs.

    Returns ``(B_uu, B_uphi, B_psiu)``; there is no psi-phi block.
    """
    check_index(n_index)
    PiD = hessian_projector(el) if PiD is None else PiD
    PiG1 = grad_projector_p1(el) if PiG1 is None else PiG1
    moments = el.default_moments(PiD)
    PiG2 = grad_projector_p2(el, moments) if PiG2 is None else PiG2
    PiL = laplacian_l2_projector(el, moments) if PiL is None else PiL
    a = n_index / (n_index - 1.0)
    c = 1.0 / (n_index - 1.0)
    B_uu = a * (PiD.T @ el.M @ PiL) + c * (PiL.T @ el.M @ PiD)
    B_uphi = -(PiG2.T @ el.K[:, :3] @ PiG1)
    B_psiu = a * (PiG1.T @ el.M[:3] @ PiD)
    return B_uu, B_uphi, B_psiu


def element_operators(cell, n_index: float, vertex_h) -> ElementOperators:
    """All projectors and local matrices of one cell."""
    el = cell if isinstance(cell, LocalElement) else LocalElement(cell)
    PiD = hessian_projector(el)
    PiG1 = grad_projector_p1(el)
    moments = el.default_moments(PiD)
    PiG2 = grad_projector_p2(el, moments)
    PiL = laplacian_l2_projector(el, moments)
    A_W, A_V, sigma = local_stiffness(el, n_index, vertex_h, PiD, PiG1)
    B_uu, B_uphi, B_psiu = local_b(el, n_index, PiD, PiG1, PiG2, PiL)
    return ElementOperators(PiD, PiG1, PiG2, PiL, sigma, A_W, A_V, B_uu, B_uphi, B_psiu)


def w_dofs(el: LocalElement, f, grad_f) -> np.ndarray:
    """W-DOF vector of a function given its value and gradient callables."""
    X = el.geom.vertices
    out = np.empty(3 * el.n)
    out[0::3] = [f(x, y) for x, y in X]
    gr = np.array([grad_f(x, y) for x, y in X], dtype=float)
    out[1::3], out[2::3] = gr[:, 0], gr[:, 1]
    return out
