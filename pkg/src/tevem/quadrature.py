"""Exact polynomial integration on straight-edged polygons.

Area integrals of scaled monomials are reduced to edge integrals with the
Euler identity ``div((x - x_K) g) = (2 + d) g`` for a polynomial ``g`` that is
homogeneous of degree ``d`` in ``x - x_K``.  Along a straight edge the factor
``(x - x_K) . nu`` is constant, so a Gauss-Legendre edge rule of modest order
integrates everything exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

# Ordering of the degree <= 2 scaled monomials: 1, xi, eta, xi^2, xi*eta, eta^2.
P2_EXPONENTS: tuple[tuple[int, int], ...] = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))

# Every (a, b) with a + b <= 4, grouped by total degree.
MOMENT_EXPONENTS: tuple[tuple[int, int], ...] = tuple(
    (d - b, b) for d in range(5) for b in range(d + 1)
)
MOMENT_INDEX = {ab: i for i, ab in enumerate(MOMENT_EXPONENTS)}

# Boundary integrands never exceed degree 5, so three points suffice.
EDGE_ORDER = 3


@dataclass(frozen=True)
class EdgeRule:
    """Gauss-Legendre rule on the reference segment [0, 1].

    ``weights`` sum to one; multiply by the edge length for a physical edge.
    """

    order: int
    nodes: np.ndarray
    weights: np.ndarray

    def on_segment(self, a, b) -> tuple[np.ndarray, np.ndarray]:
        """Map the rule onto the segment from ``a`` to ``b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        pts = a + np.outer(self.nodes, b - a)
        return pts, self.weights * np.linalg.norm(b - a)


@lru_cache(maxsize=None)
def edge_gauss(g: int) -> EdgeRule:
    """``g``-point Gauss-Legendre rule, exact for degree ``2g - 1``."""
    if not 1 <= g <= 5:
        raise ValueError(f"edge rule order must be in 1..5, got {g}")
    x, w = np.polynomial.legendre.leggauss(g)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return EdgeRule(g, nodes, weights)


def polygon_moments(vertices, centroid, diameter) -> np.ndarray:
    """Integrals of ``xi^a eta^b`` over the polygon for all ``a + b <= 4``.

    ``(xi, eta) = (x - centroid) / diameter``.  Returned in
    :data:`MOMENT_EXPONENTS` order.
    """
    X = (np.asarray(vertices, dtype=float) - centroid) / diameter
    Y = np.roll(X, -1, axis=0)
    rule = edge_gauss(EDGE_ORDER)
    # scaled (x - x_K) . nu * length, constant per edge: cross product of endpoints
    flux = X[:, 0] * Y[:, 1] - X[:, 1] * Y[:, 0]
    pts = X[:, None, :] + rule.nodes[None, :, None] * (Y - X)[:, None, :]
    xi = pts[..., 0]
    eta = pts[..., 1]
    out = np.empty(len(MOMENT_EXPONENTS))
    for i, (a, b) in enumerate(MOMENT_EXPONENTS):
        edge_int = (xi**a * eta**b) @ rule.weights
        out[i] = edge_int @ flux / (2 + a + b)
    # back from (xi, eta) area element to physical area
    return out * diameter**2


def integrate_monomial(vertices, centroid, diameter, alpha) -> float:
    """Exact integral of the scaled monomial with exponent ``alpha`` over the polygon."""
    a, b = alpha
    if a < 0 or b < 0 or a + b > 4:
        raise ValueError(f"monomial exponent {alpha} outside |alpha| <= 4")
    return float(polygon_moments(vertices, centroid, diameter)[MOMENT_INDEX[(a, b)]])


def mass_matrix_from_moments(moments: np.ndarray, degree: int = 2) -> np.ndarray:
    """Gram matrix of the scaled monomials of the given degree."""
    exps = P2_EXPONENTS[: (degree + 1) * (degree + 2) // 2]
    M = np.empty((len(exps), len(exps)))
    for i, (a1, b1) in enumerate(exps):
        for j, (a2, b2) in enumerate(exps):
            M[i, j] = moments[MOMENT_INDEX[(a1 + a2, b1 + b2)]]
    return M


def mass_matrix(vertices, centroid, diameter, degree: int = 2) -> np.ndarray:
    """``[int_K m_a m_b]`` for the scaled monomials of degree <= ``degree`` (1 or 2)."""
    if degree not in (1, 2):
        raise ValueError("degree must be 1 or 2")
    return mass_matrix_from_moments(polygon_moments(vertices, centroid, diameter), degree)
