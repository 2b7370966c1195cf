import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import fan_integral, random_convex_polygon, random_star_polygon
from tevem.mesh import cell_geometry
from tevem.quadrature import (
    MOMENT_EXPONENTS,
    edge_gauss,
    integrate_monomial,
    mass_matrix,
    polygon_moments,
)

UNIT_SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])


def test_unit_square_area():
    g = cell_geometry(UNIT_SQUARE)
    assert g.diameter == pytest.approx(math.sqrt(2))
    assert integrate_monomial(UNIT_SQUARE, g.centroid, g.diameter, (0, 0)) == pytest.approx(1.0, abs=1e-15)


def test_unit_square_x2y():
    # unscaled x^2 y through the centroid/diameter scaling: centroid 0 and h 1
    assert integrate_monomial(UNIT_SQUARE, np.zeros(2), 1.0, (2, 1)) == pytest.approx(1 / 6, abs=1e-15)


def test_pentagon_matches_fan_oracle():
    rng = np.random.default_rng(7)
    P = random_convex_polygon(rng, 5) + [0.2, -0.1]
    g = cell_geometry(P)
    c, h = g.centroid, g.diameter
    got = integrate_monomial(P, c, h, (2, 1))
    ref = fan_integral(P, lambda x, y: ((x - c[0]) / h) ** 2 * ((y - c[1]) / h))
    assert got == pytest.approx(ref, rel=1e-13, abs=1e-15)


def test_edge_rule_single_node():
    r = edge_gauss(1)
    L = 2.5
    assert r.nodes * L == pytest.approx([L / 2])
    assert r.weights * L == pytest.approx([L])


def test_edge_rule_exact_degree_five():
    r = edge_gauss(3)
    assert np.dot(r.weights, r.nodes**5) == pytest.approx(1 / 6, abs=1e-15)


def test_edge_rule_arc_length():
    r = edge_gauss(2)
    L = np.hypot(3.0, 4.0)
    assert L * r.weights.sum() == pytest.approx(5.0)


def test_edge_rule_rejects_bad_order():
    with pytest.raises(ValueError):
        edge_gauss(0)


def _check_moments(P):
    # the random polygons are star-shaped about the origin
    g = cell_geometry(P)
    c, h = g.centroid, g.diameter
    mom = polygon_moments(P, c, h)
    for (a, b), m in zip(MOMENT_EXPONENTS, mom):
        ref = fan_integral(P, lambda x, y: ((x - c[0]) / h) ** a * ((y - c[1]) / h) ** b, center=np.zeros(2))
        assert abs(m - ref) <= 1e-12 * max(abs(ref), g.area / h**2), (a, b, m, ref)


def test_moments_random_polygons():
    # 100 randomized convex and star-shaped cells, all monomials of degree <= 4
    rng = np.random.default_rng(11)
    for i in range(100):
        maker = random_convex_polygon if i % 2 else random_star_polygon
        P = maker(rng, radius=10.0 ** rng.uniform(-3, 1))
        _check_moments(P)


@given(st.integers(0, 2**32 - 1), st.integers(3, 9))
def test_moments_property(seed, n):
    rng = np.random.default_rng(seed)
    _check_moments(random_star_polygon(rng, n))


def test_mass_matrix_spd():
    rng = np.random.default_rng(3)
    for _ in range(20):
        P = random_star_polygon(rng)
        g = cell_geometry(P)
        M = mass_matrix(P, g.centroid, g.diameter, 2)
        assert M.shape == (6, 6)
        assert np.allclose(M, M.T)
        np.linalg.cholesky(M)
        assert np.linalg.cond(M) < 1e6
