import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from quadseq.poly import (
    DegreeOverflowError,
    Poly2,
    VecPoly2,
    curl_scalar,
    div,
    grad,
    hessian,
    pack,
    vandermonde,
)

X = Poly2.monomial(1, 0)
Y = Poly2.monomial(0, 1)


def test_monomial_product():
    assert (X * Y).coeffs == Poly2.monomial(1, 1).coeffs


def test_cancellation_normalizes_zero_terms():
    p = (X + 1) + (-X)
    assert p.coeffs == Poly2.constant(1.0).coeffs
    assert p.degree == 0


def test_eval_simple():
    p = X * X + Y
    assert p.eval((2.0, 3.0)) == 7.0


def test_eval_vectorized():
    p = X * X + Y
    x = np.array([0.0, 1.0, 2.0])
    y = np.array([1.0, 1.0, 1.0])
    np.testing.assert_allclose(p(x, y), [1.0, 2.0, 5.0])


def test_unit_square_edge_line_product():
    # Normalized edge lines of the unit square: y, 1-x, 1-y, x.
    # Hand expansion: x(1-x) y(1-y) = xy - x y^2 - x^2 y + x^2 y^2.
    l1, l2, l3, l4 = Y, 1 - X, 1 - Y, X
    product = l1 * l2 * l3 * l4
    expected = {(1, 1): 1.0, (1, 2): -1.0, (2, 1): -1.0, (2, 2): 1.0}
    assert set(product.coeffs) == set(expected)
    for key, val in expected.items():
        assert float(product.coeffs[key]) == val


def test_curl_convention():
    c = curl_scalar(X)
    assert c.x.is_zero()
    assert c.y.coeffs == Poly2.constant(-1.0).coeffs


def test_div_curl_identity_specific():
    w = Poly2.monomial(3, 0) * Poly2.monomial(0, 2)  # x^3 y^2
    assert div(curl_scalar(w)).coeffs == {}


def test_hessian_example():
    H = hessian(Poly2.monomial(2, 1))  # x^2 y
    assert H[0][0].coeffs == (2 * Y).coeffs
    assert H[0][1].coeffs == (2 * X).coeffs
    assert H[1][0].coeffs == (2 * X).coeffs
    assert H[1][1].is_zero()


def test_hessian_symmetric_exactly():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = Poly2({(i, j): rng.standard_normal()
                   for i in range(5) for j in range(5) if i + j <= 6})
        H = hessian(p)
        assert H[0][1].coeffs == H[1][0].coeffs


def test_degree_overflow():
    p = Poly2.monomial(4, 1)
    q = Poly2.monomial(3, 2)
    with pytest.raises(DegreeOverflowError):
        p * q
    with pytest.raises(DegreeOverflowError):
        Poly2.monomial(5, 4)


def test_degree_of_product():
    p = X * X + Y
    q = Y * Y * X
    assert (p * q).degree == p.degree + q.degree


coeff_ints = st.integers(min_value=-50, max_value=50)


def poly_strategy(max_degree):
    keys = [(i, j) for i in range(max_degree + 1) for j in range(max_degree + 1)
            if i + j <= max_degree]
    return st.fixed_dictionaries({}, optional={k: coeff_ints for k in keys}).map(Poly2)


@given(poly_strategy(2), poly_strategy(2), poly_strategy(2))
@settings(max_examples=60, deadline=None)
def test_ring_axioms_exact(p, q, r):
    # Integer coefficients keep all intermediate arithmetic exact.
    assert ((p * q) * r).coeffs == (p * (q * r)).coeffs
    assert (p * (q + r)).coeffs == (p * q + p * r).coeffs
    assert (p + q).coeffs == (q + p).coeffs


float_coeffs = st.floats(min_value=-1e6, max_value=1e6,
                         allow_nan=False, allow_infinity=False)


def float_poly_strategy(max_degree):
    keys = [(i, j) for i in range(max_degree + 1) for j in range(max_degree + 1)
            if i + j <= max_degree]
    return st.fixed_dictionaries({}, optional={k: float_coeffs for k in keys}).map(Poly2)


@given(float_poly_strategy(7))
@settings(max_examples=120, deadline=None)
def test_div_curl_empty_for_any_float_coefficients(p):
    assert div(curl_scalar(p)).coeffs == {}


@given(float_poly_strategy(4), float_poly_strategy(4))
@settings(max_examples=60, deadline=None)
def test_eval_commutes_with_multiplication(p, q):
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1, 1, (16, 2))
    lhs = (p * q)(pts[:, 0], pts[:, 1])
    rhs = p(pts[:, 0], pts[:, 1]) * q(pts[:, 0], pts[:, 1])
    scale = np.abs(rhs).max() + 1.0
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-13 * scale)


def test_grad_and_vecpoly():
    g = grad(X * X * Y)
    assert g.x.coeffs == (2 * (X * Y)).coeffs
    assert g.y.coeffs == (X * X).coeffs
    v = VecPoly2(X, Y)
    assert v.div().coeffs == Poly2.constant(2.0).coeffs
    assert v.dot([2.0, 3.0]).coeffs == (2 * X + 3 * Y).coeffs


def test_pack_vandermonde_consistency():
    rng = np.random.default_rng(1)
    polys = [Poly2({(i, j): rng.standard_normal()
                    for i in range(4) for j in range(4) if i + j <= 4})
             for _ in range(5)]
    pts = rng.uniform(-1, 1, (20, 2))
    V = vandermonde(pts)
    M = pack(polys)
    direct = np.column_stack([p(pts[:, 0], pts[:, 1]) for p in polys])
    np.testing.assert_allclose(V @ M.T, direct, rtol=1e-13, atol=1e-13)
