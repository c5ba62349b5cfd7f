import numpy as np
import pytest

from quadseq.elements import (
    ElementConditioningError,
    aggregation_coeffs_formula,
    build_scalar_element,
    build_vector_element,
    bubble_span,
    det_oracles,
    edge_mean_correctors,
    interpolate_scalar,
    interpolate_vector,
    numeric_dets,
    scalar_dof_values,
)
from quadseq.geometry import NonConvexCellError, QuadGeometry
from quadseq.mesh import make_mesh
from quadseq.verify import (
    _curl_inclusion_residual,
    _edge_mean_identity_residual,
    _weighted_normal_identity_residual,
    random_convex_quads,
)

RECTANGLES = [
    [[0, 0], [1, 0], [1, 1], [0, 1]],
    [[0.3, -0.2], [2.3, -0.2], [2.3, 0.8], [0.3, 0.8]],
]


# ---------------------------------------------------------------------------
# determinant oracles
# ---------------------------------------------------------------------------

def test_det_oracles_at_origin():
    det_m, det_n, det_b = det_oracles(0.0, 0.0)
    assert det_m == pytest.approx(4.0, abs=1e-14)
    assert det_n == pytest.approx(4.0, abs=1e-14)
    assert det_b == pytest.approx(-1.0 / 810.0, abs=1e-18)


def test_det_oracles_reject_nonconvex():
    with pytest.raises(NonConvexCellError):
        det_oracles(0.7, 0.4)


def test_numeric_dets_match_closed_forms():
    for geom in random_convex_quads(200, seed=12, max_skew=0.95):
        num = np.array(numeric_dets(geom))
        orc = np.array(det_oracles(*geom.s))
        np.testing.assert_allclose(num, orc, rtol=1e-9)


def test_numeric_dets_on_square(unit_square):
    num = numeric_dets(unit_square)
    np.testing.assert_allclose(num, [4.0, 4.0, -1.0 / 810.0], rtol=1e-12)


# ---------------------------------------------------------------------------
# enrichment correctors
# ---------------------------------------------------------------------------

def test_correctors_reduce_on_rectangle():
    for verts in RECTANGLES:
        g = QuadGeometry(verts)
        c1, c2 = edge_mean_correctors(g)
        l1, l2, l3, l4 = g.edge_lines
        expected1 = -1.0 * (l1 * l3 * g.mid_13 * g.mid_24)
        expected2 = -1.0 * (l2 * l4 * g.mid_13 * g.mid_24)
        assert c1.distance(expected1) < 1e-13
        assert c2.distance(expected2) < 1e-13


def test_correctors_vanish_at_vertices():
    for g in random_convex_quads(100, seed=21, max_skew=0.8, max_aspect=2.0):
        c1, c2 = edge_mean_correctors(g)
        lv = g.local_vertices
        for p in (c1, c2):
            assert np.abs(p(lv[:, 0], lv[:, 1])).max() < 1e-13


def test_correctors_satisfy_edge_mean_identity(random_quads):
    from quadseq.poly import pack
    for g in random_quads[:10]:
        c1, c2 = edge_mean_correctors(g)
        resid = _edge_mean_identity_residual(g, pack([c1, c2]))
        assert resid < 1e-12


# ---------------------------------------------------------------------------
# scalar element
# ---------------------------------------------------------------------------

def test_scalar_duality_and_constraints(random_quads):
    for g in random_quads:
        e = build_scalar_element(g)
        assert e.duality_defect < 1e-10
        assert e.constraint_residual < 1e-10
        assert e.condition < 1e12


def test_scalar_p2_reproduction_unit_square(unit_square):
    e = build_scalar_element(unit_square)
    u = lambda x, y: x**2 + y
    gu = lambda x, y: np.stack([2 * x, np.ones_like(np.asarray(x, dtype=float))], -1)
    dofs = interpolate_scalar(e, u, gu)
    pts = np.random.default_rng(0).uniform(0, 1, (40, 2))
    np.testing.assert_allclose(e.values(pts) @ dofs, u(pts[:, 0], pts[:, 1]),
                               rtol=0, atol=1e-12)


def test_adini_space_on_rectangles():
    # On rectangles the auxiliary (bubble-free) element spans the cubic
    # serendipity space plus x^3 y and x y^3.
    rng = np.random.default_rng(4)
    for verts in RECTANGLES:
        g = QuadGeometry(verts)
        e = build_scalar_element(g)
        b, h = g.b, g.h
        for (i, j) in [(3, 1), (1, 3), (3, 0), (2, 1), (0, 3)]:
            def u(x, y):
                return ((x - b[0]) / h) ** i * ((y - b[1]) / h) ** j

            def gu(x, y):
                X, Y = (x - b[0]) / h, (y - b[1]) / h
                return np.stack([i * X ** max(i - 1, 0) * Y**j / h,
                                 j * X**i * Y ** max(j - 1, 0) / h], -1)

            dofs = scalar_dof_values(g, u, gu)
            interp = dofs @ e.aux_matrix  # auxiliary basis combination
            pts = g.map_reference(rng.uniform(-1, 1, (30, 2)))
            loc = g.to_local(pts)
            from quadseq.poly import vandermonde
            vals = vandermonde(loc) @ interp
            np.testing.assert_allclose(vals, u(pts[:, 0], pts[:, 1]),
                                       rtol=0, atol=1e-11)


def test_aggregation_formula_cross_check(random_quads):
    for g in random_quads:
        e = build_scalar_element(g)
        c = aggregation_coeffs_formula(g, e)
        assert np.abs(c - e.aggregation).max() < 1e-8


def test_aggregation_nontrivial_on_rectangle(unit_square):
    # The bubble corrections do not vanish on rectangles: the final space is
    # the cubic-serendipity one only after aggregation.
    e = build_scalar_element(unit_square)
    assert np.abs(e.aggregation).max() > 1e-3


def test_edge_mean_identity_on_basis(random_quads):
    for g in random_quads:
        e = build_scalar_element(g)
        assert _edge_mean_identity_residual(g, e.coeff_matrix) < 1e-10


def test_edge_mean_identity_cubic_example(unit_square):
    # w = x^3 on the bottom edge: mean 1/4 equals 1/2 - 3/12.
    from quadseq.poly import Poly2, pack
    w = Poly2.monomial(3, 0)
    resid = _edge_mean_identity_residual(unit_square, pack([w]))
    assert resid < 1e-13
    assert 0.25 == pytest.approx(0.5 - 3.0 / 12.0)


def test_bubbles_vanish_at_vertices(random_quads):
    from quadseq.poly import pack, DX, DY
    for g in random_quads[:10]:
        C = pack(bubble_span(g))
        from quadseq.poly import vandermonde
        V = vandermonde(g.local_vertices).T
        assert np.abs(C @ V).max() < 1e-13
        assert np.abs((C @ DX.T) @ V).max() < 1e-13
        assert np.abs((C @ DY.T) @ V).max() < 1e-13


def test_conditioning_error_on_near_degenerate():
    s = 0.999999
    verts = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    verts += np.array([1.0, -1.0, 1.0, -1.0])[:, None] * np.array([s, 0.0])[None, :]
    geom = QuadGeometry(verts)
    with pytest.raises(ElementConditioningError):
        build_scalar_element(geom)


# ---------------------------------------------------------------------------
# vector element
# ---------------------------------------------------------------------------

def test_vector_duality_and_constraints(random_quads):
    for g in random_quads:
        e = build_vector_element(g)
        assert e.duality_defect < 1e-10
        assert e.constraint_residual < 1e-10
        assert e.div_residual < 1e-10


def test_vector_p1_reproduction_unit_square(unit_square):
    e = build_vector_element(unit_square)
    v = lambda x, y: np.stack([np.asarray(y, dtype=float), np.asarray(x, dtype=float)], -1)
    dofs = interpolate_vector(e, v)
    pts = np.random.default_rng(1).uniform(0, 1, (30, 2))
    vals = np.einsum("qjc,j->qc", e.values(pts), dofs)
    np.testing.assert_allclose(vals, v(pts[:, 0], pts[:, 1]), rtol=0, atol=1e-12)


def test_weighted_normal_identity_linear_example(unit_square):
    # v = (y, x) on the bottom edge with outward normal (0, -1):
    # (1/|E|) int (v.n) xi ds = -1/6 = ((v(V2) - v(V1)).n) / 6.
    t = np.linspace(0, 1, 201)
    vn = -t  # v.n = -x along the bottom edge
    xi = 2 * t - 1
    integral = np.trapezoid(vn * xi, t)
    assert integral == pytest.approx(-1.0 / 6.0, abs=1e-4)
    e = build_vector_element(unit_square)
    assert _weighted_normal_identity_residual(unit_square, e) < 1e-10


def test_weighted_normal_identity_on_basis(random_quads):
    for g in random_quads:
        e = build_vector_element(g)
        assert _weighted_normal_identity_residual(g, e) < 1e-10


def test_curl_inclusion_on_mesh_cells():
    for family, seed in [("rectangular", 0), ("trapezoidal", 0), ("random", 5)]:
        mesh = make_mesh(4, family, seed=seed)
        for ci in range(mesh.n_cells):
            g = mesh.geometry(ci)
            se = build_scalar_element(g)
            ve = build_vector_element(g)
            resid, flux = _curl_inclusion_residual(g, se, ve)
            assert resid < 1e-10
            assert flux < 1e-10


def test_divergence_of_interpolated_curl_vanishes(unit_square):
    # The rotated gradient of a clamped stream function has zero boundary
    # flux, so the constant divergence of its interpolant vanishes.
    from quadseq.cases import brinkman_sin_stream
    case = brinkman_sin_stream()
    e = build_vector_element(unit_square)
    dofs = interpolate_vector(e, case.velocity)
    div_const = dofs @ e.div_constants
    assert abs(div_const * unit_square.area) < 1e-12


def test_bubble_trace_relation(random_quads):
    from quadseq.verify import _bubble_residuals
    for g in random_quads[:10]:
        vals, trace = _bubble_residuals(g)
        assert trace < 1e-10
