"""Per-cell geometry of a convex quadrilateral.

Each cell carries the decomposition of its bilinear reference map into a
simple distortion followed by an affine map; the distortion is encoded by a
shape vector s = (s1, s2) with |s1| + |s2| < 1 exactly when the cell is
strictly convex. All line forms (edge lines, diagonals, midlines) are stored
as polynomials in the cell-local frame (x - b) / h, where b is the vertex
centroid and h the cell diameter, which keeps high-degree shape-function
algebra well conditioned independently of the mesh size.
"""

from __future__ import annotations

import numpy as np

from .poly import Poly2

__all__ = [
    "QuadGeometry",
    "compute_geometry",
    "cell_area",
    "shoelace_area",
    "NonConvexCellError",
    "DegenerateCellError",
]

# Reference square corners, counterclockwise from bottom-left.
REF_CORNERS = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])


class NonConvexCellError(ValueError):
    """Cell fails the strict convexity bound |s1| + |s2| < 1."""


class DegenerateCellError(ValueError):
    """Cell has a zero-length edge or a singular affine factor."""


def shoelace_area(vertices: np.ndarray) -> float:
    v = np.asarray(vertices, dtype=float)
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _line_through(p, q, norm_point) -> Poly2:
    """Affine form vanishing on the line pq, scaled to equal 1 at norm_point."""
    dx, dy = q[0] - p[0], q[1] - p[1]
    c0, cx, cy = dy * p[0] - dx * p[1], -dy, dx
    scale = c0 + cx * norm_point[0] + cy * norm_point[1]
    if scale == 0.0:
        raise DegenerateCellError("line normalization point lies on the line")
    return Poly2.affine(c0 / scale, cx / scale, cy / scale)


class QuadGeometry:
    """Geometry bundle for one convex quadrilateral.

    Vertices must be counterclockwise. Edge i joins vertex i to vertex
    (i+1) % 4; normals point outward, tangents run counterclockwise.
    """

    __slots__ = (
        "vertices", "A", "b", "d", "s", "h", "area",
        "edge_mid", "edge_len", "tangents", "normals",
        "local_vertices", "edge_lines", "diag_13", "diag_24",
        "mid_13", "mid_24", "edge_params",
    )

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float).reshape(4, 2)
        self.vertices = v

        edge_vec = np.roll(v, -1, axis=0) - v
        self.edge_len = np.linalg.norm(edge_vec, axis=1)
        if np.any(self.edge_len < 1e-14):
            raise DegenerateCellError("zero-length edge")

        area = shoelace_area(v)
        if area <= 0.0:
            raise ValueError("vertices must be ordered counterclockwise")
        self.area = area

        V1, V2, V3, V4 = v
        self.A = 0.25 * np.column_stack([V3 - V4 - V1 + V2, V3 + V4 - V1 - V2])
        self.b = 0.25 * (V1 + V2 + V3 + V4)
        self.d = 0.25 * (V3 - V4 + V1 - V2)
        if abs(np.linalg.det(self.A)) < 1e-14:
            raise DegenerateCellError("singular affine factor of the bilinear map")
        self.s = np.linalg.solve(self.A, self.d)
        if abs(self.s[0]) + abs(self.s[1]) >= 1.0:
            raise NonConvexCellError(
                f"|s1|+|s2| = {abs(self.s[0]) + abs(self.s[1]):.6f} >= 1"
            )

        diffs = v[:, None, :] - v[None, :, :]
        self.h = float(np.sqrt((diffs**2).sum(-1).max()))

        self.edge_mid = 0.5 * (v + np.roll(v, -1, axis=0))
        self.tangents = edge_vec / self.edge_len[:, None]
        # Outward normal of a counterclockwise polygon: tangent rotated by -90.
        self.normals = np.column_stack([self.tangents[:, 1], -self.tangents[:, 0]])

        lv = self.to_local(v)
        lm = self.to_local(self.edge_mid)
        self.local_vertices = lv

        # Normalization of the line forms: l_i(M_{i+2}) = 1, m13(M_2) = 1,
        # m24(M_3) = 1, diag through V1V3 equals 1 at V4, V2V4 at V3.
        self.edge_lines = [
            _line_through(lv[i], lv[(i + 1) % 4], lm[(i + 2) % 4]) for i in range(4)
        ]
        self.mid_13 = _line_through(lm[0], lm[2], lm[1])
        self.mid_24 = _line_through(lm[1], lm[3], lm[2])
        self.diag_13 = _line_through(lv[0], lv[2], lv[3])
        self.diag_24 = _line_through(lv[1], lv[3], lv[2])

        # Signed edge parameter: -1 at V_i, +1 at V_{i+1}, affine in the plane.
        self.edge_params = []
        for i in range(4):
            t = self.tangents[i]
            c = 2.0 * self.h / self.edge_len[i]
            self.edge_params.append(
                Poly2.affine(-c * float(lm[i] @ t), c * t[0], c * t[1])
            )

    # -- frames and maps -----------------------------------------------------

    def to_local(self, points):
        return (np.asarray(points, dtype=float) - self.b) / self.h

    def from_local(self, points):
        return np.asarray(points, dtype=float) * self.h + self.b

    def map_reference(self, ref_points):
        """Bilinear map from the reference square [-1,1]^2 to the cell."""
        r = np.atleast_2d(np.asarray(ref_points, dtype=float))
        xh, yh = r[:, 0], r[:, 1]
        N = 0.25 * np.column_stack([
            (1 - xh) * (1 - yh), (1 + xh) * (1 - yh),
            (1 + xh) * (1 + yh), (1 - xh) * (1 + yh),
        ])
        return N @ self.vertices

    def jacobian_det(self, ref_points):
        """det DF of the bilinear map at reference points."""
        r = np.atleast_2d(np.asarray(ref_points, dtype=float))
        xh, yh = r[:, 0], r[:, 1]
        detA = np.linalg.det(self.A)
        # F = A o S with S(x) = x + x*y*s, so det DF = det A * det DS.
        det_2 = (1 + yh * self.s[0]) * (1 + xh * self.s[1]) - xh * yh * self.s[0] * self.s[1]
        return detA * det_2

    def affine_factor(self, points):
        """The affine part x -> A x + b applied to intermediate-frame points."""
        return np.atleast_2d(np.asarray(points, dtype=float)) @ self.A.T + self.b

    def intermediate_vertices(self):
        """Preimages of the vertices under the affine factor."""
        signs = np.array([1.0, -1.0, 1.0, -1.0])
        return REF_CORNERS + signs[:, None] * self.s[None, :]

    def edge_points(self, i: int, t):
        """Physical points V_i + t (V_{i+1} - V_i) for t in [0, 1]."""
        t = np.asarray(t, dtype=float)[:, None]
        return self.vertices[i] + t * (self.vertices[(i + 1) % 4] - self.vertices[i])

    def shape_key(self) -> bytes:
        """Cache key identifying the cell shape up to translation and scaling."""
        return np.round(self.local_vertices, 12).tobytes()


def compute_geometry(vertices) -> QuadGeometry:
    """Build the full geometry bundle for one counterclockwise convex quad."""
    return QuadGeometry(vertices)


def cell_area(geometry: QuadGeometry) -> float:
    return geometry.area
