"""Quadrilateral meshes of the unit square.

Three families are provided: uniform rectangles, uniform trapezoids
(alternating vertical displacement of the interior grid points), and random
perturbations of the rectangular grid, where every interior vertex is moved
by an i.i.d. uniform sample and resampled until all incident cells stay
strictly convex. Boundary vertices never move, so the domain is exactly
[0, 1]^2 for every family.
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .geometry import QuadGeometry

__all__ = ["Mesh", "make_mesh", "MeshGenerationError", "FAMILIES"]

FAMILIES = ("rectangular", "trapezoidal", "random")
DEFAULT_DELTA = {"rectangular": 0.0, "trapezoidal": 0.2, "random": 0.2}
_MAX_RESAMPLES = 100


class MeshGenerationError(RuntimeError):
    """Raised when a perturbed vertex cannot be placed convexly."""


def _convexity_shape(cell_vertices) -> float:
    """|s1| + |s2| of the bilinear-map distortion; < 1 means strictly convex."""
    V1, V2, V3, V4 = cell_vertices
    A = 0.25 * np.column_stack([V3 - V4 - V1 + V2, V3 + V4 - V1 - V2])
    d = 0.25 * (V3 - V4 + V1 - V2)
    if abs(np.linalg.det(A)) < 1e-14:
        return np.inf
    s = np.linalg.solve(A, d)
    return abs(s[0]) + abs(s[1])


class Mesh:
    """Vertices, counterclockwise quads, and edge connectivity with fixed frames.

    Each edge stores a global unit normal n_E (the counterclockwise rotation
    of the edge direction taken from lower to higher vertex index) and the
    tangent t_E obtained by rotating n_E a further ninety degrees. Per cell,
    ``cell_edge_signs`` records whether the cell's outward normal on that
    edge agrees with n_E.
    """

    def __init__(self, vertices, cells, family="custom", n=None, delta=0.0, seed=None):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 2)
        self.cells = np.asarray(cells, dtype=int).reshape(-1, 4)
        self.family = family
        self.n = n
        self.delta = delta
        self.seed = seed
        self._geometry_cache: dict[int, QuadGeometry] = {}
        self._build_edges()

    def _build_edges(self):
        edge_index: dict[tuple[int, int], int] = {}
        edge_vertices = []
        edge_cells: list[list[int]] = []
        cell_edges = np.zeros_like(self.cells)
        for ci, cell in enumerate(self.cells):
            for k in range(4):
                a, b = int(cell[k]), int(cell[(k + 1) % 4])
                key = (min(a, b), max(a, b))
                ei = edge_index.get(key)
                if ei is None:
                    ei = len(edge_vertices)
                    edge_index[key] = ei
                    edge_vertices.append(key)
                    edge_cells.append([])
                edge_cells[ei].append(ci)
                cell_edges[ci, k] = ei
        self.edge_vertices = np.array(edge_vertices, dtype=int)
        self.edge_cells = edge_cells
        self.cell_edges = cell_edges

        n_adj = np.array([len(c) for c in edge_cells])
        if np.any(n_adj > 2):
            raise ValueError("non-manifold mesh: an edge with more than two cells")
        self.edge_is_boundary = n_adj == 1

        self.vertex_is_boundary = np.zeros(len(self.vertices), dtype=bool)
        for ei in np.nonzero(self.edge_is_boundary)[0]:
            self.vertex_is_boundary[self.edge_vertices[ei]] = True

        vec = self.vertices[self.edge_vertices[:, 1]] - self.vertices[self.edge_vertices[:, 0]]
        vec /= np.linalg.norm(vec, axis=1)[:, None]
        self.edge_normal = np.column_stack([-vec[:, 1], vec[:, 0]])
        self.edge_tangent = np.column_stack([-self.edge_normal[:, 1], self.edge_normal[:, 0]])

        signs = np.zeros_like(self.cells)
        for ci, cell in enumerate(self.cells):
            for k in range(4):
                a, b = int(cell[k]), int(cell[(k + 1) % 4])
                t = self.vertices[b] - self.vertices[a]
                outward = np.array([t[1], -t[0]])
                signs[ci, k] = 1 if outward @ self.edge_normal[self.cell_edges[ci, k]] > 0 else -1
        self.cell_edge_signs = signs

    # -- counts --------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def n_edges(self) -> int:
        return len(self.edge_vertices)

    @property
    def n_interior_vertices(self) -> int:
        return int((~self.vertex_is_boundary).sum())

    @property
    def n_interior_edges(self) -> int:
        return int((~self.edge_is_boundary).sum())

    def euler_characteristic(self) -> int:
        """Interior vertices - interior edges + cells; equals 1 on a disk."""
        return self.n_interior_vertices - self.n_interior_edges + self.n_cells

    # -- geometry --------------------------------------------------------------

    def geometry(self, cell_index: int) -> QuadGeometry:
        geo = self._geometry_cache.get(cell_index)
        if geo is None:
            geo = QuadGeometry(self.vertices[self.cells[cell_index]])
            self._geometry_cache[cell_index] = geo
        return geo

    def geometries(self):
        return [self.geometry(i) for i in range(self.n_cells)]

    # -- serialization -----------------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "schema": "quadseq-mesh-1",
            "family": self.family,
            "n": self.n,
            "delta": self.delta,
            "seed": self.seed,
            "vertices": self.vertices.tolist(),
            "cells": self.cells.tolist(),
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "Mesh":
        doc = json.loads(text)
        return cls(
            doc["vertices"], doc["cells"],
            family=doc.get("family", "custom"), n=doc.get("n"),
            delta=doc.get("delta", 0.0), seed=doc.get("seed"),
        )

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_json())
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "Mesh":
        with open(path) as fh:
            return cls.from_json(fh.read())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()


def _grid(n: int):
    coords = np.arange(n + 1) / n
    xx, yy = np.meshgrid(coords, coords, indexing="xy")
    vertices = np.column_stack([xx.ravel(), yy.ravel()])
    cells = []
    for j in range(n):
        for i in range(n):
            base = j * (n + 1) + i
            cells.append([base, base + 1, base + n + 2, base + n + 1])
    return vertices, np.array(cells, dtype=int)


def _interior_mask(n: int) -> np.ndarray:
    mask = np.zeros((n + 1) * (n + 1), dtype=bool)
    for j in range(1, n):
        for i in range(1, n):
            mask[j * (n + 1) + i] = True
    return mask


def make_mesh(n: int, family: str, delta: float | None = None, seed: int = 0) -> Mesh:
    """Generate an n x n mesh of [0,1]^2 of the requested family.

    delta is the displacement amplitude as a fraction of the grid spacing:
    the vertical alternation of the trapezoids, or the half-width of the
    uniform square from which random displacements are drawn. Boundary
    vertices are never displaced.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")
    if delta is None:
        delta = DEFAULT_DELTA[family]
    if not 0.0 <= delta <= 0.25:
        raise ValueError("delta must lie in [0, 0.25]")

    vertices, cells = _grid(n)
    h = 1.0 / n
    interior = _interior_mask(n)

    if family == "trapezoidal":
        for j in range(1, n):
            for i in range(1, n):
                vertices[j * (n + 1) + i, 1] += (-1.0) ** (i + j) * delta * h
    elif family == "random":
        rng = np.random.default_rng(seed)
        idx = np.nonzero(interior)[0]
        vertices[idx] += rng.uniform(-delta * h, delta * h, size=(len(idx), 2))

        vertex_cells: dict[int, list[int]] = {int(v): [] for v in idx}
        for ci, cell in enumerate(cells):
            for v in cell:
                if interior[v]:
                    vertex_cells[int(v)].append(ci)

        base = _grid(n)[0]
        attempts = {int(v): 0 for v in idx}
        for _ in range(_MAX_RESAMPLES * len(idx) + 1):
            bad = sorted({
                int(v)
                for ci in range(len(cells))
                if _convexity_shape(vertices[cells[ci]]) >= 1.0
                for v in cells[ci]
                if interior[v]
            })
            if not bad:
                break
            for v in bad:
                attempts[v] += 1
                if attempts[v] > _MAX_RESAMPLES:
                    raise MeshGenerationError(
                        f"vertex {v} cannot be placed convexly after {_MAX_RESAMPLES} resamples"
                    )
                vertices[v] = base[v] + rng.uniform(-delta * h, delta * h, size=2)
        else:
            raise MeshGenerationError("convexity repair did not terminate")

    return Mesh(vertices, cells, family=family, n=n, delta=delta, seed=seed)
