"""Discrete exact-sequence verification and the inf-sup witness.

The three global spaces form the chain

    scalar space --rotated gradient--> vector space --divergence--> pressures

and exactness is an integer statement: the divergence matrix is onto the
mean-zero pressures, its kernel has the dimension of the scalar space, and
the rotated gradients of the scalar basis span that kernel. Ranks are
computed by dense SVD with a relative singular-value cutoff, and the report
records the spectral gap at the cut.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh as scipy_eigh

from .assembly import ElementCache, scalar_dof_scaling, vector_dof_scaling
from .cases import brinkman_sin_stream
from .dofmap import ScalarDofMap, VectorDofMap
from .elements import _PackedSet, _vector_dof_rows, vector_dof_values
from .mesh import Mesh
from .poly import DX, DY, MONOMIALS, Poly2, VecPoly2

__all__ = [
    "divergence_matrix",
    "curl_matrix",
    "verify_exact_sequence",
    "SequenceReport",
    "inf_sup_constant",
]


def divergence_matrix(mesh: Mesh, cache: ElementCache | None = None):
    """Dense matrix of the cellwise divergence: vector DoFs -> cell constants."""
    cache = cache or ElementCache()
    dm = VectorDofMap(mesh)
    D = np.zeros((mesh.n_cells, dm.ndof))
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.vector(geom)
        div_phys = (
            vector_dof_scaling(geom.h) * dm.cell_signs[ci]
            * shape.element.div_constants / geom.h
        )
        dofs = dm.cell_dofs[ci]
        free = dofs >= 0
        D[ci, dofs[free]] += div_phys[free]
    return D, dm


def curl_matrix(mesh: Mesh):
    """Sparse map taking scalar DoFs to the vector DoFs of the rotated gradient.

    Vertex part: (w_y, -w_x) at each interior vertex. Edge part: the normal
    integral of the rotated gradient equals the difference of the endpoint
    values of w taken along the edge's global tangent.
    """
    sdm = ScalarDofMap(mesh)
    vdm = VectorDofMap(mesh)
    rows, cols, vals = [], [], []
    for v in range(mesh.n_vertices):
        if mesh.vertex_is_boundary[v]:
            continue
        wv, wx, wy = sdm.vertex_dofs[v]
        ux, uy = vdm.vertex_dofs[v]
        rows += [ux, uy]
        cols += [wy, wx]
        vals += [1.0, -1.0]
    for ei in range(mesh.n_edges):
        ed = vdm.edge_dofs[ei]
        if ed < 0:
            continue
        a, b = mesh.edge_vertices[ei]
        # t_E = -(unit vector from a to b), so the integral of d w / d t_E
        # along the edge is w(V_a) - w(V_b).
        for vert, sign in ((a, 1.0), (b, -1.0)):
            wv = sdm.vertex_dofs[vert][0]
            if wv >= 0:
                rows.append(ed)
                cols.append(wv)
                vals.append(sign)
    C = sp.coo_matrix((vals, (rows, cols)), shape=(vdm.ndof, sdm.ndof))
    return C.toarray(), sdm, vdm


@dataclass
class SequenceReport:
    dims: dict
    rank_div: int
    nullity_div: int
    rank_curl: int
    rank_combined: int
    sv_gap: float
    div_curl_max: float
    curl_reinterp_residual: float
    curl_global_consistency: float
    commuting_residual: float
    cutoff: float
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "dims": self.dims,
            "rank_div": self.rank_div,
            "nullity_div": self.nullity_div,
            "rank_curl": self.rank_curl,
            "rank_combined": self.rank_combined,
            "sv_gap": self.sv_gap,
            "div_curl_max": self.div_curl_max,
            "curl_reinterp_residual": self.curl_reinterp_residual,
            "curl_global_consistency": self.curl_global_consistency,
            "commuting_residual": self.commuting_residual,
            "cutoff": self.cutoff,
            "checks": self.checks,
            "passed": self.passed,
        }


def _rank(singular_values: np.ndarray, cutoff: float):
    if len(singular_values) == 0 or singular_values[0] == 0.0:
        return 0, np.inf
    thresh = cutoff * singular_values[0]
    rank = int((singular_values > thresh).sum())
    if rank == 0 or rank >= len(singular_values):
        gap = np.inf
    else:
        below = singular_values[rank]
        gap = np.inf if below == 0 else singular_values[rank - 1] / below
    return rank, gap


def verify_exact_sequence(mesh: Mesh, cache: ElementCache | None = None,
                          cutoff: float = 1e-9, probe=None,
                          tol: float = 1e-10) -> SequenceReport:
    """Check exactness of the discrete sequence on one mesh.

    Verifies: rotated gradients of the scalar basis land in the vector space
    (per-cell re-interpolation and global DoF consistency), the divergence
    matrix annihilates them, its rank is the pressure dimension N_K - 1, its
    nullity is the scalar dimension 3 N_V^i, the rotated-gradient image
    spans the kernel, and the per-cell commuting identity: the divergence of
    the interpolant integrates to the boundary flux for a smooth probe.
    """
    cache = cache or ElementCache()
    D, vdm = divergence_matrix(mesh, cache)
    C, sdm, _ = curl_matrix(mesh)

    sv = np.linalg.svd(D, compute_uv=False)
    rank_div, gap = _rank(sv, cutoff)
    nullity = vdm.ndof - rank_div

    _, s_full, Vt = np.linalg.svd(D)
    kernel = Vt[rank_div:, :].T

    rank_curl, _ = _rank(np.linalg.svd(C, compute_uv=False), cutoff)
    combined = np.hstack([C, kernel])
    rank_combined, _ = _rank(np.linalg.svd(combined, compute_uv=False), cutoff)

    div_curl_max = float(np.abs(D @ C).max()) if C.size else 0.0

    # Per-cell: the rotated gradient of each scalar basis function,
    # re-interpolated through the vector DoFs, must reproduce itself.
    reinterp = 0.0
    seen = set()
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        key = geom.shape_key()
        if key in seen:
            continue
        seen.add(key)
        sc = cache.scalar(geom).element
        vc = cache.vector(geom).element
        curl_x = sc.coeff_matrix @ DY.T
        curl_y = -(sc.coeff_matrix @ DX.T)
        # DoF values of each rotated gradient under the vector element's DoFs.
        px = _PackedSet.from_matrix(curl_x)
        py = _PackedSet.from_matrix(curl_y)
        ugeom = cache.vector(geom).geom
        S = _vector_dof_rows(px, py, ugeom)[:12].T     # (12 curls, 12 dofs)
        rx = S @ vc.coeff_x - curl_x
        ry = S @ vc.coeff_y - curl_y
        reinterp = max(reinterp, float(np.abs(rx).max()), float(np.abs(ry).max()))

    # Global consistency: push a random scalar coefficient vector through the
    # matrix and compare against per-cell DoFs of the local rotated gradient.
    rng = np.random.default_rng(0)
    w = rng.standard_normal(sdm.ndof) if sdm.ndof else np.zeros(0)
    u = C @ w if sdm.ndof else np.zeros(vdm.ndof)
    consistency = 0.0
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        sc = cache.scalar(geom).element
        h = geom.h
        c = sdm.gather(w, ci) * scalar_dof_scaling(h)
        curl_x = (c @ (sc.coeff_matrix @ DY.T)) / h
        curl_y = -(c @ (sc.coeff_matrix @ DX.T)) / h
        loc_field = VecPoly2(
            Poly2({m: v for m, v in zip(MONOMIALS, curl_x) if v != 0.0}),
            Poly2({m: v for m, v in zip(MONOMIALS, curl_y) if v != 0.0}),
        )
        def eval_phys(x, y, fld=loc_field, geom=geom):
            loc = geom.to_local(np.column_stack([np.atleast_1d(x), np.atleast_1d(y)]))
            return fld(loc[:, 0], loc[:, 1])
        sigma = vector_dof_values(geom, eval_phys)
        gathered = vdm.gather(u, ci)
        consistency = max(consistency, float(np.abs(sigma - gathered).max()))

    # Commuting identity for a smooth probe: cellwise divergence of the
    # interpolant integrates to the boundary flux.
    probe = probe or brinkman_sin_stream().velocity
    commuting = 0.0
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        vc = cache.vector(geom).element
        sigma = vector_dof_values(geom, probe)
        mu = vector_dof_scaling(geom.h)
        div_const = float((sigma * mu) @ vc.div_constants) / geom.h
        flux = float(sigma[:4].sum())
        commuting = max(commuting, abs(div_const * geom.area - flux))

    dims = {
        "scalar": sdm.ndof,
        "vector": vdm.ndof,
        "pressure": mesh.n_cells - 1,
        "n_cells": mesh.n_cells,
        "interior_vertices": mesh.n_interior_vertices,
        "interior_edges": mesh.n_interior_edges,
    }
    checks = {
        "rank_div_is_pressure_dim": rank_div == mesh.n_cells - 1,
        "nullity_is_scalar_dim": nullity == sdm.ndof,
        "curl_injective": rank_curl == sdm.ndof,
        "curl_spans_kernel": rank_combined == nullity,
        "div_curl_zero": div_curl_max <= tol,
        "curl_reinterpolation": reinterp <= tol,
        "curl_global_consistency": consistency <= 1e-8,
        "commuting": commuting <= tol,
        "alternating_sum_zero": sdm.ndof - vdm.ndof + (mesh.n_cells - 1) == 0,
    }
    return SequenceReport(
        dims=dims, rank_div=rank_div, nullity_div=nullity, rank_curl=rank_curl,
        rank_combined=rank_combined, sv_gap=gap, div_curl_max=div_curl_max,
        curl_reinterp_residual=reinterp, curl_global_consistency=consistency,
        commuting_residual=commuting, cutoff=cutoff, checks=checks,
    )


def inf_sup_constant(mesh: Mesh, cache: ElementCache | None = None,
                     quad_order: int = 4) -> float:
    """Smallest nonzero generalized singular value of the divergence form.

    beta = min over mean-zero cell pressures q of
    max over v of b(v, q) / (||v||_1h ||q||_0), computed densely from the
    velocity H1 Gram matrix and the cell-area pressure mass.
    """
    cache = cache or ElementCache()
    dm = VectorDofMap(mesh)
    X = np.zeros((dm.ndof, dm.ndof))
    B = np.zeros((mesh.n_cells, dm.ndof))
    areas = np.zeros(mesh.n_cells)
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.vector(geom)
        G_hat, M_hat = shape.matrices(quad_order)
        h = geom.h
        w = vector_dof_scaling(h) * dm.cell_signs[ci]
        loc = np.outer(w, w) * (G_hat + h**2 * M_hat)
        dofs = dm.cell_dofs[ci]
        free = dofs >= 0
        idx = dofs[free]
        X[np.ix_(idx, idx)] += loc[np.ix_(free, free)]
        div_phys = w * shape.element.div_constants / h
        B[ci, idx] += (div_phys * geom.area)[free]
        areas[ci] = geom.area
    S = B @ np.linalg.solve(X, B.T)
    M_p = np.diag(areas)
    vals = scipy_eigh(S, M_p, eigvals_only=True)
    vals = np.sort(vals)
    return float(np.sqrt(max(vals[1], 0.0)))
