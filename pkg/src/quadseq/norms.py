"""Broken-norm errors of discrete or interpolated fields.

Fields provide per-cell DoF vectors; two flavors exist for each space: a
solution field gathering a solved global coefficient vector through the DoF
map, and an interpolant field taking local DoFs straight from a manufactured
solution (the nodal interpolant, no boundary conditions involved). Error
quadrature uses an independent, higher-order rule than assembly.
"""

from __future__ import annotations

import numpy as np

from .assembly import ElementCache, scalar_dof_scaling, vector_dof_scaling
from .cases import BrinkmanCase, ScalarCase
from .dofmap import ScalarDofMap, VectorDofMap
from .elements import vector_dof_values
from .mesh import Mesh

__all__ = [
    "ScalarSolutionField",
    "ScalarInterpolantField",
    "VectorSolutionField",
    "VectorInterpolantField",
    "scalar_error_norms",
    "brinkman_error_norms",
    "pressure_l2_error",
]

DEFAULT_ERROR_QUAD = 6


class ScalarSolutionField:
    def __init__(self, mesh: Mesh, dofmap: ScalarDofMap, coefficients: np.ndarray):
        self.mesh = mesh
        self.dofmap = dofmap
        self.coefficients = coefficients

    def cell_dofs(self, ci: int) -> np.ndarray:
        return self.dofmap.gather(self.coefficients, ci)


class ScalarInterpolantField:
    """Cellwise nodal interpolant of a smooth function."""

    def __init__(self, mesh: Mesh, case: ScalarCase):
        v = mesh.vertices
        self._vals = np.asarray(case.u(v[:, 0], v[:, 1]), dtype=float)
        self._grads = np.asarray(case.grad(v[:, 0], v[:, 1]), dtype=float)
        self.mesh = mesh

    def cell_dofs(self, ci: int) -> np.ndarray:
        idx = self.mesh.cells[ci]
        return np.concatenate(
            [self._vals[idx], self._grads[idx, 0], self._grads[idx, 1]]
        )


class VectorSolutionField:
    def __init__(self, mesh: Mesh, dofmap: VectorDofMap, coefficients: np.ndarray):
        self.mesh = mesh
        self.dofmap = dofmap
        self.coefficients = coefficients

    def cell_dofs(self, ci: int) -> np.ndarray:
        return self.dofmap.gather(self.coefficients, ci)


class VectorInterpolantField:
    """Cellwise nodal interpolant of a smooth vector field."""

    def __init__(self, mesh: Mesh, case: BrinkmanCase, edge_points: int = 5):
        self.mesh = mesh
        self.velocity = case.velocity
        self.edge_points = edge_points

    def cell_dofs(self, ci: int) -> np.ndarray:
        return vector_dof_values(
            self.mesh.geometry(ci), self.velocity, self.edge_points
        )


def scalar_error_norms(mesh: Mesh, field, case: ScalarCase, eps: float = 0.0,
                       quad_order: int = DEFAULT_ERROR_QUAD,
                       cache: ElementCache | None = None) -> dict[str, float]:
    """Broken H1/H2 seminorm errors and the parameter-weighted energy error.

    The H2 seminorm follows the Sobolev multi-index convention (the mixed
    second derivative counted once), which is the convention behind the
    reference convergence tables; the assembled bilinear form, by contrast,
    contracts full Hessians.
    """
    cache = cache or ElementCache()
    h1_sq = 0.0
    h2_sq = 0.0
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.scalar(geom)
        tab = shape.tabulation(quad_order)
        h = geom.h
        c = field.cell_dofs(ci) * scalar_dof_scaling(h)
        grad_h = np.einsum("j,qjc->qc", c, tab.grad) / h
        hess_h = np.einsum("j,qjcd->qcd", c, tab.hess) / h**2

        pts = geom.from_local(tab.points)
        w = tab.weights * h**2
        grad_e = np.asarray(case.grad(pts[:, 0], pts[:, 1]), dtype=float)
        hess_e = np.asarray(case.hessian(pts[:, 0], pts[:, 1]), dtype=float)
        E = hess_h - hess_e
        h1_sq += float(w @ ((grad_h - grad_e) ** 2).sum(-1))
        h2_sq += float(w @ (E[:, 0, 0] ** 2 + E[:, 0, 1] ** 2 + E[:, 1, 1] ** 2))
    return {
        "h1": np.sqrt(h1_sq),
        "h2": np.sqrt(h2_sq),
        "energy": np.sqrt(eps**2 * h2_sq + h1_sq),
    }


def brinkman_error_norms(mesh: Mesh, field, case: BrinkmanCase,
                         nu: float, alpha: float,
                         pressure_values: np.ndarray | None = None,
                         quad_order: int = DEFAULT_ERROR_QUAD,
                         cache: ElementCache | None = None) -> dict[str, float]:
    """Velocity errors (L2, broken H1, a_h combination) and pressure L2 error."""
    cache = cache or ElementCache()
    l2_sq = 0.0
    h1_sq = 0.0
    p_sq = 0.0
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.vector(geom)
        tab = shape.tabulation(quad_order)
        h = geom.h
        c = field.cell_dofs(ci) * vector_dof_scaling(h)
        val_h = np.einsum("j,qjc->qc", c, tab.val)
        grad_h = np.einsum("j,qjcd->qcd", c, tab.grad) / h

        pts = geom.from_local(tab.points)
        w = tab.weights * h**2
        val_e = np.asarray(case.velocity(pts[:, 0], pts[:, 1]), dtype=float)
        grad_e = np.asarray(case.velocity_grad(pts[:, 0], pts[:, 1]), dtype=float)
        l2_sq += float(w @ ((val_h - val_e) ** 2).sum(-1))
        h1_sq += float(w @ ((grad_h - grad_e) ** 2).sum((-1, -2)))

        if pressure_values is not None:
            p_e = np.asarray(case.pressure(pts[:, 0], pts[:, 1]), dtype=float)
            p_sq += float(w @ (p_e - pressure_values[ci]) ** 2)

    out = {
        "velocity_l2": np.sqrt(l2_sq),
        "velocity_h1": np.sqrt(h1_sq),
        "velocity_ah": np.sqrt(nu * h1_sq + alpha * l2_sq),
    }
    if pressure_values is not None:
        out["pressure_l2"] = np.sqrt(p_sq)
    return out


def pressure_l2_error(mesh: Mesh, pressure_values, case: BrinkmanCase,
                      quad_order: int = DEFAULT_ERROR_QUAD,
                      cache: ElementCache | None = None) -> float:
    """L2 distance between cellwise-constant pressures and the exact pressure."""
    cache = cache or ElementCache()
    p_sq = 0.0
    pv = np.zeros(mesh.n_cells) if pressure_values is None else np.asarray(pressure_values)
    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        tab = cache.vector(geom).tabulation(quad_order)
        pts = geom.from_local(tab.points)
        w = tab.weights * geom.h**2
        p_e = np.asarray(case.pressure(pts[:, 0], pts[:, 1]), dtype=float)
        p_sq += float(w @ (p_e - pv[ci]) ** 2)
    return float(np.sqrt(p_sq))
