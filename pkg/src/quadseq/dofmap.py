"""Global numbering of the scalar, vector, and pressure unknowns.

Scalar space: three unknowns (value, d/dx, d/dy) per interior vertex; all
DoFs at boundary vertices are constrained to zero. Vector space: two
component unknowns per interior vertex plus one signed normal-integral
unknown per interior edge, measured in the edge's global frame n_E; boundary
edges and boundary vertices are constrained. Constrained slots carry index
-1 in the local-to-global tables.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh

__all__ = ["ScalarDofMap", "VectorDofMap"]


class ScalarDofMap:
    """value/d_x/d_y unknowns at interior vertices; dim = 3 * N_V^i."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        interior = ~mesh.vertex_is_boundary
        rank = -np.ones(mesh.n_vertices, dtype=int)
        rank[interior] = np.arange(interior.sum())
        self.vertex_rank = rank
        self.ndof = 3 * int(interior.sum())

        # vertex_dofs[v] = (value, d/dx, d/dy) global indices or -1.
        vd = -np.ones((mesh.n_vertices, 3), dtype=int)
        vd[interior, 0] = 3 * rank[interior]
        vd[interior, 1] = 3 * rank[interior] + 1
        vd[interior, 2] = 3 * rank[interior] + 2
        self.vertex_dofs = vd

        cd = np.empty((mesh.n_cells, 12), dtype=int)
        cd[:, 0:4] = vd[mesh.cells, 0]
        cd[:, 4:8] = vd[mesh.cells, 1]
        cd[:, 8:12] = vd[mesh.cells, 2]
        self.cell_dofs = cd

    def gather(self, x: np.ndarray, cell_index: int) -> np.ndarray:
        """Local DoF values of a global coefficient vector (zeros where constrained)."""
        dofs = self.cell_dofs[cell_index]
        out = np.zeros(12)
        free = dofs >= 0
        out[free] = x[dofs[free]]
        return out


class VectorDofMap:
    """Component unknowns at interior vertices plus normal-mean unknowns on
    interior edges; dim = 2 * N_V^i + N_E^i.

    The global edge unknown is the integral of v . n_E over the edge. A
    cell's local edge DoF uses its outward normal, so the local-to-global
    map carries a sign: +1 when the outward normal coincides with n_E.
    """

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        interior_v = ~mesh.vertex_is_boundary
        n_vi = int(interior_v.sum())
        vrank = -np.ones(mesh.n_vertices, dtype=int)
        vrank[interior_v] = np.arange(n_vi)

        interior_e = ~mesh.edge_is_boundary
        erank = -np.ones(mesh.n_edges, dtype=int)
        erank[interior_e] = np.arange(int(interior_e.sum()))

        self.ndof = 2 * n_vi + int(interior_e.sum())

        vd = -np.ones((mesh.n_vertices, 2), dtype=int)
        vd[interior_v, 0] = 2 * vrank[interior_v]
        vd[interior_v, 1] = 2 * vrank[interior_v] + 1
        self.vertex_dofs = vd

        ed = -np.ones(mesh.n_edges, dtype=int)
        ed[interior_e] = 2 * n_vi + erank[interior_e]
        self.edge_dofs = ed

        cd = np.empty((mesh.n_cells, 12), dtype=int)
        sg = np.ones((mesh.n_cells, 12), dtype=float)
        cd[:, 0:4] = ed[mesh.cell_edges]
        sg[:, 0:4] = mesh.cell_edge_signs
        cd[:, 4:8] = vd[mesh.cells, 0]
        cd[:, 8:12] = vd[mesh.cells, 1]
        self.cell_dofs = cd
        self.cell_signs = sg

    def gather(self, x: np.ndarray, cell_index: int) -> np.ndarray:
        """Local DoF values (outward-normal convention) of a global vector."""
        dofs = self.cell_dofs[cell_index]
        out = np.zeros(12)
        free = dofs >= 0
        out[free] = x[dofs[free]] * self.cell_signs[cell_index][free]
        return out
