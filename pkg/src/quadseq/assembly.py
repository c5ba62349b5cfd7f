"""Sparse system assembly and direct solves for both model problems.

Local element data is cached by cell *shape* (the vertex positions in the
cell-local frame, which are translation- and scale-invariant): structured
mesh families reuse a handful of shapes across all cells and refinement
levels, so only the scatter and the load quadrature are per-cell work. The
physical local matrices follow from the cached unit-shape integrals by exact
powers of the cell diameter together with a diagonal DoF rescaling (gradient
DoFs scale with h in the scalar element, edge-integral DoFs with 1/h in the
vector element).
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dofmap import ScalarDofMap, VectorDofMap
from .elements import ScalarElement, VectorElement, build_scalar_element, build_vector_element
from .geometry import QuadGeometry
from .mesh import Mesh
from .quadrature import QuadratureRule

__all__ = [
    "ElementCache",
    "SparseSystem",
    "SolverError",
    "assemble_fourth_order",
    "assemble_brinkman",
    "solve",
]

DEFAULT_QUAD_ORDER = 4  # the 16-node tensor rule


class SolverError(RuntimeError):
    """Direct factorization failed or left a large residual."""


def scalar_dof_scaling(h: float) -> np.ndarray:
    """Unit-shape to physical basis rescaling for the scalar element."""
    return np.concatenate([np.ones(4), np.full(8, h)])


def vector_dof_scaling(h: float) -> np.ndarray:
    """Unit-shape to physical basis rescaling for the vector element."""
    return np.concatenate([np.full(4, 1.0 / h), np.ones(8)])


class _Tabulation:
    """Unit-shape quadrature data: local points, weights, basis arrays."""

    __slots__ = ("points", "weights", "val", "grad", "hess")

    def __init__(self, points, weights, val, grad, hess):
        self.points = points      # (nq, 2) in the cell-local frame
        self.weights = weights    # (nq,)   integrate over the unit shape
        self.val = val            # (nq, nb) or (nq, nb, 2)
        self.grad = grad
        self.hess = hess          # (nq, nb, 2, 2) scalar only


class _ScalarShape:
    def __init__(self, unit_geom: QuadGeometry):
        self.geom = unit_geom
        self.element: ScalarElement = build_scalar_element(unit_geom)
        self._tabs: dict[int, _Tabulation] = {}
        self._mats: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def tabulation(self, g: int) -> _Tabulation:
        tab = self._tabs.get(g)
        if tab is None:
            pts, wts = QuadratureRule(g).cell_points(self.geom)
            val, grad, hess = self.element.tabulate(pts)
            tab = _Tabulation(pts, wts, val, grad, hess)
            self._tabs[g] = tab
        return tab

    def matrices(self, g: int):
        """Unit-shape Hessian and gradient Gram matrices."""
        mats = self._mats.get(g)
        if mats is None:
            tab = self.tabulation(g)
            A = np.einsum("q,qicd,qjcd->ij", tab.weights, tab.hess, tab.hess)
            B = np.einsum("q,qic,qjc->ij", tab.weights, tab.grad, tab.grad)
            mats = (A, B)
            self._mats[g] = mats
        return mats


class _VectorShape:
    def __init__(self, unit_geom: QuadGeometry):
        self.geom = unit_geom
        self.element: VectorElement = build_vector_element(unit_geom)
        self._tabs: dict[int, _Tabulation] = {}
        self._mats: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    def tabulation(self, g: int) -> _Tabulation:
        tab = self._tabs.get(g)
        if tab is None:
            pts, wts = QuadratureRule(g).cell_points(self.geom)
            val, grad = self.element.tabulate(pts)
            tab = _Tabulation(pts, wts, val, grad, None)
            self._tabs[g] = tab
        return tab

    def matrices(self, g: int):
        """Unit-shape broken-gradient and mass Gram matrices."""
        mats = self._mats.get(g)
        if mats is None:
            tab = self.tabulation(g)
            G = np.einsum("q,qicd,qjcd->ij", tab.weights, tab.grad, tab.grad)
            M = np.einsum("q,qic,qjc->ij", tab.weights, tab.val, tab.val)
            mats = (G, M)
            self._mats[g] = mats
        return mats


class ElementCache:
    """Shape-keyed store of unit elements, Gram matrices, and tabulations."""

    def __init__(self):
        self._scalar: dict[bytes, _ScalarShape] = {}
        self._vector: dict[bytes, _VectorShape] = {}
        self._unit_geom: dict[bytes, QuadGeometry] = {}

    def _unit(self, key: bytes, geom: QuadGeometry) -> QuadGeometry:
        ug = self._unit_geom.get(key)
        if ug is None:
            ug = QuadGeometry(geom.local_vertices)
            self._unit_geom[key] = ug
        return ug

    def scalar(self, geom: QuadGeometry) -> _ScalarShape:
        key = geom.shape_key()
        data = self._scalar.get(key)
        if data is None:
            data = _ScalarShape(self._unit(key, geom))
            self._scalar[key] = data
        return data

    def vector(self, geom: QuadGeometry) -> _VectorShape:
        key = geom.shape_key()
        data = self._vector.get(key)
        if data is None:
            data = _VectorShape(self._unit(key, geom))
            self._vector[key] = data
        return data


class SparseSystem:
    """Assembled sparse linear system with DoF metadata."""

    def __init__(self, matrix, rhs, kind, dofmap, n_velocity=None, n_pressure=None):
        self.matrix = matrix.tocsr()
        self.rhs = rhs
        self.kind = kind            # "scalar" or "brinkman"
        self.dofmap = dofmap
        self.n_velocity = n_velocity
        self.n_pressure = n_pressure

    @property
    def ndof(self) -> int:
        return self.matrix.shape[0]

    def symmetry_defect(self) -> float:
        d = self.matrix - self.matrix.T
        return 0.0 if d.nnz == 0 else float(np.abs(d.data).max())

    def split(self, x: np.ndarray):
        """Brinkman solution -> (velocity coefficients, cell pressures, multiplier)."""
        if self.kind != "brinkman":
            raise ValueError("split applies to Brinkman systems only")
        nu_, np_ = self.n_velocity, self.n_pressure
        return x[:nu_], x[nu_:nu_ + np_], float(x[-1])

    def write_matrix_market(self, path):
        from scipy.io import mmwrite
        mmwrite(str(path), self.matrix.tocoo())


class _TripletBuffer:
    def __init__(self, estimate: int):
        self.rows = np.empty(estimate, dtype=np.int64)
        self.cols = np.empty(estimate, dtype=np.int64)
        self.vals = np.empty(estimate, dtype=float)
        self.k = 0

    def add(self, dofs_i, dofs_j, block):
        mask = (dofs_i[:, None] >= 0) & (dofs_j[None, :] >= 0)
        n = int(mask.sum())
        if n == 0:
            return
        ii, jj = np.nonzero(mask)
        sl = slice(self.k, self.k + n)
        self.rows[sl] = dofs_i[ii]
        self.cols[sl] = dofs_j[jj]
        self.vals[sl] = block[ii, jj]
        self.k += n

    def matrix(self, shape):
        return sp.coo_matrix(
            (self.vals[:self.k], (self.rows[:self.k], self.cols[:self.k])), shape=shape
        )


def assemble_fourth_order(mesh: Mesh, eps: float, f, quad_order: int = DEFAULT_QUAD_ORDER,
                          cache: ElementCache | None = None,
                          biharmonic: bool = False) -> SparseSystem:
    """Assemble eps^2 * (broken Hessian) + (broken gradient) with load f.

    eps = 0 gives the second-order limit; biharmonic=True drops the gradient
    term entirely (pure fourth-order operator). f is a vectorized callable
    of (x, y). Clamped boundary conditions are built into the DoF map.
    """
    if eps < 0:
        raise ValueError("eps must be non-negative")
    cache = cache or ElementCache()
    dm = ScalarDofMap(mesh)
    buf = _TripletBuffer(144 * mesh.n_cells)
    rhs = np.zeros(dm.ndof)

    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.scalar(geom)
        A_hat, B_hat = shape.matrices(quad_order)
        h = geom.h
        lam = scalar_dof_scaling(h)
        scale = np.outer(lam, lam)
        if biharmonic:
            K_loc = scale * A_hat / h**2
        else:
            K_loc = scale * (eps**2 * A_hat / h**2 + B_hat)

        dofs = dm.cell_dofs[ci]
        buf.add(dofs, dofs, K_loc)

        tab = shape.tabulation(quad_order)
        pts = geom.from_local(tab.points)
        fv = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
        F_loc = lam * (tab.val.T @ (tab.weights * fv)) * h**2
        free = dofs >= 0
        np.add.at(rhs, dofs[free], F_loc[free])

    K = buf.matrix((dm.ndof, dm.ndof))
    return SparseSystem(K, rhs, "scalar", dm)


def assemble_brinkman(mesh: Mesh, nu: float, alpha: float, f, g=None,
                      quad_order: int = DEFAULT_QUAD_ORDER,
                      cache: ElementCache | None = None) -> SparseSystem:
    """Assemble the velocity/pressure saddle system with a mean-zero multiplier.

    Block layout: [[A, -B^T, 0], [-B, 0, -c], [0, -c^T, 0]] acting on
    (velocity, cell pressures, multiplier), where c holds the cell areas; the
    bordering row enforces the zero pressure mean symmetrically. nu and
    alpha are non-negative and not both zero; f maps (x, y) to (..., 2) and
    g, if given, to (...,).
    """
    if nu < 0 or alpha < 0:
        raise ValueError("nu and alpha must be non-negative")
    if nu == 0 and alpha == 0:
        raise ValueError("nu and alpha cannot both vanish")
    cache = cache or ElementCache()
    dm = VectorDofMap(mesh)
    n_u, n_p = dm.ndof, mesh.n_cells
    ndof = n_u + n_p + 1

    buf = _TripletBuffer(196 * mesh.n_cells + 4 * n_p)
    rhs = np.zeros(ndof)

    for ci in range(mesh.n_cells):
        geom = mesh.geometry(ci)
        shape = cache.vector(geom)
        G_hat, M_hat = shape.matrices(quad_order)
        h = geom.h
        mu = vector_dof_scaling(h)
        signs = dm.cell_signs[ci]
        w = mu * signs
        A_loc = np.outer(w, w) * (nu * G_hat + alpha * h**2 * M_hat)

        dofs = dm.cell_dofs[ci]
        buf.add(dofs, dofs, A_loc)

        # Divergence coupling: each basis field has constant divergence.
        div_phys = w * shape.element.div_constants / h
        b_row = div_phys * geom.area
        p_dof = n_u + ci
        pd = np.array([p_dof])
        buf.add(pd, dofs, -b_row[None, :])
        buf.add(dofs, pd, -b_row[:, None])

        tab = shape.tabulation(quad_order)
        pts = geom.from_local(tab.points)
        fv = np.asarray(f(pts[:, 0], pts[:, 1]), dtype=float)
        F_loc = w * np.einsum("qjc,q,qc->j", tab.val, tab.weights, fv) * h**2
        free = dofs >= 0
        np.add.at(rhs, dofs[free], F_loc[free])

        if g is not None:
            gv = np.asarray(g(pts[:, 0], pts[:, 1]), dtype=float)
            rhs[p_dof] -= float(tab.weights @ gv) * h**2

        area_col = np.array([[geom.area]])
        mdof = np.array([ndof - 1])
        buf.add(pd, mdof, -area_col)
        buf.add(mdof, pd, -area_col)

    K = buf.matrix((ndof, ndof))
    return SparseSystem(K, rhs, "brinkman", dm, n_velocity=n_u, n_pressure=n_p)


def solve(system: SparseSystem, residual_tol: float = 1e-9) -> np.ndarray:
    """Direct sparse LU solve with a relative-residual guarantee."""
    K = system.matrix.tocsc()
    try:
        lu = spla.splu(K)
        x = lu.solve(system.rhs)
    except RuntimeError as exc:  # singular factorization
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverError("factorization produced non-finite entries")
    rnorm = np.linalg.norm(system.rhs)
    resid = np.linalg.norm(K @ x - system.rhs) / (rnorm if rnorm > 0 else 1.0)
    if resid > residual_tol:
        raise SolverError(f"solver residual {resid:.3e} exceeds {residual_tol:.1e}")
    return x
