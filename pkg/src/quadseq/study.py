"""Convergence studies over mesh refinements, with CSV/Markdown/JSON reports.

A study solves (or interpolates) one configuration over a list of mesh
resolutions, records the requested broken-norm errors, and derives two
convergence orders per norm: the last-pair log2 ratio and a least-squares
fit over the final three pairs. Written artifacts are pure functions of the
configuration; wall-clock time is kept out of the serialized files so that
repeated runs are byte-identical.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import ElementCache, assemble_brinkman, assemble_fourth_order, solve
from .cases import brinkman_sin_stream, scalar_sin_squared
from .mesh import DEFAULT_DELTA, make_mesh
from .norms import (
    ScalarInterpolantField,
    ScalarSolutionField,
    VectorInterpolantField,
    VectorSolutionField,
    brinkman_error_norms,
    scalar_error_norms,
)

__all__ = [
    "StudyReport",
    "run_scalar_study",
    "run_brinkman_study",
    "run_scalar_interpolation_study",
    "run_vector_interpolation_study",
    "pairwise_orders",
    "fit_order",
]


def pairwise_orders(n_list, errors):
    """log(e_prev/e_next) / log(n_next/n_prev) for consecutive resolutions."""
    out = [None]
    for k in range(1, len(errors)):
        ratio = errors[k - 1] / errors[k] if errors[k] > 0 else np.nan
        out.append(float(np.log(ratio) / np.log(n_list[k] / n_list[k - 1])))
    return out

def fit_order(n_list, errors, pairs: int = 3):
    """Least-squares slope of log e against log(1/n) over the last `pairs` pairs."""
    m = min(pairs + 1, len(errors))
    if m < 2:
        return None
    ns = np.log(1.0 / np.asarray(n_list[-m:], dtype=float))
    es = np.log(np.asarray(errors[-m:], dtype=float))
    slope = np.polyfit(ns, es, 1)[0]
    return float(slope)


@dataclass
class StudyReport:
    """Errors and derived orders of one convergence study."""

    problem: str
    params: dict
    family: str
    delta: float
    seed: int
    n_list: list
    quad_order: int
    error_quad_order: int
    norms: list
    errors: dict = field(default_factory=dict)   # norm -> list of floats
    runtime_s: float = 0.0
    notes: list = field(default_factory=list)

    def orders(self, norm: str):
        return pairwise_orders(self.n_list, self.errors[norm])

    def order_last(self, norm: str):
        o = self.orders(norm)
        return o[-1] if len(o) > 1 else None

    def order_fit(self, norm: str):
        return fit_order(self.n_list, self.errors[norm])

    # -- serialization -------------------------------------------------------

    def to_csv(self) -> str:
        primary = self.norms[0]
        header = ["n"] + list(self.norms) + ["order_last", "order_fit"]
        for norm in self.norms[1:]:
            header += [f"order_last_{norm}", f"order_fit_{norm}"]
        lines = [",".join(header)]
        for k, n in enumerate(self.n_list):
            row = [str(n)]
            row += [f"{self.errors[nm][k]:.6e}" for nm in self.norms]
            for nm in [primary] + list(self.norms[1:]):
                sub_n = self.n_list[: k + 1]
                sub_e = self.errors[nm][: k + 1]
                o = pairwise_orders(sub_n, sub_e)[-1] if k > 0 else None
                fo = fit_order(sub_n, sub_e) if k > 0 else None
                row.append("" if o is None else f"{o:.4f}")
                row.append("" if fo is None else f"{fo:.4f}")
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def to_markdown(self) -> str:
        cols = [""] + [f"n={n}" for n in self.n_list] + ["order", "order(fit)"]
        lines = [
            "| " + " | ".join(cols) + " |",
            "|" + "---|" * len(cols),
        ]
        for nm in self.norms:
            cells = [nm] + [f"{e:.3e}" for e in self.errors[nm]]
            ol, of = self.order_last(nm), self.order_fit(nm)
            cells.append("" if ol is None else f"{ol:.2f}")
            cells.append("" if of is None else f"{of:.2f}")
            lines.append("| " + " | ".join(cells) + " |")
        title = f"{self.problem} {self.params} on {self.family} meshes"
        if self.family != "rectangular":
            title += f" (delta={self.delta}, seed={self.seed})"
        return f"**{title}**\n\n" + "\n".join(lines) + "\n"

    def to_json(self, include_runtime: bool = False) -> str:
        doc = {
            "problem": self.problem,
            "params": self.params,
            "family": self.family,
            "delta": self.delta,
            "seed": self.seed,
            "n_list": list(self.n_list),
            "quad_order": self.quad_order,
            "error_quad_order": self.error_quad_order,
            "norms": list(self.norms),
            "errors": self.errors,
            "orders": {nm: self.orders(nm) for nm in self.norms},
            "order_last": {nm: self.order_last(nm) for nm in self.norms},
            "order_fit": {nm: self.order_fit(nm) for nm in self.norms},
            "notes": self.notes,
        }
        if include_runtime:
            doc["runtime_s"] = self.runtime_s
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _meshes(family, n_list, delta, seed):
    return [make_mesh(n, family, delta=delta, seed=seed) for n in n_list]


def run_scalar_study(eps: float = 1.0, *, biharmonic: bool = False,
                     family: str = "rectangular", n_list=(4, 8, 16, 32, 64),
                     delta: float | None = None, seed: int = 0,
                     quad_order: int = 4, error_quad_order: int | None = None,
                     case=None) -> StudyReport:
    """Solve the fourth-order problem over refinements; energy/H1/H2 errors.

    The energy error weights the broken H2 part by eps; for the pure
    fourth-order mode (biharmonic=True) the weight is 1.
    """
    case = case or scalar_sin_squared()
    eq = error_quad_order or quad_order + 2
    t0 = time.perf_counter()
    cache = ElementCache()
    f = case.source_biharmonic() if biharmonic else case.source(eps)

    errors = {nm: [] for nm in ("energy", "h1", "h2")}
    n_list = list(n_list)
    for mesh in _meshes(family, n_list, delta, seed):
        system = assemble_fourth_order(
            mesh, eps, f, quad_order=quad_order, cache=cache, biharmonic=biharmonic
        )
        x = solve(system)
        fld = ScalarSolutionField(mesh, system.dofmap, x)
        norms = scalar_error_norms(mesh, fld, case, eps=eps,
                                   quad_order=eq, cache=cache)
        if biharmonic:
            # the natural energy of the pure fourth-order operator
            norms["energy"] = norms["h2"]
        for nm in errors:
            errors[nm].append(float(norms[nm]))

    params = {"mode": "biharmonic"} if biharmonic else {"eps": eps}
    report = StudyReport(
        problem="scalar", params=params, family=family,
        delta=_effective_delta(family, delta), seed=seed, n_list=n_list,
        quad_order=quad_order, error_quad_order=eq,
        norms=["energy", "h1", "h2"], errors=errors,
        runtime_s=time.perf_counter() - t0,
    )
    return report


def run_brinkman_study(nu: float = 1.0, alpha: float = 1.0, *,
                       family: str = "rectangular", n_list=(4, 8, 16, 32, 64),
                       delta: float | None = None, seed: int = 0,
                       quad_order: int = 4, error_quad_order: int | None = None,
                       case=None) -> StudyReport:
    """Solve the flow problem over refinements; a_h velocity and L2 pressure errors."""
    case = case or brinkman_sin_stream()
    eq = error_quad_order or quad_order + 2
    t0 = time.perf_counter()
    cache = ElementCache()
    f = case.source(nu, alpha)
    g = None if case.g_is_zero else case.divergence

    errors = {nm: [] for nm in ("velocity_ah", "pressure_l2", "velocity_l2", "velocity_h1")}
    n_list = list(n_list)
    for mesh in _meshes(family, n_list, delta, seed):
        system = assemble_brinkman(
            mesh, nu, alpha, f, g=g, quad_order=quad_order, cache=cache
        )
        x = solve(system)
        u, p, _ = system.split(x)
        fld = VectorSolutionField(mesh, system.dofmap, u)
        norms = brinkman_error_norms(mesh, fld, case, nu, alpha,
                                     pressure_values=p, quad_order=eq, cache=cache)
        for nm in errors:
            errors[nm].append(float(norms[nm]))

    report = StudyReport(
        problem="brinkman", params={"nu": nu, "alpha": alpha}, family=family,
        delta=_effective_delta(family, delta), seed=seed, n_list=n_list,
        quad_order=quad_order, error_quad_order=eq,
        norms=["velocity_ah", "pressure_l2", "velocity_l2", "velocity_h1"],
        errors=errors, runtime_s=time.perf_counter() - t0,
    )
    return report


def run_scalar_interpolation_study(*, family: str = "rectangular",
                                   n_list=(4, 8, 16, 32, 64),
                                   delta: float | None = None, seed: int = 0,
                                   error_quad_order: int = 6, case=None) -> StudyReport:
    """Broken H1/H2 errors of the nodal interpolant of the scalar solution."""
    case = case or scalar_sin_squared()
    t0 = time.perf_counter()
    cache = ElementCache()
    errors = {"h1": [], "h2": []}
    n_list = list(n_list)
    for mesh in _meshes(family, n_list, delta, seed):
        fld = ScalarInterpolantField(mesh, case)
        norms = scalar_error_norms(mesh, fld, case, eps=0.0,
                                   quad_order=error_quad_order, cache=cache)
        errors["h1"].append(float(norms["h1"]))
        errors["h2"].append(float(norms["h2"]))
    return StudyReport(
        problem="scalar-interpolation", params={}, family=family,
        delta=_effective_delta(family, delta), seed=seed, n_list=n_list,
        quad_order=0, error_quad_order=error_quad_order,
        norms=["h2", "h1"], errors=errors, runtime_s=time.perf_counter() - t0,
    )


def run_vector_interpolation_study(*, family: str = "rectangular",
                                   n_list=(4, 8, 16, 32, 64),
                                   delta: float | None = None, seed: int = 0,
                                   error_quad_order: int = 6, case=None) -> StudyReport:
    """L2 and broken H1 errors of the nodal interpolant of the flow velocity."""
    case = case or brinkman_sin_stream()
    t0 = time.perf_counter()
    cache = ElementCache()
    errors = {"velocity_l2": [], "velocity_h1": []}
    n_list = list(n_list)
    for mesh in _meshes(family, n_list, delta, seed):
        fld = VectorInterpolantField(mesh, case)
        norms = brinkman_error_norms(mesh, fld, case, nu=1.0, alpha=1.0,
                                     quad_order=error_quad_order, cache=cache)
        errors["velocity_l2"].append(float(norms["velocity_l2"]))
        errors["velocity_h1"].append(float(norms["velocity_h1"]))
    return StudyReport(
        problem="vector-interpolation", params={}, family=family,
        delta=_effective_delta(family, delta), seed=seed, n_list=n_list,
        quad_order=0, error_quad_order=error_quad_order,
        norms=["velocity_h1", "velocity_l2"], errors=errors,
        runtime_s=time.perf_counter() - t0,
    )


def _effective_delta(family, delta):
    return DEFAULT_DELTA[family] if delta is None else delta
