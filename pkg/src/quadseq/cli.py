"""Command-line interface: convergence studies, verifications, mesh export.

Every command is a pure function of its flags (plus seeds); written
artifacts contain no timestamps or timing, so repeated runs are
byte-identical. Exit codes: 0 success, 1 numerical failure or failed
verification, 2 usage errors.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from .assembly import SolverError
from .cases import scalar_sin_squared
from .elements import ElementConditioningError
from .mesh import MeshGenerationError, make_mesh
from .sequence import verify_exact_sequence
from .study import run_brinkman_study, run_scalar_study
from .verify import element_certificate

FAMILY_ALIASES = {
    "rect": "rectangular", "rectangular": "rectangular",
    "trap": "trapezoidal", "trapezoidal": "trapezoidal",
    "random": "random",
}
FORMATS = ("csv", "md", "json")


def _parse_n_list(text: str):
    try:
        ns = [int(t) for t in text.split(",") if t]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad n list {text!r}")
    if not ns or any(n < 2 for n in ns):
        raise argparse.ArgumentTypeError("every n must be an integer >= 2")
    return ns


def _parse_formats(text: str):
    fmts = [t for t in text.split(",") if t]
    for f in fmts:
        if f not in FORMATS:
            raise argparse.ArgumentTypeError(f"unknown format {f!r}")
    return fmts


def _family(text: str) -> str:
    if text not in FAMILY_ALIASES:
        raise argparse.ArgumentTypeError(
            f"unknown mesh family {text!r}; use rect, trap, or random"
        )
    return FAMILY_ALIASES[text]


def _add_mesh_flags(p: argparse.ArgumentParser):
    p.add_argument("--mesh", type=_family, default="rectangular",
                   help="mesh family: rect, trap, or random")
    p.add_argument("--delta", type=float, default=None,
                   help="displacement amplitude as a fraction of the grid "
                        "spacing (default: family-specific)")
    p.add_argument("--seed", type=int, default=0, help="random-family seed")


def _add_study_flags(p: argparse.ArgumentParser):
    _add_mesh_flags(p)
    p.add_argument("--n", type=_parse_n_list, default=[4, 8, 16, 32, 64],
                   help="comma-separated mesh resolutions")
    p.add_argument("--quad-order", type=int, default=4,
                   help="per-axis Gauss order for assembly (default 4, the 16-node rule)")
    p.add_argument("--error-quad-order", type=int, default=None,
                   help="per-axis Gauss order for error integration (default quad order + 2)")
    p.add_argument("--format", type=_parse_formats, default=list(FORMATS),
                   help="comma-separated artifact formats for --out (csv,md,json)")
    p.add_argument("--out", type=str, default=None,
                   help="output path prefix; writes PREFIX.csv/.md/.json")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quadseq",
        description="Nodal nonconforming quadrilateral elements: convergence "
                    "studies, element/sequence verification, mesh export.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    study = sub.add_parser("study", help="run a convergence study")
    study_sub = study.add_subparsers(dest="problem", required=True)

    sc = study_sub.add_parser("scalar", help="fourth-order singular perturbation problem")
    sc.add_argument("--eps", type=float, default=1.0,
                    help="perturbation parameter (0 gives the second-order limit)")
    sc.add_argument("--biharmonic", action="store_true",
                    help="drop the second-order term (pure fourth-order operator)")
    sc.add_argument("--frequency", type=int, default=1,
                    help="frequency index of the manufactured solution")
    _add_study_flags(sc)

    br = study_sub.add_parser("brinkman", help="velocity/pressure flow problem")
    br.add_argument("--nu", type=float, default=1.0, help="viscosity coefficient")
    br.add_argument("--alpha", type=float, default=1.0, help="zeroth-order coefficient")
    _add_study_flags(br)

    verify = sub.add_parser("verify", help="run verification batteries")
    verify_sub = verify.add_subparsers(dest="target", required=True)

    ve = verify_sub.add_parser("element", help="per-cell element identities")
    ve.add_argument("--samples", type=int, default=1000)
    ve.add_argument("--seed", type=int, default=1)
    ve.add_argument("--family", type=str, default="sweep",
                    help="sweep, rect, trap, or random")
    ve.add_argument("--format", type=_parse_formats, default=list(FORMATS))
    ve.add_argument("--out", type=str, default=None)

    vs = verify_sub.add_parser("sequence", help="global exact-sequence ranks")
    _add_mesh_flags(vs)
    vs.add_argument("--n", type=int, default=2)
    vs.add_argument("--out", type=str, default=None)

    mesh = sub.add_parser("mesh", help="export a mesh as JSON")
    _add_mesh_flags(mesh)
    mesh.add_argument("--n", type=int, default=2)
    mesh.add_argument("--out", type=str, required=True)
    mesh.add_argument("--roundtrip-check", action="store_true",
                      help="re-read the file and verify the content hash")

    return parser


def _write_report(report, fmts, prefix):
    if prefix is None:
        return
    for fmt in fmts:
        path = f"{prefix}.{fmt}"
        if fmt == "csv":
            payload = report.to_csv()
        elif fmt == "md":
            payload = report.to_markdown()
        else:
            payload = report.to_json()
        with open(path, "w") as fh:
            fh.write(payload)


def _cmd_study(args) -> int:
    if args.problem == "scalar":
        if args.eps < 0:
            print("error: --eps must be non-negative", file=sys.stderr)
            return 2
        case = scalar_sin_squared(frequency=args.frequency)
        report = run_scalar_study(
            eps=args.eps, biharmonic=args.biharmonic, family=args.mesh,
            n_list=args.n, delta=args.delta, seed=args.seed,
            quad_order=args.quad_order, error_quad_order=args.error_quad_order,
            case=case,
        )
    else:
        if args.nu < 0 or args.alpha < 0 or (args.nu == 0 and args.alpha == 0):
            print("error: need nu, alpha >= 0 and not both zero", file=sys.stderr)
            return 2
        report = run_brinkman_study(
            nu=args.nu, alpha=args.alpha, family=args.mesh, n_list=args.n,
            delta=args.delta, seed=args.seed, quad_order=args.quad_order,
            error_quad_order=args.error_quad_order,
        )
    print(report.to_markdown())
    print(f"(runtime {report.runtime_s:.2f}s)")
    _write_report(report, args.format, args.out)
    return 0


def _cmd_verify(args) -> int:
    if args.target == "element":
        family = args.family if args.family == "sweep" else _family(args.family)
        cert = element_certificate(samples=args.samples, seed=args.seed, family=family)
        print(cert.to_markdown())
        if args.out:
            for fmt in args.format:
                if fmt == "json":
                    with open(f"{args.out}.json", "w") as fh:
                        fh.write(cert.to_json())
                elif fmt == "md":
                    with open(f"{args.out}.md", "w") as fh:
                        fh.write(cert.to_markdown())
        return 0 if cert.passed else 1

    mesh = make_mesh(args.n, args.mesh, delta=args.delta, seed=args.seed)
    report = verify_exact_sequence(mesh)
    d = report.dims
    print(f"dims: scalar {d['scalar']}, vector {d['vector']}, pressure {d['pressure']}")
    print(f"rank(div) = {report.rank_div}, nullity = {report.nullity_div}, "
          f"sv gap = {report.sv_gap:.2e}")
    for name, ok in report.checks.items():
        print(f"  {name}: {'pass' if ok else 'FAIL'}")
    if args.out:
        import json as _json
        with open(f"{args.out}.json", "w") as fh:
            _json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0 if report.passed else 1


def _cmd_mesh(args) -> int:
    mesh = make_mesh(args.n, args.mesh, delta=args.delta, seed=args.seed)
    mesh.save(args.out)
    print(f"wrote {args.out}: {mesh.n_vertices} vertices, {mesh.n_edges} edges, "
          f"{mesh.n_cells} cells (euler {mesh.euler_characteristic()})")
    if args.roundtrip_check:
        from .mesh import Mesh
        again = Mesh.load(args.out)
        if again.content_hash() != mesh.content_hash():
            print("error: round-trip hash mismatch", file=sys.stderr)
            return 1
        print(f"round-trip hash ok: {mesh.content_hash()[:16]}...")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "study":
            return _cmd_study(args)
        if args.command == "verify":
            return _cmd_verify(args)
        return _cmd_mesh(args)
    except (SolverError, MeshGenerationError, ElementConditioningError,
            np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:  # invalid flag combinations surface as usage errors
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
