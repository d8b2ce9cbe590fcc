"""Command-line interface.

Subcommands: project, solve, nearcorr, sos-check, polymin, theta, gen.
Every command prints one JSON report (stdout, or --out FILE) and exits with
0 on convergence, 2 on an iteration limit or numerical failure, 3 on
suspected infeasibility, 4 on input errors.  Reports are byte-identical
across runs for identical argv and seed, except for wall_time_ms.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, altschemes, io, polysos
from .cones import (
    BlockPoint,
    ConeSpec,
    FactorizationError,
    InputError,
    NumericalError,
)
from .dualproj import (
    ProjectionProblem,
    nearest_correlation,
    rescale_correlation,
    solve_fixed_metric,
    solve_quasi_newton,
    solve_ssnewton,
)
from .regsolver import (
    LinearConicProblem,
    RegParams,
    residuals,
    solve_regularized,
    solve_simple,
)
from .report import (
    CONVERGED,
    ITERATION_LIMIT,
    NUMERICAL_FAILURE,
    SUSPECTED_INFEASIBLE,
)

EXIT_CODES = {
    CONVERGED: 0,
    ITERATION_LIMIT: 2,
    NUMERICAL_FAILURE: 2,
    SUSPECTED_INFEASIBLE: 3,
}
EXIT_INPUT_ERROR = 4

_PROJ_METHODS = (
    "quasi_newton",
    "fixed_metric",
    "ssnewton",
    "dykstra",
    "admm",
    "alternating",
)


def main(argv=None) -> int:
    raise SystemExit(run_cli(argv))


def run_cli(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse already printed the message
        return EXIT_INPUT_ERROR if exc.code not in (0, None) else 0
    try:
        return args.handler(args)
    except (InputError, FactorizationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="conicproj",
        description="Conic projections and regularization solvers "
        "(SDPA sparse, DIMACS and polynomial front ends).",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--out", help="write the JSON report here instead of stdout")
        sp.add_argument("--seed", type=int, default=None, help="seed recorded in the report")
        sp.add_argument("-v", "--verbose", action="store_true")
        sp.add_argument(
            "--solution-out",
            help="write the solution (and multipliers) as JSON",
        )

    sp = sub.add_parser("project", help="project a point onto K intersect {Ax=b}")
    sp.add_argument("input", help="problem file (.dat-s or native .json)")
    sp.add_argument("--center", help="point to project (matrix file or JSON blocks); default 0")
    sp.add_argument("--method", choices=_PROJ_METHODS, default="quasi_newton")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument("--beta", type=float, default=1.0, help="ADM splitting parameter")
    common(sp)
    sp.set_defaults(handler=_cmd_project)

    sp = sub.add_parser("solve", help="solve min <c,x> s.t. Ax=b, x in K")
    _solver_flags(sp, tol=1e-7, max_outer=200000)
    sp.add_argument("input", help="problem file (.dat-s or native .json)")
    common(sp)
    sp.set_defaults(handler=_cmd_solve)

    sp = sub.add_parser("nearcorr", help="nearest correlation matrix")
    sp.add_argument("input", help="dense symmetric matrix file")
    sp.add_argument("--method", choices=_PROJ_METHODS, default="ssnewton")
    sp.add_argument("--tol", type=float, default=None, help="default 1e-7 * n")
    sp.add_argument("--max-iter", type=int, default=None)
    sp.add_argument(
        "--rescale",
        action="store_true",
        help="post-treat to an exactly unit diagonal (D^-1/2 X D^-1/2)",
    )
    common(sp)
    sp.set_defaults(handler=_cmd_nearcorr)

    sp = sub.add_parser("sos-check", help="is the polynomial a sum of squares?")
    sp.add_argument("input", help="polynomial file")
    sp.add_argument("--degree", type=int, required=True, help="Gram basis degree d")
    _solver_flags(sp, tol=1e-5, max_outer=10000)
    common(sp)
    sp.set_defaults(handler=_cmd_sos_check)

    sp = sub.add_parser("polymin", help="SOS lower bound for a polynomial minimum")
    sp.add_argument("input", help="polynomial file (even degree)")
    _solver_flags(sp, tol=1e-8, max_outer=200000)
    common(sp)
    sp.set_defaults(handler=_cmd_polymin)

    sp = sub.add_parser("theta", help="Lovasz theta number of a DIMACS graph")
    sp.add_argument("input", help="DIMACS .col edge file")
    _solver_flags(sp, tol=1e-7, max_outer=200000)
    common(sp)
    sp.set_defaults(handler=_cmd_theta)

    sp = sub.add_parser("gen", help="write random/named test instances")
    sp.add_argument("kind", choices=("sos", "polymin", "structured", "motzkin"))
    sp.add_argument("--out", required=True, help="output path (suffixed for --count > 1)")
    sp.add_argument("--num-vars", type=int, default=5)
    sp.add_argument("--degree", type=int, default=3, help="basis degree d")
    sp.add_argument("--rank", choices=("full", "one"), default="full")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--count", type=int, default=1)
    sp.add_argument("-v", "--verbose", action="store_true")
    sp.set_defaults(handler=_cmd_gen, solution_out=None)

    return p


def _solver_flags(sp, tol, max_outer):
    sp.add_argument("--solver", choices=("simple", "regularized"), default="simple")
    sp.add_argument(
        "--inner",
        choices=("fixed_metric", "quasi_newton", "ssnewton"),
        default="quasi_newton",
        help="inner engine for --solver regularized",
    )
    sp.add_argument("--tol", type=float, default=tol)
    sp.add_argument("--t0", type=float, default=1.0)
    sp.add_argument("--eps0", type=float, default=1e-4)
    sp.add_argument("--decay", type=float, default=3.0)
    sp.add_argument("--max-outer", type=int, default=max_outer)
    sp.add_argument("--max-inner", type=int, default=300)
    sp.add_argument("--adapt-t", action="store_true")


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def _emit(args, data: dict) -> None:
    if getattr(args, "verbose", False):
        print(
            "%s: %s after %s iterations (%.1f ms)"
            % (
                data.get("command"),
                data.get("status"),
                data.get("iterations"),
                data.get("wall_time_ms", 0.0),
            ),
            file=sys.stderr,
        )
    text = json.dumps(data, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _report(args, solver: str, problem_dims: dict, rep, objective, extra=None) -> dict:
    data = {
        "schema_version": 1,
        "tool": "conicproj",
        "version": __version__,
        "command": args.command,
        "solver": solver,
        "seed": args.seed if hasattr(args, "seed") else None,
        "problem": problem_dims,
        "status": rep.status,
        "objective": objective,
        "primal_residual": rep.primal_residual,
        "dual_residual": rep.dual_residual,
        "iterations": rep.iterations,
        "inner_iterations": rep.inner_iterations,
        "wall_time_ms": rep.wall_time * 1000.0,
    }
    if extra:
        data.update(extra)
    return data


def _dims(cone, m) -> dict:
    return {
        "psd_dims": list(cone.psd_dims),
        "soc_dims": list(cone.soc_dims),
        "nonneg": cone.nonneg,
        "m": m,
    }


def _load_conic_problem(path: str) -> LinearConicProblem:
    text = _read(path)
    if path.endswith(".json"):
        parts = io.parse_problem_json(text)
        obj = parts["objective"]
        if obj is None:
            obj = BlockPoint.zeros(parts["cone"])
        if parts["ineq"] is not None:
            raise InputError("solve expects equality constraints only")
        return LinearConicProblem(c=obj, a=parts["eq"], cone=parts["cone"])
    return io.parse_sdpa(text)


def _reg_params(args) -> RegParams:
    return RegParams(
        t0=args.t0,
        inner=args.inner if args.solver == "regularized" else "one_iteration",
        eps0=args.eps0,
        decay=args.decay,
        outer_tol=args.tol,
        max_outer=args.max_outer,
        max_inner=args.max_inner,
        adapt_t=args.adapt_t,
    )


def _run_conic(args, problem: LinearConicProblem):
    params = _reg_params(args)
    if args.solver == "simple":
        return solve_simple(problem, params)
    return solve_regularized(problem, params)


def _write_solution(args, payload: dict) -> None:
    if getattr(args, "solution_out", None):
        with open(args.solution_out, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)
            fh.write("\n")


# ---------------------------------------------------------------------------
# commands


def _cmd_project(args) -> int:
    text = _read(args.input)
    if args.input.endswith(".json"):
        parts = io.parse_problem_json(text)
        cone, eq, ineq = parts["cone"], parts["eq"], parts["ineq"]
        center = parts["center"]
    else:
        lp = io.parse_sdpa(text)
        cone, eq, ineq = lp.cone, lp.a, None
        if lp.c.norm() > 0:
            print(
                "note: SDPA objective ignored by `project`; supply --center",
                file=sys.stderr,
            )
        center = None
    if args.center:
        ctext = _read(args.center)
        if args.center.endswith(".json"):
            center = io.blockpoint_from_json(cone, json.loads(ctext))
        else:
            if len(cone.blocks) != 1 or cone.blocks[0][0] != "psd":
                raise InputError(
                    "matrix-file centers need a single PSD block; use JSON"
                )
            center = BlockPoint(cone, [io.read_matrix(ctext)])
    if center is None:
        center = BlockPoint.zeros(cone)

    problem = ProjectionProblem(c=center, eq=eq, cone=cone, ineq=ineq)
    tol = problem.default_tol() if args.tol is None else args.tol
    dual_engines = {
        "fixed_metric": solve_fixed_metric,
        "quasi_newton": solve_quasi_newton,
        "ssnewton": solve_ssnewton,
    }
    extra = {}
    y = None
    if args.method in dual_engines:
        kwargs = {"tol": tol}
        if args.max_iter is not None:
            kwargs["max_iter"] = args.max_iter
        x, d, rep = dual_engines[args.method](problem, **kwargs)
        extra["theta"] = rep.objective
        y = d
    else:
        two = altschemes.TwoSetProblem.from_projection(problem)
        kwargs = {"tol": tol}
        if args.max_iter is not None:
            kwargs["max_iter"] = args.max_iter
        if args.method == "dykstra":
            x, rep = altschemes.dykstra(two, **kwargs)
        elif args.method == "admm":
            x, rep = altschemes.admm_projection(two, beta=args.beta, **kwargs)
        else:
            x, rep = altschemes.alternating_projections(two, **kwargs)
    distance_sq = 0.5 * (x - center).dot(x - center)
    report = _report(
        args, args.method, _dims(cone, eq.m + (ineq.m if ineq else 0)), rep,
        objective=distance_sq, extra=extra,
    )
    sol = {"x": io.blockpoint_to_json(x)}
    if y is not None:
        sol["y"] = y.y.tolist()
        if y.z.size:
            sol["z"] = y.z.tolist()
    _write_solution(args, sol)
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_solve(args) -> int:
    problem = _load_conic_problem(args.input)
    trip, rep = _run_conic(args, problem)
    report = _report(
        args,
        args.solver,
        _dims(problem.cone, problem.m),
        rep,
        objective=rep.objective,
    )
    _write_solution(
        args,
        {
            "p": io.blockpoint_to_json(trip.p),
            "y": trip.y.tolist(),
            "u": io.blockpoint_to_json(trip.u),
        },
    )
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_nearcorr(args) -> int:
    c = io.read_matrix(_read(args.input))
    x, rep = nearest_correlation(
        c, method=args.method, tol=args.tol, max_iter=args.max_iter
    )
    if args.rescale:
        x = rescale_correlation(x)
    n = c.shape[0]
    distance_sq = 0.5 * float(np.sum((x - c) ** 2))
    report = _report(
        args,
        args.method,
        _dims(ConeSpec(psd_dims=(n,)), n),
        rep,
        objective=distance_sq,
        extra={"max_diag_error": float(np.max(np.abs(np.diag(x) - 1.0)))},
    )
    _write_solution(args, {"x": x.tolist()})
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_sos_check(args) -> int:
    poly = io.parse_polynomial(_read(args.input))
    problem = polysos.build_sos_feasibility(poly, args.degree)
    trip, rep = _run_conic(args, problem)
    dual_obj = float(problem.b @ trip.y)
    report = _report(
        args,
        args.solver,
        _dims(problem.cone, problem.m),
        rep,
        objective=rep.objective,
        extra={"dual_objective": dual_obj, "degree": args.degree},
    )
    _write_solution(
        args,
        {
            "p": io.blockpoint_to_json(trip.p),
            "y": trip.y.tolist(),
            "u": io.blockpoint_to_json(trip.u),
        },
    )
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_polymin(args) -> int:
    poly = io.parse_polynomial(_read(args.input))
    problem, offset = polysos.build_polymin(poly)
    trip, rep = _run_conic(args, problem)
    bound = offset - rep.objective
    gram = np.asarray(trip.p.blocks[0])
    lam_min = float(np.linalg.eigvalsh(gram)[0])
    report = _report(
        args,
        args.solver,
        _dims(problem.cone, problem.m),
        rep,
        objective=bound,
        extra={"offset": offset, "gram_min_eigenvalue": lam_min},
    )
    _write_solution(
        args,
        {
            "p": io.blockpoint_to_json(trip.p),
            "y": trip.y.tolist(),
            "u": io.blockpoint_to_json(trip.u),
        },
    )
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_theta(args) -> int:
    graph = io.parse_dimacs(_read(args.input))
    problem = polysos.build_theta(graph)
    trip, rep = _run_conic(args, problem)
    theta = -rep.objective  # stored as min <-J, X>
    report = _report(
        args,
        args.solver,
        _dims(problem.cone, problem.m),
        rep,
        objective=theta,
        extra={
            "theta": theta,
            "num_vertices": graph.num_vertices,
            "num_edges": graph.num_edges,
        },
    )
    _write_solution(
        args,
        {
            "p": io.blockpoint_to_json(trip.p),
            "y": trip.y.tolist(),
            "u": io.blockpoint_to_json(trip.u),
        },
    )
    _emit(args, report)
    return EXIT_CODES[rep.status]


def _cmd_gen(args) -> int:
    if args.kind in ("sos", "polymin") and args.seed is None:
        raise InputError("gen sos/polymin requires --seed")
    if args.count < 1:
        raise InputError("--count must be >= 1")

    def one(index: int) -> dict:
        # per-instance seeds derived by the documented split rule seed + i
        seed = None if args.seed is None else args.seed + index
        path = args.out
        if args.count > 1:
            root, ext = os.path.splitext(args.out)
            path = f"{root}-{index:03d}{ext}"
        if args.kind == "sos":
            problem, _ = polysos.random_sos_instance(
                args.num_vars, args.degree, rank=args.rank, seed=seed
            )
            payload = io.write_sdpa(
                problem,
                comment=f"random {args.rank}-rank SOS instance "
                f"N={args.num_vars} d={args.degree} seed={seed}",
            )
            info = {
                "path": path,
                "seed": seed,
                "n": problem.cone.psd_dims[0],
                "m": problem.m,
            }
        elif args.kind == "polymin":
            poly = polysos.random_polymin_instance(
                args.num_vars, args.degree, seed=seed
            )
            payload = io.write_polynomial(poly)
            info = {"path": path, "seed": seed, "terms": len(poly.terms)}
        elif args.kind == "structured":
            poly = polysos.structured_polymin_instance(args.num_vars)
            payload = io.write_polynomial(poly)
            info = {"path": path, "terms": len(poly.terms)}
        else:
            payload = io.write_polynomial(polysos.motzkin())
            info = {"path": path, "terms": 4}
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(payload)
        return info

    workers = int(os.environ.get("CONIC_PROJ_THREADS", "1") or "1")
    if args.count > 1 and workers > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            infos = list(pool.map(one, range(args.count)))
    else:
        infos = [one(i) for i in range(args.count)]
    text = json.dumps(
        {"command": "gen", "kind": args.kind, "instances": infos},
        sort_keys=True,
        indent=2,
    )
    sys.stdout.write(text + "\n")
    return 0


if __name__ == "__main__":  # pragma: no cover
    main()
