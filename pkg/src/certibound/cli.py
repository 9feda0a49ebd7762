"""Batch command-line front end: relax, solve, certify, verify, report.

Every stage reads and writes files; there is no hidden state between
subcommands.  Exit codes: 0 success, 2 validation or file errors,
3 solver failure (the partial iterate is still saved), 4 unsupported
constraint family (no bound emitted), 5 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from .certfile import MODE_DENSE, MODE_SPARSE, load_certificate, save_certificate
from .certify import CertifyOptions, certify_precertificate
from .errors import (
    CertiboundError,
    NumericalFailure,
    ParseError,
    UnsupportedConstraintFamily,
)
from .problems import load_problem, problem_from_json, problem_to_json
from .rationalize import RoundingConfig, rationalize_solution
from .relaxation import (
    AMALGAMATE,
    MIN_FILL,
    assemble_sdp,
    build_structures,
    min_relaxation_order,
    sdp_from_json,
    sdp_to_json,
)
from .report import load_report, make_run_report, render_figures, write_csv
from .scalars import parse_fraction
from .sdpsolve import (
    FAILED,
    SolverConfig,
    certificate_error,
    import_solution,
    solution_from_json,
    solution_to_json,
    solve,
)
from .verifier import verify_certificate

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3
EXIT_NO_FAMILY = 4
EXIT_INVALID = 5


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _emit(args, doc, text):
    if args.json:
        print(json.dumps(doc, sort_keys=True))
    else:
        print(text)


def _load_sdp_file(path):
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "certibound-sdp/1":
        raise ParseError(f"{path}: not a certibound SDP file")
    P = problem_from_json(doc["problem_spec"])
    return doc, P, sdp_from_json(doc, P)


def cmd_relax(args) -> int:
    P = load_problem(args.problem)
    d = args.order if args.order is not None else min_relaxation_order(P)
    strategy = MIN_FILL if args.chordal == "minfill" else AMALGAMATE
    t0 = time.perf_counter()
    structures, decomposition = build_structures(
        P, d, sparse=args.sparse, strategy=strategy
    )
    S = assemble_sdp(structures, P, d)
    elapsed = time.perf_counter() - t0
    doc = sdp_to_json(S, P)
    doc["problem_spec"] = problem_to_json(P)
    doc["strategy"] = strategy
    _write_json(args.output, doc)
    summary = {
        "problem": P.name,
        "order": d,
        "sparse": args.sparse,
        "blocks": [[label, dim] for (label, dim, _) in S.blocks],
        "affine_constraints": S.num_affine_constraints,
        "cliques": [list(c) for c in decomposition.cliques] if decomposition else None,
        "output": args.output,
        "seconds": elapsed,
    }
    _emit(
        args,
        summary,
        f"{P.name}: order {d}, blocks {[dim for (_, dim, _) in S.blocks]}, "
        f"{S.num_affine_constraints} affine constraints -> {args.output}",
    )
    return EXIT_OK


def cmd_solve(args) -> int:
    doc, P, S = _load_sdp_file(args.sdp)
    cfg = SolverConfig(
        feas_tol=args.feas_tol, gap_tol=args.gap_tol, max_iter=args.max_iter
    )
    t0 = time.perf_counter()
    if args.import_file:
        sol = import_solution(args.import_file, S)
    else:
        sol = solve(S, cfg)
    elapsed = time.perf_counter() - t0
    err = certificate_error(S, sol)
    out = solution_to_json(sol, S)
    out["relaxation"] = {
        "order": S.d,
        "sparse": S.sparse,
        "strategy": doc.get("strategy", MIN_FILL),
    }
    out["certificate_error"] = err
    out["seconds"] = elapsed
    out["solver_config"] = {
        "feas_tol": cfg.feas_tol,
        "gap_tol": cfg.gap_tol,
        "max_iter": cfg.max_iter,
    }
    _write_json(args.output, out)
    summary = {
        "problem": P.name,
        "status": sol.status,
        "bound": sol.bound,
        "iterations": sol.iterations,
        "certificate_error": err,
        "output": args.output,
        "seconds": elapsed,
    }
    _emit(
        args,
        summary,
        f"{P.name}: {sol.status} after {sol.iterations} iterations, "
        f"bound {sol.bound:.12g}, D = {err:.3g} -> {args.output}",
    )
    return EXIT_SOLVER if sol.status == FAILED else EXIT_OK


def cmd_certify(args) -> int:
    P = load_problem(args.problem)
    with open(args.solution) as fh:
        sol_doc = json.load(fh)
    relax_info = sol_doc.get("relaxation")
    if relax_info is None:
        raise ParseError("solution file carries no relaxation settings")
    if sol_doc.get("problem") != P.name:
        raise ParseError(
            f"solution was produced for problem {sol_doc.get('problem')!r}, "
            f"not {P.name!r}"
        )
    d = relax_info["order"]
    timings = {}
    t0 = time.perf_counter()
    structures, _ = build_structures(
        P, d, sparse=relax_info["sparse"], strategy=relax_info.get("strategy", MIN_FILL)
    )
    S = assemble_sdp(structures, P, d)
    timings["relax"] = time.perf_counter() - t0
    sol = solution_from_json(sol_doc, S)
    err = certificate_error(S, sol)

    cfg = RoundingConfig(
        eta=parse_fraction(args.eta), max_denominator=args.denominator_bound
    )
    t0 = time.perf_counter()
    pre = rationalize_solution(P, structures, sol, cfg)
    timings["rationalize"] = time.perf_counter() - t0

    opts = CertifyOptions(
        gap=parse_fraction(args.gap) if args.gap else None,
        tighten=args.tighten,
        lift_mode=MODE_SPARSE if relax_info["sparse"] else MODE_DENSE,
        jobs=args.jobs,
    )
    t0 = time.perf_counter()
    bound, cert = certify_precertificate(P, pre, opts, cfg)
    timings["certify"] = time.perf_counter() - t0
    cert.order = d
    timings["solve"] = sol_doc.get("seconds", 0.0)
    timings["total"] = sum(v for v in timings.values())

    save_certificate(args.output, cert, P.varset)
    report = make_run_report(
        P,
        d,
        relax_info["sparse"],
        sol.bound,
        err,
        bound,
        cert,
        timings,
        sol_doc.get("solver_config", {}),
    )
    if args.report:
        _write_json(args.report, report)
    summary = {
        "problem": P.name,
        "path": bound.path,
        "lambda_tilde": str(bound.lambda_tilde),
        "lambda_rat": str(bound.lambda_rat),
        "lambda_rat_float": float(bound.lambda_rat),
        "delta": str(bound.delta),
        "certificate": args.output,
    }
    if "scaled_bound" in report:
        summary["scaled_bound"] = report["scaled_bound"]
        summary["scaled_bound_float"] = report["scaled_bound_float"]
    _emit(
        args,
        summary,
        f"{P.name}: {bound.path}, lambda_rat = {float(bound.lambda_rat):.12g} "
        f"(delta = {float(bound.delta):.3g}) -> {args.output}",
    )
    return EXIT_OK


def cmd_verify(args) -> int:
    P = load_problem(args.problem)
    cert = load_certificate(args.certificate, P.varset)
    rep = verify_certificate(P, cert)
    doc = {
        "problem": P.name,
        "valid": rep.valid,
        "identity_ok": rep.identity_ok,
        "psd_ok": rep.psd_ok,
        "constraint_family_ok": rep.constraint_family_ok,
        "failing_word": rep.failing_word,
        "failing_block": rep.failing_block,
        "detail": rep.detail,
        "elapsed": rep.elapsed,
    }
    verdict = "VALID" if rep.valid else "INVALID"
    extra = ""
    if not rep.identity_ok:
        extra = f" (identity fails at word {rep.failing_word})"
    elif not all(rep.psd_ok):
        extra = f" (block {rep.failing_block} is not PSD)"
    elif not rep.constraint_family_ok:
        extra = f" ({rep.detail})"
    _emit(args, doc, f"{P.name}: {verdict}{extra}")
    return EXIT_OK if rep.valid else EXIT_INVALID


def cmd_report(args) -> int:
    reports = [load_report(p) for p in args.reports]
    import os

    os.makedirs(args.outdir, exist_ok=True)
    csv_path = os.path.join(args.outdir, "runs.csv")
    write_csv(csv_path, reports)
    figures = render_figures(args.outdir, reports) if reports else []
    doc = {"csv": csv_path, "figures": figures, "runs": len(reports)}
    _emit(
        args,
        doc,
        f"wrote {csv_path} ({len(reports)} rows)"
        + (f" and {len(figures)} figures" if figures else ""),
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="certibound",
        description="Exact rational certification of SOHS/NPA semidefinite bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("relax", help="build relaxation structures and SDP data")
    p.add_argument("problem")
    p.add_argument("--order", type=int, default=None)
    p.add_argument("--sparse", action="store_true")
    p.add_argument("--chordal", choices=["minfill", "dense"], default="minfill")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_relax)

    p = sub.add_parser("solve", help="solve SDP data or import an external solution")
    p.add_argument("sdp")
    p.add_argument("--import", dest="import_file", default=None)
    p.add_argument("--feas-tol", type=float, default=1e-9)
    p.add_argument("--gap-tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=200)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("certify", help="round, project, lift/tighten, emit certificate")
    p.add_argument("problem")
    p.add_argument("solution")
    p.add_argument("--eta", default="1/1000000000000")
    p.add_argument("--denominator-bound", type=int, default=10**16)
    p.add_argument("--gap", default=None, help="spectral bisection width (rational)")
    p.add_argument("--tighten", action="store_true")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--report", default=None)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("verify", help="independently verify a certificate")
    p.add_argument("certificate")
    p.add_argument("problem")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="aggregate run reports to CSV and figures")
    p.add_argument("outdir")
    p.add_argument("reports", nargs="*")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UnsupportedConstraintFamily as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_FAMILY
    except NumericalFailure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (CertiboundError, OSError, json.JSONDecodeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
