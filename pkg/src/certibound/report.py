"""Run reports: delimited output plus rendered figures.

A run report is a flat JSON dict carrying exactly the quantities the
certification run plots: the numeric bound and its certificate error,
the rounded bound, per-block spectral minima, the bound loss delta, and
stage timings.  ``write_csv`` flattens reports to one row each;
``render_figures`` draws certificate error vs bound loss and Gram size
vs bound loss to PNG files next to the CSV.
"""

from __future__ import annotations

import csv
import json
from fractions import Fraction

CSV_COLUMNS = [
    "problem",
    "order",
    "sparse",
    "path",
    "s_total",
    "block_sizes",
    "lambda_d",
    "certificate_error",
    "lambda_tilde",
    "delta",
    "lambda_rat",
    "mu_min",
    "scaled_bound",
    "t_relax",
    "t_solve",
    "t_rationalize",
    "t_certify",
    "t_total",
]


def make_run_report(
    problem,
    order: int,
    sparse: bool,
    numeric_bound: float,
    certificate_error: float,
    bound,
    cert,
    timings: dict,
    solver_config: dict,
) -> dict:
    mu_values = [sb["mu_low"] for sb in cert.spectral_bounds]
    mu_min = min(mu_values) if mu_values else Fraction(0)
    report = {
        "format": "certibound-report/1",
        "problem": problem.name,
        "order": order,
        "sparse": sparse,
        "path": bound.path,
        "block_sizes": bound.block_sizes,
        "s_total": sum(bound.block_sizes),
        "lambda_d": numeric_bound,
        "certificate_error": certificate_error,
        "lambda_tilde": str(bound.lambda_tilde),
        "delta": str(bound.delta),
        "lambda_rat": str(bound.lambda_rat),
        "mu_low_per_block": [str(sb["mu_low"]) for sb in cert.spectral_bounds],
        "mu_min": str(mu_min),
        "timings": timings,
        "solver_config": solver_config,
    }
    scale = problem.metadata.get("bound_scale")
    if scale is not None:
        report["scaled_bound"] = str(Fraction(scale) * bound.lambda_rat)
        report["scaled_bound_float"] = float(Fraction(scale) * bound.lambda_rat)
    return report


def load_report(path) -> dict:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "certibound-report/1":
        from .errors import ParseError

        raise ParseError(f"{path}: not a certibound run report")
    return doc


def write_csv(path, reports: list):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, extrasaction="ignore")
        writer.writeheader()
        for rep in reports:
            timings = rep.get("timings", {})
            row = dict(rep)
            row["block_sizes"] = " ".join(str(s) for s in rep.get("block_sizes", []))
            for stage in ("relax", "solve", "rationalize", "certify", "total"):
                row[f"t_{stage}"] = timings.get(stage, "")
            writer.writerow(row)


def render_figures(outdir, reports: list) -> list:
    """Certificate error vs bound loss, and Gram size vs bound loss."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    import os

    paths = []
    errors = [float(r["certificate_error"]) for r in reports]
    deltas = [float(Fraction(r["delta"])) for r in reports]
    sizes = [r["s_total"] for r in reports]
    labels = [r["problem"] for r in reports]

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(errors, deltas)
    for x, y, lbl in zip(errors, deltas, labels):
        ax.annotate(lbl, (x, y), fontsize=7, alpha=0.7)
    if errors and min((e for e in errors if e > 0), default=0):
        ax.set_xscale("log")
    if deltas and any(d > 0 for d in deltas):
        ax.set_yscale("log")
    ax.set_xlabel("numerical certificate error")
    ax.set_ylabel("bound loss (lambda_rat - lambda_tilde)")
    ax.set_title("certificate error vs bound loss")
    fig.tight_layout()
    p1 = os.path.join(outdir, "fig_error_vs_loss.png")
    fig.savefig(p1, dpi=150)
    plt.close(fig)
    paths.append(p1)

    fig, ax = plt.subplots(figsize=(6, 4.5))
    ax.scatter(sizes, deltas)
    for x, y, lbl in zip(sizes, deltas, labels):
        ax.annotate(lbl, (x, y), fontsize=7, alpha=0.7)
    if deltas and any(d > 0 for d in deltas):
        ax.set_yscale("log")
    ax.set_xlabel("total Gram size")
    ax.set_ylabel("bound loss (lambda_rat - lambda_tilde)")
    ax.set_title("Gram size vs bound loss")
    fig.tight_layout()
    p2 = os.path.join(outdir, "fig_size_vs_loss.png")
    fig.savefig(p2, dpi=150)
    plt.close(fig)
    paths.append(p2)
    return paths
