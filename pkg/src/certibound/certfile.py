"""Certificate data model and JSON serialization.

A certificate stores the exact pre-certificate (bound lambda_tilde and
projected rational Gram blocks satisfying the algebraic identity) plus
the applied corrections: per-block scalar shifts sigma_k (positive for
lifts, negative for unipotent tightening) and an optional rank-1
downdate tau on the constant-word coordinate.  The certified block is

    matrix + sigma_k * I - tau_k * e0 e0^T

and the certified bound is

    lambda_rat = lambda_tilde + sum_k sigma_k * weight_k - sum_k tau_k.

This file is the only certificate I/O path; the verifier consumes it
without importing any projection or lifting code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import Polynomial, VariableSet, format_polynomial, parse_polynomial
from .errors import ParseError
from .scalars import Scalar, format_fraction, parse_fraction

PATH_ALREADY_PSD = "already_psd"


@dataclass
class ConstantSOHSWitness:
    """eps * s = eps v*v + sum w r*r + sum w q* c q, expanded exactly.

    For unipotent variables the identity holds with no residual terms
    (every reduced word satisfies w*w = 1 modulo the ideal); the other
    families carry explicit residual and constraint terms with positive
    rational weights from the inductive construction.
    """

    family: str
    epsilon: Fraction
    d: int
    varset: "VariableSet"
    basis_words: list
    r_terms: list = field(default_factory=list)  # (weight, Polynomial)
    q_terms: list = field(default_factory=list)  # (weight, constraint, Polynomial)

    @property
    def size(self) -> int:
        return len(self.basis_words)

PATH_LIFTED = "lifted"
PATH_TIGHTENED_UNIPOTENT = "tightened_unipotent"
PATH_TIGHTENED_RANK1 = "tightened_rank1"

MODE_DENSE = "dense"
MODE_SPARSE = "sparse"
MODE_SYMMETRIC = "symmetric"
MODE_GROUPED = "grouped"


@dataclass
class CertificateBlock:
    label: str
    basis_kind: str  # "monomial" | "polynomial"
    basis: list  # words (tuples) or Polynomials
    matrix: list  # pre-certificate rational Hermitian matrix (Scalars)
    shift: Fraction = Fraction(0)  # sigma_k
    rank1_downdate: Fraction = Fraction(0)  # tau_k on e0 e0^T
    weight: int = 0  # s_eff in the bound arithmetic
    group: int = 0  # lifting group (grouped mode)

    @property
    def dim(self):
        return len(self.matrix)

    def certified_matrix(self):
        """matrix + shift*I - tau*e0e0^T, the block that must be PSD."""
        out = [list(row) for row in self.matrix]
        if self.shift:
            for i in range(len(out)):
                out[i][i] = out[i][i] + Scalar(self.shift)
        if self.rank1_downdate:
            out[0][0] = out[0][0] - Scalar(self.rank1_downdate)
        return out


@dataclass
class Certificate:
    problem: str
    order: int
    sense: str
    lambda_tilde: Fraction
    lambda_rat: Fraction
    path: str
    mode: str
    constraint_family: str | None
    blocks: list
    multipliers: list = field(default_factory=list)  # (ineq index, [Polynomial])
    kappas: list = field(default_factory=list)  # (moment index, Fraction)
    spectral_bounds: list = field(default_factory=list)  # per block dicts
    metadata: dict = field(default_factory=dict)

    def delta(self) -> Fraction:
        return self.lambda_rat - self.lambda_tilde


def _matrix_to_json(M):
    return [[str(x) for x in row] for row in M]


def _matrix_from_json(rows):
    return [[Scalar.parse(x) for x in row] for row in rows]


def certificate_to_json(cert: Certificate, varset: VariableSet) -> dict:
    blocks = []
    for b in cert.blocks:
        if b.basis_kind == "monomial":
            basis = [varset.word_str(w) for w in b.basis]
        else:
            basis = [format_polynomial(p) for p in b.basis]
        blocks.append(
            {
                "label": b.label,
                "basis_kind": b.basis_kind,
                "basis": basis,
                "matrix": _matrix_to_json(b.matrix),
                "shift": format_fraction(b.shift),
                "rank1_downdate": format_fraction(b.rank1_downdate),
                "weight": b.weight,
                "group": b.group,
            }
        )
    return {
        "format": "certibound-certificate/1",
        "problem": cert.problem,
        "order": cert.order,
        "sense": cert.sense,
        "lambda_tilde": format_fraction(cert.lambda_tilde),
        "lambda_rat": format_fraction(cert.lambda_rat),
        "path": cert.path,
        "mode": cert.mode,
        "constraint_family": cert.constraint_family,
        "blocks": blocks,
        "multipliers": [
            {"inequality": gi, "polys": [format_polynomial(u) for u in polys]}
            for gi, polys in cert.multipliers
        ],
        "kappas": [
            {"moment": mi, "value": format_fraction(k)} for mi, k in cert.kappas
        ],
        "spectral_bounds": [
            {
                "mu_low": format_fraction(sb["mu_low"]),
                "gap": format_fraction(sb["gap"]),
                "psd": sb["psd"],
            }
            for sb in cert.spectral_bounds
        ],
        "metadata": cert.metadata,
    }


def certificate_from_json(doc: dict, varset: VariableSet) -> Certificate:
    if doc.get("format") != "certibound-certificate/1":
        raise ParseError("not a certibound certificate file")
    from .algebra import _parse_word

    blocks = []
    for b in doc["blocks"]:
        if b["basis_kind"] == "monomial":
            basis = [_parse_word(t, varset) for t in b["basis"]]
        else:
            basis = [parse_polynomial(t, varset) for t in b["basis"]]
        blocks.append(
            CertificateBlock(
                label=b["label"],
                basis_kind=b["basis_kind"],
                basis=basis,
                matrix=_matrix_from_json(b["matrix"]),
                shift=parse_fraction(b["shift"]),
                rank1_downdate=parse_fraction(b["rank1_downdate"]),
                weight=int(b["weight"]),
                group=int(b.get("group", 0)),
            )
        )
    return Certificate(
        problem=doc["problem"],
        order=int(doc["order"]),
        sense=doc["sense"],
        lambda_tilde=parse_fraction(doc["lambda_tilde"]),
        lambda_rat=parse_fraction(doc["lambda_rat"]),
        path=doc["path"],
        mode=doc["mode"],
        constraint_family=doc.get("constraint_family"),
        blocks=blocks,
        multipliers=[
            (m["inequality"], [parse_polynomial(t, varset) for t in m["polys"]])
            for m in doc.get("multipliers", [])
        ],
        kappas=[
            (k["moment"], parse_fraction(k["value"])) for k in doc.get("kappas", [])
        ],
        spectral_bounds=[
            {
                "mu_low": parse_fraction(sb["mu_low"]),
                "gap": parse_fraction(sb["gap"]),
                "psd": bool(sb["psd"]),
            }
            for sb in doc.get("spectral_bounds", [])
        ],
        metadata=doc.get("metadata", {}),
    )


def save_certificate(path, cert: Certificate, varset: VariableSet):
    with open(path, "w") as fh:
        json.dump(certificate_to_json(cert, varset), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_certificate(path, varset: VariableSet) -> Certificate:
    with open(path) as fh:
        return certificate_from_json(json.load(fh), varset)
