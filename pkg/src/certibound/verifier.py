"""Independent exact verifier of emitted certificates.

This module shares only the polynomial algebra (and the certificate data
model) with the certification pipeline.  It re-derives the certificate
identity by direct polynomial expansion and re-decides positive
semidefiniteness with its own LDL elimination running in reversed pivot
order, decorrelating it from the pipeline's kernel.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction

from .algebra import (
    PAULI,
    PROJECTOR,
    UNIPOTENT,
    Polynomial,
    involute_word,
    normal_form,
    quotient_basis,
)
from .certfile import Certificate, ConstantSOHSWitness
from .errors import BasisMismatch, NotHermitian
from .relaxation import NPOProblem
from .scalars import Scalar


@dataclass
class VerificationReport:
    identity_ok: bool
    psd_ok: list
    constraint_family_ok: bool
    failing_word: str | None = None
    failing_block: int | None = None
    detail: str = ""
    elapsed: float = 0.0

    @property
    def valid(self) -> bool:
        return self.identity_ok and all(self.psd_ok) and self.constraint_family_ok


# ---------------------------------------------------------------------------
# exact PSD decision, reversed pivot order (independent of exactla.ldl_psd)


def _psd_reversed(M) -> bool:
    n = len(M)
    A = [[M[i][j] for j in range(n)] for i in range(n)]
    for i in range(n):
        if A[i][i].im:
            raise NotHermitian(f"diagonal entry {i} is not real")
        for j in range(i):
            if A[i][j] != A[j][i].conj():
                raise NotHermitian(f"entries ({i},{j}), ({j},{i}) not conjugate")
    for k in range(n - 1, -1, -1):
        p = A[k][k].re
        if p < 0:
            return False
        if p == 0:
            for i in range(k):
                if not A[i][k].is_zero():
                    return False
            continue
        for i in range(k):
            aik = A[i][k]
            if aik.is_zero():
                continue
            for j in range(k):
                akj = A[k][j]
                if not akj.is_zero():
                    prod = aik * akj
                    A[i][j] = A[i][j] - Scalar(prod.re / p, prod.im / p)
            A[i][k] = Scalar(0)
    return True


def verify_psd(cert: Certificate) -> list:
    """Exact PSD decision of every certified block; a non-Hermitian block
    fails outright."""
    out = []
    for b in cert.blocks:
        try:
            out.append(_psd_reversed(b.certified_matrix()))
        except NotHermitian:
            out.append(False)
    return out


# ---------------------------------------------------------------------------
# identity check


def _block_polynomial(block, P: NPOProblem) -> Polynomial:
    """sum_ij b_i^* M_ij b_j of the stored (pre-certificate) matrix."""
    varset = P.varset
    acc: dict = {}
    if block.basis_kind == "monomial":
        R = P.rewrite
        words = block.basis
        for i, alpha in enumerate(words):
            a_star = involute_word(alpha)
            for j, beta in enumerate(words):
                g = block.matrix[i][j]
                if g.is_zero():
                    continue
                c, w = R.reduce_word(a_star + beta)
                s = acc.get(w)
                s = g * c if s is None else s + g * c
                if s.is_zero():
                    acc.pop(w, None)
                else:
                    acc[w] = s
        return Polynomial(varset, acc)
    out = Polynomial.zero(varset)
    for i, bi in enumerate(block.basis):
        bi_star = bi.involute()
        for j, bj in enumerate(block.basis):
            g = block.matrix[i][j]
            if g.is_zero():
                continue
            out = out + (bi_star * bj).scale(g)
    return normal_form(out, P.rewrite)


def verify_identity(P: NPOProblem, cert: Certificate):
    """Exact equality of LHS and block expansion at the pre-certificate."""
    R = P.rewrite
    for k, b in enumerate(cert.blocks):
        if b.basis_kind == "monomial":
            for w in b.basis:
                if not R.is_reduced(w):
                    raise BasisMismatch(
                        f"block {k}: basis word {P.varset.word_str(w)} is not "
                        "reduced under the problem ideal"
                    )
        if len(b.matrix) != len(b.basis):
            raise BasisMismatch(f"block {k}: matrix does not match basis size")

    f = P.canonical_objective()
    lhs = Polynomial.constant(P.varset, Scalar(cert.lambda_tilde)) - f
    for gi, polys in cert.multipliers:
        if not 0 <= gi < len(P.inequalities):
            raise BasisMismatch(f"multiplier references unknown inequality {gi}")
        g = normal_form(P.inequalities[gi], R)
        for u in polys:
            lhs = lhs - u.involute() * g * u
    for mi, kappa in cert.kappas:
        if not 0 <= mi < len(P.moment_inequalities):
            raise BasisMismatch(f"kappa references unknown moment constraint {mi}")
        m = P.moment_inequalities[mi]
        shifted = m.poly + Polynomial.constant(P.varset, Scalar(-m.bound))
        lhs = lhs - shifted.scale(Scalar(kappa))
    lhs = normal_form(lhs, R)

    rhs = Polynomial.zero(P.varset)
    for b in cert.blocks:
        rhs = rhs + _block_polynomial(b, P)
    diff = normal_form(lhs - rhs, R)
    if diff.is_zero():
        return True, None
    failing = diff.support()[0]
    return False, P.varset.word_str(failing)


# ---------------------------------------------------------------------------
# structural checks: lifting arithmetic and the constraint-family hypothesis


def _detect_family(P: NPOProblem) -> str | None:
    R = P.rewrite
    kinds = {v.kind for v in P.varset}
    if kinds and kinds <= {UNIPOTENT, PAULI}:
        return "unipotent"
    if kinds == {PROJECTOR}:
        return "projector"
    normals = [normal_form(g, R) for g in P.inequalities]
    one = Polynomial.constant(P.varset, Scalar(1))
    n = len(P.varset)
    boxes = [
        normal_form(one - Polynomial.monomial(P.varset, (i, i)), R) for i in range(n)
    ]
    if n and all(b in normals for b in boxes):
        return "box"
    ball = one
    for i in range(n):
        ball = ball - Polynomial.monomial(P.varset, (i, i))
    if n and normal_form(ball, R) in normals:
        return "ball"
    return None


def _stacked_unitary(blocks, P: NPOProblem):
    """Check that the blocks' polynomial bases stack to an exact unitary
    over their joint monomial support."""
    support = []
    seen = set()
    rows = []
    for b in blocks:
        for p in b.basis:
            rows.append(p)
            for w in p.support():
                if w not in seen:
                    seen.add(w)
                    support.append(w)
    support.sort(key=lambda w: (len(w), w))
    if len(rows) != len(support):
        return False
    pos = {w: i for i, w in enumerate(support)}
    # U[r][c] = coefficient of support word c in row polynomial r
    U = [[Scalar(0)] * len(support) for _ in rows]
    for r, p in enumerate(rows):
        for w, c in p.terms():
            U[r][pos[w]] = c
    m = len(support)
    for a in range(m):
        for b_ in range(a, m):
            acc = Scalar(0)
            for r in range(m):
                acc = acc + U[r][a].conj() * U[r][b_]
            expected = Scalar(1) if a == b_ else Scalar(0)
            if acc != expected:
                return False
    return True


def verify_structure(P: NPOProblem, cert: Certificate):
    """Bound arithmetic plus the hypotheses behind the applied correction."""
    expected = cert.lambda_tilde
    for b in cert.blocks:
        if b.weight != len(b.basis):
            return False, f"block {b.label}: weight differs from basis size"
        expected += b.shift * b.weight
        expected -= b.rank1_downdate
    if expected != cert.lambda_rat:
        return False, "certified bound does not match the applied corrections"

    family = _detect_family(P)
    lifted = [b for b in cert.blocks if b.shift > 0]
    tightened = [b for b in cert.blocks if b.shift < 0]
    downdated = [b for b in cert.blocks if b.rank1_downdate != 0]

    if cert.constraint_family is not None and cert.constraint_family != family:
        return False, (
            f"declared family {cert.constraint_family!r} does not match the "
            f"problem ({family!r})"
        )
    if lifted and family not in ("unipotent", "projector", "box", "ball"):
        return False, "lift applied without a supported constraint family"
    if tightened and family != "unipotent":
        return False, "negative shift is only sound for unipotent variables"
    for b in downdated:
        if b.rank1_downdate < 0:
            return False, "rank-1 downdate must be nonnegative"
        if b.basis_kind != "monomial" or not b.basis or b.basis[0] != ():
            return False, "rank-1 downdate needs the constant word first in basis"
    if cert.mode == "symmetric" and (lifted or tightened):
        shifts = {b.shift for b in cert.blocks}
        if len(shifts) != 1:
            return False, "symmetric lift must shift all blocks equally"
        if any(b.basis_kind != "polynomial" for b in cert.blocks):
            return False, "symmetric mode expects polynomial bases"
        if not _stacked_unitary(cert.blocks, P):
            return False, "symmetry blocks do not stack to an exact unitary"
    if cert.mode == "grouped" and (lifted or tightened):
        groups: dict = {}
        for b in cert.blocks:
            groups.setdefault(b.group, []).append(b)
        for g, blocks in sorted(groups.items()):
            if len({b.shift for b in blocks}) != 1:
                return False, f"group {g}: blocks must share one shift"
            if any(b.basis_kind != "polynomial" for b in blocks):
                return False, f"group {g}: expected polynomial bases"
            if not _stacked_unitary(blocks, P):
                return False, f"group {g}: blocks do not stack to an exact unitary"
        supports = []
        for g, blocks in sorted(groups.items()):
            sup = frozenset(
                w for b in blocks for p in b.basis for w in p.support()
            )
            supports.append(sup)
        for a in range(len(supports)):
            for b_ in range(a + 1, len(supports)):
                if supports[a] & supports[b_]:
                    return False, "lifting groups share monomial support"
    return True, ""


def verify_certificate(P: NPOProblem, cert: Certificate) -> VerificationReport:
    start = time.perf_counter()
    identity_ok, failing_word = verify_identity(P, cert)
    psd_ok = verify_psd(cert)
    family_ok, detail = verify_structure(P, cert)
    failing_block = next((k for k, ok in enumerate(psd_ok) if not ok), None)
    return VerificationReport(
        identity_ok=identity_ok,
        psd_ok=psd_ok,
        constraint_family_ok=family_ok,
        failing_word=failing_word,
        failing_block=failing_block,
        detail=detail,
        elapsed=time.perf_counter() - start,
    )


# ---------------------------------------------------------------------------
# constant-SOHS witness verification


def verify_constant_sohs(w: ConstantSOHSWitness, family: str, d: int) -> bool:
    """Expand the witness exactly and compare with eps * s."""
    if w.family != family or w.d != d or w.epsilon <= 0:
        return False
    from .algebra import RewriteSystem

    R = RewriteSystem(w.varset)
    if list(quotient_basis(R, d).words) != list(w.basis_words):
        return False
    target = Polynomial.constant(w.varset, Scalar(w.epsilon * len(w.basis_words)))
    if family == "unipotent":
        if w.r_terms or w.q_terms:
            return False
        acc = Polynomial.zero(w.varset)
        for word in w.basis_words:
            m = Polynomial.monomial(w.varset, word)
            acc = acc + (m.involute() * m).scale(Scalar(w.epsilon))
        return normal_form(acc, R) == target
    acc = Polynomial.zero(w.varset)
    for word in w.basis_words:
        m = Polynomial.monomial(w.varset, word)
        acc = acc + (m.involute() * m).scale(Scalar(w.epsilon))
    for weight, r in w.r_terms:
        if weight <= 0:
            return False
        acc = acc + (r.involute() * r).scale(Scalar(weight))
    for weight, c, q in w.q_terms:
        if weight <= 0:
            return False
        acc = acc + (q.involute() * c * q).scale(Scalar(weight))
    # free-algebra identity; constraint terms lie in the module/ideal
    return acc == target
