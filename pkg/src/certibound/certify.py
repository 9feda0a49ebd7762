"""Exact PSD decisions, spectral lower bounds, lifting and tightening.

Turns a :class:`~certibound.rationalize.PreCertificate` into a
:class:`CertifiedBound` backed by a verifiable certificate file.  All
eigenvalue reasoning is exact: rational bisection over the LDL PSD
decision replaces floating eigensolves (float eigenvalues only seed the
bisection bracket; every accepted bracket endpoint is re-proved
exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    PAULI,
    UNIPOTENT,
    PROJECTOR,
    Polynomial,
    RewriteSystem,
    VariableSet,
    normal_form,
    quotient_basis,
)
from .certfile import (
    MODE_DENSE,
    MODE_GROUPED,
    MODE_SPARSE,
    MODE_SYMMETRIC,
    PATH_ALREADY_PSD,
    PATH_LIFTED,
    PATH_TIGHTENED_RANK1,
    PATH_TIGHTENED_UNIPOTENT,
    Certificate,
    CertificateBlock,
    ConstantSOHSWitness,
)
from .errors import (
    NotInterior,
    NotUnipotent,
    SingularSolve,
    UnsupportedConstraintFamily,
)
from .exactla import (
    check_hermitian,
    gershgorin_bounds,
    ldl_psd,
    mat_shift,
    mat_to_complex,
    solve_linear,
)
from .rationalize import PreCertificate, RoundingConfig
from .relaxation import NPOProblem
from .scalars import Scalar

FAMILY_UNIPOTENT = "unipotent"
FAMILY_PROJECTOR = "projector"
FAMILY_BOX = "box"
FAMILY_BALL = "ball"


@dataclass
class SpectralBound:
    """Certified rational bracket mu_low <= lambda_min < mu_low + gap."""

    mu_low: Fraction
    gap: Fraction
    psd: bool


@dataclass
class CertifiedBound:
    lambda_rat: Fraction
    lambda_tilde: Fraction
    path: str
    spectral_bounds: list
    block_sizes: list

    @property
    def delta(self) -> Fraction:
        return self.lambda_rat - self.lambda_tilde


# ---------------------------------------------------------------------------
# exact spectral primitives


def exact_psd_check(M) -> bool:
    """M >= 0, decided by exact LDL with the PSD zero-pivot rule."""
    check_hermitian(M)
    return ldl_psd(M)


def exact_pd_check(M) -> bool:
    """Strict positive definiteness (every pivot positive)."""
    check_hermitian(M)
    n = len(M)
    if n == 0:
        return True
    if not ldl_psd(M):
        return False
    # PSD and nonsingular <=> PD; reuse the linear solver for the rank test
    try:
        solve_linear(M, [Scalar(1)] * n)
        return True
    except SingularSolve:
        return False


def _float_min_eig(M) -> float | None:
    try:
        H = mat_to_complex(M)
        return float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])
    except Exception:
        return None


def min_eig_lower_bound(M, gap: Fraction, hint: float | None = None) -> SpectralBound:
    """Bisection on exact_psd_check(M - mu I) from a Gershgorin bracket.

    A float eigenvalue hint (when available) proposes bracket endpoints;
    each proposal is accepted only after the exact PSD decision, so the
    returned bracket is rigorous regardless of the hint.
    """
    gap = Fraction(gap)
    if gap <= 0:
        raise ValueError("gap must be positive")
    check_hermitian(M)
    n = len(M)
    if n == 0:
        return SpectralBound(Fraction(0), Fraction(0), True)
    psd = ldl_psd(M)
    glo, _ = gershgorin_bounds(M)
    lo = glo  # M - lo*I is PSD by Gershgorin
    hi = min(M[i][i].re for i in range(n)) + 1  # exceeds lambda_min strictly
    if psd:
        lo = max(lo, Fraction(0))
    else:
        hi = min(hi, Fraction(0))
    if hint is None:
        hint = _float_min_eig(M)
    if hint is not None and np.isfinite(hint):
        h = Fraction(hint).limit_denominator(10**9)
        for probe in (h - gap / 2, h + gap / 2):
            if lo < probe < hi:
                if ldl_psd(mat_shift(M, -probe)):
                    lo = probe
                else:
                    hi = probe
    while hi - lo > gap:
        mid = (lo + hi) / 2
        if ldl_psd(mat_shift(M, -mid)):
            lo = mid
        else:
            hi = mid
    return SpectralBound(mu_low=lo, gap=hi - lo, psd=psd)


def max_eig_upper_bound(M) -> Fraction:
    _, hi = gershgorin_bounds(M)
    return hi


# ---------------------------------------------------------------------------
# constraint families


def detect_family(P: NPOProblem) -> str | None:
    """The Theorem-2 constraint family covering all variables, if any."""
    R = P.rewrite
    if R.all_unipotent():
        return FAMILY_UNIPOTENT
    if R.all_projector():
        return FAMILY_PROJECTOR
    normals = [normal_form(g, R) for g in P.inequalities]
    n = len(P.varset)
    if n and all(_box_constraint(P, i) in normals for i in range(n)):
        return FAMILY_BOX
    if n and _ball_constraint(P) in normals:
        return FAMILY_BALL
    return None


def _box_constraint(P: NPOProblem, i: int) -> Polynomial:
    one = Polynomial.constant(P.varset, Scalar(1))
    sq = Polynomial.monomial(P.varset, (i, i))
    return normal_form(one - sq, P.rewrite)


def _ball_constraint(P: NPOProblem) -> Polynomial:
    one = Polynomial.constant(P.varset, Scalar(1))
    acc = one
    for i in range(len(P.varset)):
        acc = acc - Polynomial.monomial(P.varset, (i, i))
    return normal_form(acc, P.rewrite)


# ---------------------------------------------------------------------------
# lifting and tightening formulas (Theorem arithmetic on certified data)


def lift_dense(lambda_tilde: Fraction, mu_min: Fraction, s: int, family) -> Fraction:
    """lambda_rat = lambda_tilde - min(mu_min, 0) * s."""
    if family is None:
        raise UnsupportedConstraintFamily(
            "lifting requires ball/box/unipotent/projector constraints"
        )
    return lambda_tilde - min(mu_min, Fraction(0)) * s


def lift_sparse(lambda_tilde: Fraction, mu_mins, sizes, family) -> Fraction:
    """lambda_rat = lambda_tilde - sum_k min(mu_k, 0) * s_k."""
    if family is None:
        raise UnsupportedConstraintFamily(
            "lifting requires ball/box/unipotent/projector constraints"
        )
    out = lambda_tilde
    for mu, s in zip(mu_mins, sizes):
        out -= min(mu, Fraction(0)) * s
    return out


def lift_symmetric(lambda_tilde: Fraction, mu_mins, s_full: int, family) -> Fraction:
    """Worst block minimum times the full ambient size (one unitary
    block-diagonalization; blocks cannot be lifted independently)."""
    if family is None:
        raise UnsupportedConstraintFamily(
            "lifting requires ball/box/unipotent/projector constraints"
        )
    worst = min((min(mu, Fraction(0)) for mu in mu_mins), default=Fraction(0))
    return lambda_tilde - worst * s_full


def lift_grouped(lambda_tilde: Fraction, groups, family) -> Fraction:
    """groups: list of (list of block mu_min, ambient group size S_g)."""
    if family is None:
        raise UnsupportedConstraintFamily(
            "lifting requires ball/box/unipotent/projector constraints"
        )
    out = lambda_tilde
    for mus, size in groups:
        worst = min((min(mu, Fraction(0)) for mu in mus), default=Fraction(0))
        out -= worst * size
    return out


def tighten_unipotent(lambda_tilde: Fraction, mu_min: Fraction, s: int, family) -> Fraction:
    if family != FAMILY_UNIPOTENT:
        raise NotUnipotent("interior tightening (i) needs unipotent variables")
    if mu_min <= 0:
        raise NotInterior("tightening requires a certified positive mu_min")
    return lambda_tilde - mu_min * s


def tighten_rank1(lambda_tilde: Fraction, P_matrix) -> tuple[Fraction, Fraction]:
    """Rank-1 downdate: tau = 1 / (e0^* P^{-1} e0); returns (lambda_rat, tau).

    Requires P strictly PD with the constant word first in the basis.
    """
    if not exact_pd_check(P_matrix):
        raise NotInterior("rank-1 tightening requires a positive-definite block")
    n = len(P_matrix)
    e0 = [Scalar(1)] + [Scalar(0)] * (n - 1)
    x = solve_linear(P_matrix, e0)  # P x = e0
    denom = x[0]
    if denom.im or denom.re <= 0:
        raise SingularSolve("e0^* P^{-1} e0 must be a positive rational")
    tau = 1 / denom.re
    return lambda_tilde - tau, tau


# ---------------------------------------------------------------------------
# constant SOHS witnesses (Appendix induction)


def constant_sohs_witness(
    family: str, varset: VariableSet, d: int, eps: Fraction
) -> ConstantSOHSWitness:
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("witness form requires eps > 0")
    if d < 1:
        raise ValueError("witness construction needs d >= 1")
    if family == FAMILY_UNIPOTENT:
        kinds = {v.kind for v in varset}
        if not kinds <= {UNIPOTENT, PAULI}:
            raise UnsupportedConstraintFamily("variables are not unipotent")
        R = RewriteSystem(varset)
        basis = quotient_basis(R, d)
        return ConstantSOHSWitness(family, eps, d, varset, list(basis.words))
    if family == FAMILY_PROJECTOR:
        if not all(v.kind == PROJECTOR for v in varset):
            raise UnsupportedConstraintFamily("variables are not projectors")
        R = RewriteSystem(varset)
    elif family in (FAMILY_BOX, FAMILY_BALL):
        if not all(v.kind == "free" for v in varset):
            raise UnsupportedConstraintFamily(
                f"{family} constraints apply to free variables"
            )
        R = RewriteSystem(varset)
    else:
        raise UnsupportedConstraintFamily(f"unknown constraint family {family!r}")

    basis = quotient_basis(R, d)
    one = Polynomial.constant(varset, Scalar(1))
    w = ConstantSOHSWitness(family, eps, d, varset, list(basis.words))
    ball_poly = None
    if family == FAMILY_BALL:
        ball_poly = one
        for i in range(len(varset)):
            ball_poly = ball_poly - Polynomial.monomial(varset, (i, i))
    for word in basis.words:
        for p, letter in enumerate(word):
            suffix = Polynomial.monomial(varset, word[p + 1 :])
            if family == FAMILY_BOX:
                c = one - Polynomial.monomial(varset, (letter, letter))
                w.q_terms.append((eps, c, suffix))
            elif family == FAMILY_BALL:
                for i in range(len(varset)):
                    if i != letter:
                        r = Polynomial.monomial(varset, (i,) + word[p + 1 :])
                        w.r_terms.append((eps, r))
                w.q_terms.append((eps, ball_poly, suffix))
            elif family == FAMILY_PROJECTOR:
                r = Polynomial.monomial(varset, (letter,) + word[p + 1 :]) - suffix
                w.r_terms.append((eps, r))
                c = Polynomial.monomial(varset, (letter,)) - Polynomial.monomial(
                    varset, (letter, letter)
                )
                w.q_terms.append((2 * eps, c, suffix))
    return w


def expand_witness(w: ConstantSOHSWitness) -> Polynomial:
    """eps v*v + sum weight r*r + sum weight q* c q, as a free polynomial."""
    acc = Polynomial.zero(w.varset)
    for word in w.basis_words:
        m = Polynomial.monomial(w.varset, word)
        acc = acc + (m.involute() * m).scale(Scalar(w.epsilon))
    for weight, r in w.r_terms:
        acc = acc + (r.involute() * r).scale(Scalar(weight))
    for weight, c, q in w.q_terms:
        acc = acc + (q.involute() * c * q).scale(Scalar(weight))
    return acc


# ---------------------------------------------------------------------------
# pipeline: pre-certificate -> certificate


@dataclass
class CertifyOptions:
    gap: Fraction | None = None  # bisection width; defaults to rounding eta
    tighten: bool = False
    lift_mode: str = MODE_DENSE  # dense | sparse | symmetric | grouped
    groups: list | None = None  # block index groups for MODE_GROUPED
    jobs: int = 1  # processes for per-block spectral bounds


def _spectral_worker(args):
    M, gap = args
    return min_eig_lower_bound(M, gap)


def _spectral_bounds(blocks, psd_flags, gap, jobs):
    """min_eig_lower_bound per non-PSD block, optionally in parallel."""
    todo = [k for k, ok in enumerate(psd_flags) if not ok]
    out = {k: SpectralBound(Fraction(0), Fraction(0), True) for k in range(len(blocks))}
    if jobs > 1 and len(todo) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = pool.map(_spectral_worker, [(blocks[k], gap) for k in todo])
            for k, sb in zip(todo, results):
                out[k] = sb
    else:
        for k in todo:
            out[k] = min_eig_lower_bound(blocks[k], gap)
    return [out[k] for k in range(len(blocks))]


def certify_precertificate(
    P: NPOProblem,
    pre: PreCertificate,
    options: CertifyOptions | None = None,
    rounding: RoundingConfig | None = None,
) -> tuple[CertifiedBound, Certificate]:
    """Decide PSD-ness of the projected blocks and lift or tighten.

    When the Theorem-2 constraint hypothesis fails and a lift would be
    needed, no bound is emitted (UnsupportedConstraintFamily carries the
    exact pre-certificate status instead).
    """
    options = options or CertifyOptions()
    gap = Fraction(options.gap) if options.gap else (rounding or RoundingConfig()).eta
    family = detect_family(P)
    nblocks = len(pre.blocks)
    mode = options.lift_mode
    if mode == MODE_GROUPED and not options.groups:
        raise ValueError("grouped lifting needs block groups")
    group_of = list(range(nblocks))
    if mode == MODE_GROUPED:
        group_of = [None] * nblocks
        for g, idxs in enumerate(options.groups):
            for k in idxs:
                group_of[k] = g
        if any(g is None for g in group_of):
            raise ValueError("every block must belong to a lifting group")
    elif mode == MODE_SYMMETRIC:
        group_of = [0] * nblocks

    psd_flags = []
    for M in pre.blocks:
        check_hermitian(M)
        psd_flags.append(ldl_psd(M))

    spectral = []
    if all(psd_flags):
        for k, M in enumerate(pre.blocks):
            spectral.append(SpectralBound(Fraction(0), Fraction(0), True))
        if options.tighten and nblocks == 1:
            return _tighten(P, pre, family, gap)
        lam = pre.lambda_tilde
        shifts = [Fraction(0)] * nblocks
        path = PATH_ALREADY_PSD
    else:
        if family is None:
            status = ", ".join(
                f"block {k}: {'PSD' if ok else 'not PSD'}"
                for k, ok in enumerate(psd_flags)
            )
            raise UnsupportedConstraintFamily(
                "pre-certificate is not PSD and no supported constraint family "
                f"covers the variables; no bound emitted ({status})"
            )
        spectral = _spectral_bounds(pre.blocks, psd_flags, gap, options.jobs)
        mus = [sb.mu_low if not sb.psd else Fraction(0) for sb in spectral]
        sizes = [len(b) for b in pre.block_bases]
        if mode == MODE_DENSE and nblocks == 1:
            lam = lift_dense(pre.lambda_tilde, mus[0], sizes[0], family)
            shifts = [-min(mus[0], Fraction(0))]
        elif mode in (MODE_DENSE, MODE_SPARSE):
            lam = lift_sparse(pre.lambda_tilde, mus, sizes, family)
            shifts = [-min(mu, Fraction(0)) for mu in mus]
        elif mode == MODE_SYMMETRIC:
            s_full = sum(sizes)
            lam = lift_symmetric(pre.lambda_tilde, mus, s_full, family)
            eps = -min(min(mu, Fraction(0)) for mu in mus)
            shifts = [eps] * nblocks
        else:  # grouped
            groups_arg = []
            for g, idxs in enumerate(options.groups):
                groups_arg.append(
                    ([mus[k] for k in idxs], sum(sizes[k] for k in idxs))
                )
            lam = lift_grouped(pre.lambda_tilde, groups_arg, family)
            shifts = [Fraction(0)] * nblocks
            for g, idxs in enumerate(options.groups):
                eps = -min(min(mus[k], Fraction(0)) for k in idxs)
                for k in idxs:
                    shifts[k] = eps
        path = PATH_LIFTED

    cert = _build_certificate(
        P, pre, lam, path, mode, family, shifts, [Fraction(0)] * nblocks, spectral,
        group_of,
    )
    bound = CertifiedBound(
        lambda_rat=lam,
        lambda_tilde=pre.lambda_tilde,
        path=path,
        spectral_bounds=spectral,
        block_sizes=[len(b) for b in pre.block_bases],
    )
    return bound, cert


def _tighten(P: NPOProblem, pre: PreCertificate, family, gap: Fraction):
    """Both Theorem-4 strategies on a PD single-block pre-certificate;
    the smaller certified bound wins."""
    M = pre.blocks[0]
    s = len(pre.block_bases[0])
    if not exact_pd_check(M):
        raise NotInterior("tightening requires a positive-definite pre-certificate")
    candidates = []
    lam_r1, tau = tighten_rank1(pre.lambda_tilde, M)
    # sanity window: tau in [mu_min, mu_max]
    sb = min_eig_lower_bound(M, gap)
    if tau < sb.mu_low or tau > max_eig_upper_bound(M):
        raise SingularSolve("rank-1 downdate outside the spectral window")
    candidates.append((lam_r1, PATH_TIGHTENED_RANK1, Fraction(0), tau, sb))
    if family == FAMILY_UNIPOTENT and sb.mu_low > 0:
        lam_u = tighten_unipotent(pre.lambda_tilde, sb.mu_low, s, family)
        candidates.append((lam_u, PATH_TIGHTENED_UNIPOTENT, -sb.mu_low, Fraction(0), sb))
    lam, path, shift, tau, sb = min(candidates, key=lambda t: t[0])
    cert = _build_certificate(
        P, pre, lam, path, MODE_DENSE, family, [shift], [tau], [sb], [0]
    )
    bound = CertifiedBound(
        lambda_rat=lam,
        lambda_tilde=pre.lambda_tilde,
        path=path,
        spectral_bounds=[sb],
        block_sizes=[s],
    )
    return bound, cert


def _build_certificate(
    P, pre, lam, path, mode, family, shifts, taus, spectral, group_of
) -> Certificate:
    blocks = []
    for k in range(len(pre.blocks)):
        basis = pre.block_bases[k]
        poly_basis = basis and isinstance(basis[0], Polynomial)
        blocks.append(
            CertificateBlock(
                label=f"G{k}",
                basis_kind="polynomial" if poly_basis else "monomial",
                basis=list(basis),
                matrix=pre.blocks[k],
                shift=shifts[k],
                rank1_downdate=taus[k],
                weight=len(basis),
                group=group_of[k],
            )
        )
    return Certificate(
        problem=P.name,
        order=P.metadata.get("order", 0),
        sense=P.sense,
        lambda_tilde=pre.lambda_tilde,
        lambda_rat=lam,
        path=path,
        mode=mode,
        constraint_family=family,
        blocks=blocks,
        multipliers=pre.multipliers,
        kappas=pre.kappas,
        spectral_bounds=[
            {"mu_low": sb.mu_low, "gap": sb.gap, "psd": sb.psd} for sb in spectral
        ],
        metadata={"correction_norm2": str(pre.correction_norm2)},
    )
