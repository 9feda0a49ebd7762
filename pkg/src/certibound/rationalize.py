"""Exact rational pre-certificates from floating SDP data.

The pipeline: round (continued fractions) -> split localizer blocks into
exact SOHS multipliers -> assemble the rational LHS -> compute residuals
per reduced word -> apply the Frobenius-optimal correction to the main
Gram blocks so the certificate identity holds exactly.

Two projection paths exist.  The fast path applies when every main block
is indexed by monomials (binomial normal forms: one unit-modulus word
per entry); the correction is then entrywise conj(n) * r_t / n_I(t) with
n_I counting entries across all blocks sharing the reduced word t.  The
general path (polynomial bases from exact symmetry adaptation) assembles
the Hermitian Gram matrix Xi of the coefficient map and solves it
exactly; singular Xi is reported, never regularized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    Polynomial,
    RewriteSystem,
    involute_word,
    normal_form,
)
from .errors import (
    DimensionMismatch,
    IrrationalBasisChange,
    NonFinite,
    SingularXi,
    UncoveredMonomial,
)
from .exactla import solve_linear
from .relaxation import LOCALIZING, MAIN, MOMENT, NPOProblem
from .scalars import Scalar


@dataclass
class RoundingConfig:
    eta: Fraction = Fraction(1, 10**12)
    max_denominator: int = 10**16

    def __post_init__(self):
        self.eta = Fraction(self.eta)
        if self.eta <= 0:
            raise ValueError("rounding precision must be positive")


def round_fraction(x: float, cfg: RoundingConfig) -> Fraction:
    """Best rational approximation of x by continued-fraction truncation:
    the first convergent within eta, subject to the denominator bound."""
    if isinstance(x, Fraction):
        exact = x
    else:
        if not math.isfinite(x):
            raise NonFinite(f"cannot round {x!r}")
        exact = Fraction(x)
    target = exact
    h_prev, k_prev = 1, 0
    h, k = exact.numerator // exact.denominator, 1
    rem = exact - h
    while True:
        if k > cfg.max_denominator:
            break
        cand = Fraction(h, k)
        if abs(target - cand) <= cfg.eta:
            return cand
        if rem == 0:
            return cand
        rem = 1 / rem
        a = rem.numerator // rem.denominator
        rem -= a
        h, h_prev = a * h + h_prev, h
        k, k_prev = a * k + k_prev, k
    cand = target.limit_denominator(cfg.max_denominator)
    if abs(target - cand) <= cfg.eta:
        return cand
    raise ValueError(
        f"cannot approximate {x} within {cfg.eta} using denominators <= "
        f"{cfg.max_denominator}"
    )


def round_scalar(x, cfg: RoundingConfig) -> Scalar:
    """Entrywise continued-fraction rounding of a float or complex value."""
    if isinstance(x, Scalar):
        return Scalar(round_fraction(x.re, cfg), round_fraction(x.im, cfg))
    z = complex(x)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise NonFinite(f"cannot round {x!r}")
    return Scalar(round_fraction(z.real, cfg), round_fraction(z.imag, cfg))


def round_hermitian(G, cfg: RoundingConfig):
    """Round the upper triangle and mirror-conjugate; diagonal made real."""
    n = G.shape[0]
    out = [[Scalar(0)] * n for _ in range(n)]
    for i in range(n):
        out[i][i] = Scalar(round_fraction(float(G[i, i].real), cfg))
        for j in range(i + 1, n):
            s = round_scalar(complex(G[i, j]), cfg)
            out[i][j] = s
            out[j][i] = s.conj()
    return out


@dataclass
class RoundedSolution:
    lambda_tilde: Fraction
    main_blocks: list  # rational Hermitian matrices, aligned with main structures
    localizer_blocks: list  # rational Hermitian matrices per operator inequality
    kappas: list  # clamped nonnegative rationals per moment inequality


def round_solution(sol, structures, cfg: RoundingConfig) -> RoundedSolution:
    """Entrywise rounding of a NumericSolution against its block structures."""
    if len(sol.gram_blocks) != len(structures):
        raise DimensionMismatch("solution blocks do not match structures")
    lam = round_fraction(sol.bound, cfg)
    mains, locs, kappas = [], [], []
    for s, G in zip(structures, sol.gram_blocks):
        if G.shape != (s.dim, s.dim):
            raise DimensionMismatch(f"block {s.label} has wrong shape")
        if s.kind == MAIN:
            mains.append(round_hermitian(G, cfg))
        elif s.kind == LOCALIZING:
            locs.append(round_hermitian(G, cfg))
        elif s.kind == MOMENT:
            kappa = max(float(G[0, 0].real), 0.0)
            kappas.append(round_fraction(kappa, cfg))
    return RoundedSolution(lam, mains, locs, kappas)


def psd_split_localizer(G_tilde, basis_words, varset, cfg: RoundingConfig):
    """Rational multiplier polynomials u_j with sum_j u_j^* u_j = v^* (U U^*) v.

    U is a rounded eigen-factorization of the rational localizer block;
    any rounding still yields a valid Hermitian-square sum, only its
    distance to the numeric block degrades.
    """
    n = len(G_tilde)
    if n == 0:
        return []
    Gf = np.array([[G_tilde[i][j].to_complex() for j in range(n)] for i in range(n)])
    evals, evecs = np.linalg.eigh(0.5 * (Gf + Gf.conj().T))
    polys = []
    for j in range(n):
        if evals[j] <= 0:
            continue
        s = round_fraction(math.sqrt(evals[j]), cfg)
        if s <= 0:
            continue
        scale = Scalar(s)
        col = [round_scalar(complex(evecs[i, j]), cfg) * scale for i in range(n)]
        terms = [(w, col[i].conj()) for i, w in enumerate(basis_words)]
        p = Polynomial(varset, terms)
        if not p.is_zero():
            polys.append(p)
    return polys


def multiplier_gram(polys, basis_words):
    """The exact PSD matrix U U^* realized by multiplier polynomials."""
    n = len(basis_words)
    cols = []
    for p in polys:
        cols.append([p.coeff(w).conj() for w in basis_words])
    M = [[Scalar(0)] * n for _ in range(n)]
    for col in cols:
        for i in range(n):
            if col[i].is_zero():
                continue
            for j in range(n):
                M[i][j] = M[i][j] + col[i] * col[j].conj()
    return M


def rational_lhs(
    P: NPOProblem,
    lambda_tilde: Fraction,
    multipliers=None,
    kappas=None,
) -> Polynomial:
    """Normal form of lambda_tilde - f - sum u* g u - sum kappa (m - b)."""
    f = P.canonical_objective()
    lhs = Polynomial.constant(P.varset, Scalar(lambda_tilde)) - f
    for g, polys in multipliers or []:
        gn = normal_form(g, P.rewrite)
        for u in polys:
            lhs = lhs - u.involute() * gn * u
    for m, kappa in kappas or []:
        shifted = m.poly + Polynomial.constant(P.varset, Scalar(-m.bound))
        lhs = lhs - shifted.scale(Scalar(kappa))
    return normal_form(lhs, P.rewrite)


# ---------------------------------------------------------------------------
# projection systems


@dataclass
class MonomialBlockMap:
    """Entry -> (word, coeff) map of a monomial-indexed main block."""

    label: str
    basis_words: tuple
    entry_word: list  # [i][j] -> (word, Scalar)

    @property
    def dim(self):
        return len(self.basis_words)

    def contributions(self, i, j):
        return [self.entry_word[i][j]]


@dataclass
class PolynomialBlockMap:
    """Entry -> {word: coeff} map of a block indexed by exact polynomials."""

    label: str
    basis_polys: list  # Polynomial b_i over the ambient monomial algebra
    nmap: list  # [i][j] -> list of (word, Scalar)

    @property
    def dim(self):
        return len(self.basis_polys)

    def contributions(self, i, j):
        return self.nmap[i][j]


def exact_basis_change(U, max_denominator: int = 10**6):
    """Reconstruct exact rational/Gaussian-rational basis-change entries.

    Floats must be exactly small rationals (denominator bounded); anything
    else - discrete-Fourier or other cyclotomic entries - is rejected.
    """
    rows = []
    for row in np.atleast_2d(np.asarray(U, dtype=complex)):
        out = []
        for z in row:
            re = Fraction(float(z.real)).limit_denominator(max_denominator)
            im = Fraction(float(z.imag)).limit_denominator(max_denominator)
            if float(re) != float(z.real) or float(im) != float(z.imag):
                raise IrrationalBasisChange(
                    f"basis-change entry {z} is not an exact rational"
                )
            out.append(Scalar(re, im))
        rows.append(out)
    return rows


@dataclass
class ProjectionSystem:
    words: list
    word_pos: dict
    blocks: list
    lhs: Polynomial
    fast_path: bool
    counts: dict = field(default_factory=dict)  # word -> n_I (fast path)
    xi: list | None = None  # general path Gram matrix of the coefficient map

    def lhs_coeffs(self):
        return [self.lhs.coeff(w) for w in self.words]


def build_projection_system(blocks, lhs: Polynomial, rewrite: RewriteSystem):
    """Assemble the residual system for a set of main blocks.

    ``blocks`` may be GramStructure instances (monomial bases) or
    PolynomialBlockMap instances (exact symmetry-adapted bases).
    """
    maps = []
    poly_basis = False
    for blk in blocks:
        if isinstance(blk, PolynomialBlockMap):
            maps.append(blk)
            poly_basis = True
        elif isinstance(blk, MonomialBlockMap):
            maps.append(blk)
        else:
            if blk.kind != MAIN:
                raise ValueError("projection covers main Gram blocks only")
            entry_word = [
                [cell[0] for cell in row] for row in blk.entries
            ]
            maps.append(
                MonomialBlockMap(blk.label, tuple(blk.basis.words), entry_word)
            )

    words = set(lhs.support())
    for blk in maps:
        for i in range(blk.dim):
            for j in range(blk.dim):
                for w, _ in blk.contributions(i, j):
                    words.add(w)
    words = sorted(words, key=lambda w: (len(w), w))
    word_pos = {w: t for t, w in enumerate(words)}

    ps = ProjectionSystem(
        words=words, word_pos=word_pos, blocks=maps, lhs=lhs, fast_path=not poly_basis
    )
    if ps.fast_path:
        counts: dict = {}
        for blk in maps:
            for i in range(blk.dim):
                for j in range(blk.dim):
                    w, c = blk.entry_word[i][j]
                    if c.abs2() != 1:
                        raise ValueError(
                            "fast path requires unit-modulus coefficients"
                        )
                    counts[w] = counts.get(w, 0) + 1
        ps.counts = counts
    else:
        T = len(words)
        xi = [[Scalar(0)] * T for _ in range(T)]
        for blk in maps:
            for i in range(blk.dim):
                for j in range(blk.dim):
                    contrib = blk.contributions(i, j)
                    for (w1, c1) in contrib:
                        t = word_pos[w1]
                        for (w2, c2) in contrib:
                            s = word_pos[w2]
                            xi[t][s] = xi[t][s] + c1 * c2.conj()
        ps.xi = xi
    return ps


def polynomial_block_map(label, basis_polys, rewrite: RewriteSystem):
    """Precompute the entry -> word coefficient map of a polynomial basis."""
    n = len(basis_polys)
    nmap = []
    for i in range(n):
        bi_star = basis_polys[i].involute()
        row = []
        for j in range(n):
            prod = normal_form(bi_star * basis_polys[j], rewrite)
            row.append(sorted(prod.terms(), key=lambda t: (len(t[0]), t[0])))
        nmap.append(row)
    return PolynomialBlockMap(label, list(basis_polys), nmap)


def residuals(ps: ProjectionSystem, G_blocks) -> list:
    """r_t = LHS_t - sum over blocks/entries of n^t * G entries (exact)."""
    if len(G_blocks) != len(ps.blocks):
        raise DimensionMismatch("block count mismatch")
    acc = [Scalar(0) for _ in ps.words]
    for blk, G in zip(ps.blocks, G_blocks):
        if len(G) != blk.dim:
            raise DimensionMismatch(f"block {blk.label} has wrong dimension")
        for i in range(blk.dim):
            for j in range(blk.dim):
                g = G[i][j]
                if g.is_zero():
                    continue
                for w, c in blk.contributions(i, j):
                    t = ps.word_pos[w]
                    acc[t] = acc[t] + c * g
    return [ps.lhs.coeff(w) - acc[t] for t, w in enumerate(ps.words)]


def frobenius_project(ps: ProjectionSystem, G_blocks):
    """Correct the main blocks so every residual vanishes exactly.

    Returns (projected blocks, squared Frobenius norm of the correction).
    """
    r = residuals(ps, G_blocks)
    if ps.fast_path:
        for t, w in enumerate(ps.words):
            if w not in ps.counts and not r[t].is_zero():
                raise UncoveredMonomial(
                    f"word at position {t} carries residual {r[t]} but no entries"
                )
        out = []
        norm2 = Fraction(0)
        for blk, G in zip(ps.blocks, G_blocks):
            P = [list(row) for row in G]
            for i in range(blk.dim):
                for j in range(blk.dim):
                    w, c = blk.entry_word[i][j]
                    rt = r[ps.word_pos[w]]
                    if rt.is_zero():
                        continue
                    delta = c.conj() * rt / Scalar(Fraction(ps.counts[w]))
                    P[i][j] = P[i][j] + delta
                    norm2 += delta.abs2()
            out.append(P)
        return out, norm2
    # general path: solve Xi x = r exactly
    covered = set()
    for blk in ps.blocks:
        for i in range(blk.dim):
            for j in range(blk.dim):
                for w, _ in blk.contributions(i, j):
                    covered.add(w)
    for t, w in enumerate(ps.words):
        if w not in covered and not r[t].is_zero():
            raise UncoveredMonomial(
                f"word at position {t} carries residual {r[t]} but no entries"
            )
    try:
        x = solve_linear(ps.xi, r)
    except Exception as exc:
        col = getattr(exc, "column", None)
        bad = [ps.words[col]] if col is not None else []
        raise SingularXi(f"singular projection system: {exc}", words=bad) from exc
    out = []
    norm2 = Fraction(0)
    for blk, G in zip(ps.blocks, G_blocks):
        P = [list(row) for row in G]
        for i in range(blk.dim):
            for j in range(blk.dim):
                delta = Scalar(0)
                for w, c in blk.contributions(i, j):
                    delta = delta + x[ps.word_pos[w]] * c.conj()
                if not delta.is_zero():
                    P[i][j] = P[i][j] + delta
                    norm2 += delta.abs2()
        out.append(P)
    return out, norm2


# ---------------------------------------------------------------------------
# pre-certificates


@dataclass
class PreCertificate:
    """Exact rational identity lambda_tilde - f - multipliers = sum v* P(G) v."""

    lambda_tilde: Fraction
    blocks: list  # projected rational Hermitian matrices
    block_bases: list  # per block: tuple of words, or list of Polynomials
    multipliers: list  # (inequality index, [u polynomials])
    kappas: list  # (moment index, Fraction)
    lhs: Polynomial
    correction_norm2: Fraction
    structures: list = None

    def basis_sizes(self):
        return [len(b) for b in self.block_bases]


def rationalize_solution(
    P: NPOProblem, structures, sol, cfg: RoundingConfig | None = None
) -> PreCertificate:
    """Round, split localizers, project; residuals are rechecked to be zero."""
    cfg = cfg or RoundingConfig()
    rounded = round_solution(sol, structures, cfg)
    mains = [s for s in structures if s.kind == MAIN]
    locs = [s for s in structures if s.kind == LOCALIZING]
    moments = [s for s in structures if s.kind == MOMENT]

    multipliers = []
    for s, G in zip(locs, rounded.localizer_blocks):
        polys = psd_split_localizer(G, s.basis.words, P.varset, cfg)
        gi = s.constraint_ref[1] if s.constraint_ref else None
        multipliers.append((P.inequalities[gi], polys, gi))

    kappas = []
    for s, kappa in zip(moments, rounded.kappas):
        mi = s.constraint_ref[1]
        kappas.append((P.moment_inequalities[mi], kappa, mi))

    lhs = rational_lhs(
        P,
        rounded.lambda_tilde,
        multipliers=[(g, polys) for g, polys, _ in multipliers],
        kappas=[(m, kappa) for m, kappa, _ in kappas],
    )
    ps = build_projection_system(mains, lhs, P.rewrite)
    projected, norm2 = frobenius_project(ps, rounded.main_blocks)
    final = residuals(ps, projected)
    assert all(s.is_zero() for s in final), "projection left nonzero residuals"
    return PreCertificate(
        lambda_tilde=rounded.lambda_tilde,
        blocks=projected,
        block_bases=[tuple(s.basis.words) for s in mains],
        multipliers=[(gi, polys) for _, polys, gi in multipliers],
        kappas=[(mi, kappa) for _, kappa, mi in kappas],
        lhs=lhs,
        correction_norm2=norm2,
        structures=mains,
    )
