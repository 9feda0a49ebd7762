"""Exact PSD decisions, spectral bounds, lifting, tightening, witnesses."""

from fractions import Fraction

import pytest

from certibound.algebra import (
    PROJECTOR,
    Polynomial,
    RewriteSystem,
    Variable,
    VariableSet,
    normal_form,
    parse_polynomial,
    quotient_basis,
)
from certibound.certfile import (
    MODE_DENSE,
    MODE_SPARSE,
    MODE_SYMMETRIC,
    PATH_ALREADY_PSD,
    PATH_LIFTED,
    PATH_TIGHTENED_RANK1,
    PATH_TIGHTENED_UNIPOTENT,
)
from certibound.certify import (
    CertifyOptions,
    SpectralBound,
    certify_precertificate,
    constant_sohs_witness,
    detect_family,
    exact_psd_check,
    lift_dense,
    lift_grouped,
    lift_sparse,
    lift_symmetric,
    min_eig_lower_bound,
    tighten_rank1,
    tighten_unipotent,
)
from certibound.errors import (
    NotHermitian,
    NotInterior,
    NotUnipotent,
    UnsupportedConstraintFamily,
)
from certibound.rationalize import (
    PreCertificate,
    RoundingConfig,
    rational_lhs,
    rationalize_solution,
)
from certibound.relaxation import (
    NPOProblem,
    assemble_sdp,
    build_gram_structure,
    build_structures,
)
from certibound.scalars import Scalar
from certibound.sdpsolve import solve
from certibound.verifier import verify_certificate

from helpers import chsh_varset, rng, unipotent_varset


def S(x):
    return Scalar(Fraction(x))


def test_exact_psd_check_examples():
    assert exact_psd_check([[S(1), S(0)], [S(0), S(1)]])
    assert not exact_psd_check([[S(0), S(1)], [S(1), S(0)]])
    assert exact_psd_check([[S(1), S(1)], [S(1), S(1)]])  # rank-1, zero pivot
    with pytest.raises(NotHermitian):
        exact_psd_check([[S(0), S(1)], [S(2), S(0)]])


def test_exact_psd_zero_pivot_rule():
    # zero pivot with a nonzero column entry is not PSD
    assert not exact_psd_check([[S(0), S(1)], [S(1), S(1)]])
    assert exact_psd_check([[S(0), S(0)], [S(0), S(2)]])


def test_min_eig_lower_bound_examples():
    sb = min_eig_lower_bound([[S(1), S(0)], [S(0), S(1)]], Fraction(1, 100))
    assert Fraction(99, 100) <= sb.mu_low <= 1 and sb.psd
    sb = min_eig_lower_bound([[S(0), S(1)], [S(1), S(0)]], Fraction(1, 1000))
    assert Fraction(-1) <= sb.mu_low and sb.mu_low + sb.gap > Fraction(-1)
    assert sb.gap <= Fraction(1, 1000) and not sb.psd
    M = [[Scalar(Fraction(1, 3)), S(0)], [S(0), S(5)]]
    sb = min_eig_lower_bound(M, Fraction(1, 10**6))
    assert sb.mu_low <= Fraction(1, 3)
    assert exact_psd_check([[Scalar(Fraction(1, 3) - Fraction(1, 3)), S(0)], [S(0), S(5) - Scalar(Fraction(1,3))]])


def test_min_eig_bisection_without_hint():
    # force the pure Gershgorin bracket path
    M = [[S(2), S(1)], [S(1), S(2)]]
    sb = min_eig_lower_bound(M, Fraction(1, 512), hint=float("nan"))
    assert sb.mu_low <= 1 < sb.mu_low + sb.gap + Fraction(1, 512)
    assert sb.gap <= Fraction(1, 512)


def test_lift_formulas():
    fam = "unipotent"
    assert lift_dense(Fraction(3), Fraction(-1, 10**9), 5, fam) == Fraction(3) + Fraction(5, 10**9)
    assert lift_dense(Fraction(3), Fraction(1, 4), 5, fam) == Fraction(3)
    a, b = Fraction(1, 7), Fraction(2, 9)
    assert lift_sparse(Fraction(0), [-a, b], [3, 4], fam) == 3 * a
    assert lift_sparse(Fraction(0), [a, b], [3, 4], fam) == 0
    assert lift_symmetric(Fraction(0), [-a, -b], 9, fam) == 9 * b  # b > a
    assert lift_symmetric(Fraction(0), [a, b], 9, fam) == 0
    # grouped: one group reduces to the symmetric formula
    assert lift_grouped(Fraction(0), [([-a, -b], 9)], fam) == lift_symmetric(
        Fraction(0), [-a, -b], 9, fam
    )
    assert lift_grouped(Fraction(0), [([a], 3), ([-b], 4)], fam) == 4 * b
    assert lift_grouped(Fraction(1), [([-a, a], 5), ([-b, -a], 7)], fam) == (
        Fraction(1) + 5 * a + 7 * b
    )
    with pytest.raises(UnsupportedConstraintFamily):
        lift_dense(Fraction(0), Fraction(-1), 3, None)


def test_tighten_formulas():
    assert tighten_unipotent(Fraction(1), Fraction(1, 100), 5, "unipotent") == (
        Fraction(1) - Fraction(5, 100)
    )
    with pytest.raises(NotInterior):
        tighten_unipotent(Fraction(1), Fraction(0), 5, "unipotent")
    with pytest.raises(NotUnipotent):
        tighten_unipotent(Fraction(1), Fraction(1), 5, "box")
    lam, tau = tighten_rank1(Fraction(0), [[S(1), S(0)], [S(0), S(1)]])
    assert tau == 1
    lam, tau = tighten_rank1(Fraction(0), [[S(2), S(0)], [S(0), S(3)]])
    assert tau == 2
    lam, tau = tighten_rank1(Fraction(0), [[S(2), S(1)], [S(1), S(2)]])
    assert tau == Fraction(3, 2)
    with pytest.raises(NotInterior):
        tighten_rank1(Fraction(0), [[S(1), S(1)], [S(1), S(1)]])  # PSD not PD


def test_rank1_downdate_boundary_psd():
    M = [[S(2), S(1)], [S(1), S(2)]]
    lam, tau = tighten_rank1(Fraction(0), M)
    down = [[M[0][0] - Scalar(tau), M[0][1]], [M[1][0], M[1][1]]]
    assert exact_psd_check(down)
    assert not exact_psd_check(
        [[down[0][0] - Scalar(Fraction(1, 10**9)), down[0][1]], [down[1][0], down[1][1]]]
    )


def simple_x_problem():
    vs = unipotent_varset(1)
    R = RewriteSystem(vs)
    return NPOProblem("x", vs, R, parse_polynomial("X0", vs))


def pre_certificate_from(P, d=1):
    structs, _ = build_structures(P, d)
    Sd = assemble_sdp(structs, P, d)
    sol = solve(Sd)
    return structs, sol, rationalize_solution(P, structs, sol)


def test_chsh_end_to_end_certified():
    vs = chsh_varset()
    R = RewriteSystem(vs)
    f = parse_polynomial("A0*B0 + A0*B1 + A1*B0 - A1*B1", vs)
    P = NPOProblem("chsh", vs, R, f)
    _, _, pre = pre_certificate_from(P)
    bound, cert = certify_precertificate(P, pre)
    assert bound.lambda_rat**2 >= 8  # exact upper bound on 2*sqrt(2)
    assert verify_certificate(P, cert).valid


def test_unsupported_family_emits_no_bound():
    # free variables, no constraints: a non-PSD pre-certificate cannot lift
    vs = VariableSet([Variable(0, "u", 0), Variable(1, "v", 1)])
    R = RewriteSystem(vs)
    P = NPOProblem("free", vs, R, parse_polynomial("u*v", vs))
    lhs = rational_lhs(P, Fraction(0))
    s = build_gram_structure(P, 1)
    n = s.dim
    blocks = [[[S(0)] * n for _ in range(n)]]
    blocks[0][1][2] = blocks[0][2][1] = Scalar(Fraction(-1, 2))
    lhs2 = rational_lhs(P, Fraction(0))
    pre = PreCertificate(
        lambda_tilde=Fraction(0),
        blocks=blocks,
        block_bases=[tuple(s.basis.words)],
        multipliers=[],
        kappas=[],
        lhs=lhs2,
        correction_norm2=Fraction(0),
    )
    # fix the identity: lhs must match what the blocks express
    pre.lhs = normal_form(
        Polynomial(vs, {(0, 1): Scalar(Fraction(-1))}), R
    )
    with pytest.raises(UnsupportedConstraintFamily):
        certify_precertificate(P, pre)


def test_detect_family():
    assert detect_family(simple_x_problem()) == "unipotent"
    vs = VariableSet([Variable(0, "P0", 0, PROJECTOR)])
    R = RewriteSystem(vs)
    P = NPOProblem("p", vs, R, parse_polynomial("P0", vs))
    assert detect_family(P) == "projector"
    vs2 = VariableSet([Variable(0, "X0", 0), Variable(1, "X1", 1)])
    R2 = RewriteSystem(vs2)
    box = [parse_polynomial("1 - X0*X0", vs2), parse_polynomial("1 - X1*X1", vs2)]
    Pb = NPOProblem("b", vs2, R2, parse_polynomial("X0*X1", vs2), inequalities=box)
    assert detect_family(Pb) == "box"
    ball = [parse_polynomial("1 - X0*X0 - X1*X1", vs2)]
    Pball = NPOProblem("s", vs2, R2, parse_polynomial("X0*X1", vs2), inequalities=ball)
    assert detect_family(Pball) == "ball"
    Pnone = NPOProblem("n", vs2, R2, parse_polynomial("X0*X1", vs2))
    assert detect_family(Pnone) is None


def constructed_pd_precertificate(c=Fraction(1, 8)):
    """f = 0, lambda = s*c, G = c*I: an exact interior pre-certificate."""
    vs = unipotent_varset(2)
    R = RewriteSystem(vs)
    P = NPOProblem("pd", vs, R, Polynomial.zero(vs))
    s_struct = build_gram_structure(P, 1)
    n = s_struct.dim
    lam = n * c
    blocks = [[[Scalar(c) if i == j else S(0) for j in range(n)] for i in range(n)]]
    pre = PreCertificate(
        lambda_tilde=lam,
        blocks=blocks,
        block_bases=[tuple(s_struct.basis.words)],
        multipliers=[],
        kappas=[],
        lhs=rational_lhs(P, lam),
        correction_norm2=Fraction(0),
    )
    return P, pre, n, c


def test_tightening_on_constructed_pd_instance():
    P, pre, n, c = constructed_pd_precertificate()
    opts = CertifyOptions(tighten=True, gap=Fraction(1, 10**6))
    bound, cert = certify_precertificate(P, pre, opts)
    assert bound.path in (PATH_TIGHTENED_UNIPOTENT, PATH_TIGHTENED_RANK1)
    assert bound.lambda_rat < pre.lambda_tilde  # strictly tighter
    assert verify_certificate(P, cert).valid
    # unipotent strategy wins here: lambda ~ s*gap beats s*c - c
    assert bound.path == PATH_TIGHTENED_UNIPOTENT
    assert bound.lambda_rat <= n * Fraction(1, 10**6)


def test_tightening_requires_interior():
    P, pre, n, c = constructed_pd_precertificate()
    pre.blocks[0][0][0] = S(0)  # boundary now
    pre.lhs = rational_lhs(P, pre.lambda_tilde - c)
    pre.lambda_tilde = pre.lambda_tilde - c
    with pytest.raises(NotInterior):
        certify_precertificate(P, pre, CertifyOptions(tighten=True))


def test_lift_on_diagonal_perturbation_reproduces_formula():
    # subtract eps from one diagonal entry of an exact certificate: the
    # certified bound rises by exactly s * (mu_gap-rounded eps)
    P, pre, n, c = constructed_pd_precertificate(Fraction(0))
    eps = Fraction(1, 10**6)
    pre.blocks[0][0][0] = Scalar(-eps)
    pre.lhs = rational_lhs(P, -eps)
    pre.lambda_tilde = -eps
    bound, cert = certify_precertificate(P, pre, CertifyOptions(gap=Fraction(1, 10**9)))
    assert bound.path == PATH_LIFTED
    mu = bound.spectral_bounds[0].mu_low
    assert mu <= -eps < mu + Fraction(1, 10**9) + eps / 10**6
    assert bound.lambda_rat == pre.lambda_tilde - mu * n
    assert verify_certificate(P, cert).valid


def test_sparse_vs_dense_bound_loss_on_disjoint_cliques():
    # disjoint cliques at order 2: sum of sparse sizes < dense size, so a
    # comparable eigenvalue defect costs less through the sparse lift
    vs = unipotent_varset(4, groups=[0, 1, 2, 3])
    R = RewriteSystem(vs)
    f = parse_polynomial("X0*X1 + X2*X3", vs)
    P = NPOProblem("toy2", vs, R, f)
    d = 2
    dense_structs, _ = build_structures(P, d)
    sparse_structs, _ = build_structures(P, d, sparse=True)
    S_dense = assemble_sdp(dense_structs, P, d)
    S_sparse = assemble_sdp(sparse_structs, P, d)
    sol_d = solve(S_dense)
    sol_s = solve(S_sparse)
    eps = 1e-7
    for sol in (sol_d, sol_s):
        for G in sol.gram_blocks:
            for i in range(G.shape[0]):
                G[i, i] -= eps  # comparable negative defect everywhere
    pre_d = rationalize_solution(P, dense_structs, sol_d)
    pre_s = rationalize_solution(P, sparse_structs, sol_s)
    gap = Fraction(1, 10**9)
    bd, cert_d = certify_precertificate(P, pre_d, CertifyOptions(gap=gap))
    bs, cert_s = certify_precertificate(
        P, pre_s, CertifyOptions(gap=gap, lift_mode=MODE_SPARSE)
    )
    assert verify_certificate(P, cert_d).valid
    assert verify_certificate(P, cert_s).valid
    s_dense = sum(bd.block_sizes)
    s_sparse = sum(bs.block_sizes)
    assert s_sparse < s_dense
    assert bs.delta <= bd.delta


def symmetric_toy():
    """f = X0*X1 over commuting unipotent letters, with the rational
    orthogonal mixing [[3/5,4/5],[-4/5,3/5]] on the degree-1 sector."""
    vs = unipotent_varset(2, groups=[0, 1])
    R = RewriteSystem(vs)
    f = parse_polynomial("X0*X1", vs)
    P = NPOProblem("sym", vs, R, f)
    b0 = Polynomial.constant(vs, Scalar(1))
    x0 = Polynomial.monomial(vs, (0,))
    x1 = Polynomial.monomial(vs, (1,))
    b1 = x0.scale(Scalar(Fraction(3, 5))) + x1.scale(Scalar(Fraction(4, 5)))
    b2 = x0.scale(Scalar(Fraction(-4, 5))) + x1.scale(Scalar(Fraction(3, 5)))
    return P, [b0], [b1, b2]


def test_symmetric_lift_matches_inflated_dense():
    from certibound.rationalize import (
        build_projection_system,
        frobenius_project,
        polynomial_block_map,
    )

    P, basis_a, basis_b = symmetric_toy()
    R = P.rewrite
    lam = Fraction(1, 2)  # below the optimum 1: forces a lift
    lhs = rational_lhs(P, lam)
    blk_a = polynomial_block_map("Ga", basis_a, R)
    blk_b = polynomial_block_map("Gb", basis_b, R)
    ps = build_projection_system([blk_a, blk_b], lhs, R)
    Ga = [[Scalar(Fraction(1, 2))]]
    Gb = [[Scalar(Fraction(1, 2)), S(0)], [S(0), Scalar(Fraction(1, 2))]]
    projected, _ = frobenius_project(ps, [Ga, Gb])
    pre = PreCertificate(
        lambda_tilde=lam,
        blocks=projected,
        block_bases=[basis_a, basis_b],
        multipliers=[],
        kappas=[],
        lhs=lhs,
        correction_norm2=Fraction(0),
    )
    bound, cert = certify_precertificate(
        P, pre, CertifyOptions(gap=Fraction(1, 10**6), lift_mode=MODE_SYMMETRIC)
    )
    assert bound.path == PATH_LIFTED
    assert verify_certificate(P, cert).valid

    # inflate to the ambient monomial basis: U^T diag(Ga,Gb) U
    s_struct = build_gram_structure(P, 1)
    rows = basis_a + basis_b
    words = list(s_struct.basis.words)
    n = len(words)
    U = [[p.coeff(w) for w in words] for p in rows]
    big = [[S(0)] * n for _ in range(n)]
    blocks_diag = [projected[0], projected[1]]
    offs = [0, 1]
    for bi, blk in enumerate(blocks_diag):
        o = offs[bi]
        for i in range(len(blk)):
            for j in range(len(blk)):
                for a in range(n):
                    for b_ in range(n):
                        big[a][b_] = big[a][b_] + (
                            U[o + i][a].conj() * blk[i][j] * U[o + j][b_]
                        )
    lhs_check = rational_lhs(P, lam)
    ps_dense = build_projection_system([s_struct], lhs_check, R)
    from certibound.rationalize import residuals as res_fn

    assert all(x.is_zero() for x in res_fn(ps_dense, [big]))
    sb = min_eig_lower_bound(big, Fraction(1, 10**6))
    worst = min(sb.mu_low, Fraction(0))
    dense_lift = lift_dense(lam, worst, n, "unipotent")
    # same ambient spectrum: bounds agree within the bisection gaps
    assert abs(dense_lift - bound.lambda_rat) <= Fraction(2, 10**6) * n


def test_grouped_lift_pipeline():
    P, basis_a, basis_b = symmetric_toy()
    from certibound.rationalize import (
        build_projection_system,
        frobenius_project,
        polynomial_block_map,
    )

    R = P.rewrite
    lam = Fraction(1, 2)
    lhs = rational_lhs(P, lam)
    blk_a = polynomial_block_map("Ga", basis_a, R)
    blk_b = polynomial_block_map("Gb", basis_b, R)
    ps = build_projection_system([blk_a, blk_b], lhs, R)
    Ga = [[Scalar(Fraction(1, 2))]]
    Gb = [[Scalar(Fraction(1, 2)), S(0)], [S(0), Scalar(Fraction(1, 2))]]
    projected, _ = frobenius_project(ps, [Ga, Gb])
    pre = PreCertificate(
        lambda_tilde=lam,
        blocks=projected,
        block_bases=[basis_a, basis_b],
        multipliers=[],
        kappas=[],
        lhs=lhs,
        correction_norm2=Fraction(0),
    )
    bound, cert = certify_precertificate(
        P,
        pre,
        CertifyOptions(
            gap=Fraction(1, 10**6), lift_mode="grouped", groups=[[0], [1]]
        ),
    )
    assert verify_certificate(P, cert).valid
    # one fully PSD group contributes nothing to the shift
    shifts = {b.label: b.shift for b in cert.blocks}
    assert min(shifts.values()) == 0 or all(v >= 0 for v in shifts.values())


def test_witness_spec_examples():
    uvs = unipotent_varset(1)
    w = constant_sohs_witness("unipotent", uvs, 1, Fraction(1))
    assert w.size == 2 and not w.r_terms and not w.q_terms
    bvs = VariableSet([Variable(0, "X0")])
    w = constant_sohs_witness("box", bvs, 1, Fraction(1))
    # 2 = (1 + X^2) + 1*(1 - X^2): single q term with q = 1
    assert len(w.q_terms) == 1
    weight, c, q = w.q_terms[0]
    assert weight == 1 and str(q) == "1 * 1"
    assert str(normal_form(c, RewriteSystem(bvs))) == "1 * 1 + -1 * X0*X0"
    pvs = VariableSet([Variable(0, "P0", 0, PROJECTOR)])
    w = constant_sohs_witness("projector", pvs, 1, Fraction(1))
    # 2 = 1 + X^2 + (X-1)^2 + 2(X - X^2)
    assert len(w.r_terms) == 1 and len(w.q_terms) == 1
    assert w.q_terms[0][0] == 2


def test_lemma3_identity_exhaustive():
    # N(v_d* v_d) = s for unipotent systems, n <= 4, d <= 3
    for n in range(1, 5):
        for d in range(0, 4):
            vs = unipotent_varset(n)
            R = RewriteSystem(vs)
            basis = quotient_basis(R, d)
            acc = Polynomial.zero(vs)
            for word in basis.words:
                m = Polynomial.monomial(vs, word)
                acc = acc + m.involute() * m
            nf = normal_form(acc, R)
            assert nf == Polynomial.constant(vs, Scalar(len(basis)))


def test_certificate_roundtrip(tmp_path):
    from certibound.certfile import load_certificate, save_certificate

    vs = chsh_varset()
    R = RewriteSystem(vs)
    f = parse_polynomial("A0*B0 + A0*B1 + A1*B0 - A1*B1", vs)
    P = NPOProblem("chsh", vs, R, f)
    _, _, pre = pre_certificate_from(P)
    bound, cert = certify_precertificate(P, pre)
    path = tmp_path / "cert.json"
    save_certificate(path, cert, vs)
    cert2 = load_certificate(path, vs)
    assert cert2.lambda_rat == cert.lambda_rat
    assert cert2.blocks[0].matrix == cert.blocks[0].matrix
    assert verify_certificate(P, cert2).valid
