"""Independent verification: identities, PSD decisions, mutation testing."""

from fractions import Fraction

import pytest

from certibound.algebra import (
    PROJECTOR,
    RewriteSystem,
    Variable,
    VariableSet,
    parse_polynomial,
)
from certibound.certfile import (
    MODE_DENSE,
    PATH_ALREADY_PSD,
    Certificate,
    CertificateBlock,
)
from certibound.certify import CertifyOptions, certify_precertificate, constant_sohs_witness
from certibound.errors import BasisMismatch
from certibound.rationalize import rationalize_solution
from certibound.relaxation import NPOProblem, assemble_sdp, build_structures
from certibound.scalars import Scalar
from certibound.sdpsolve import solve
from certibound.verifier import (
    verify_certificate,
    verify_constant_sohs,
    verify_identity,
    verify_psd,
)

from helpers import chsh_varset, rng, unipotent_varset


def S(x):
    return Scalar(Fraction(x))


def chsh_problem():
    vs = chsh_varset()
    f = parse_polynomial("A0*B0 + A0*B1 + A1*B0 - A1*B1", vs)
    return NPOProblem("chsh", vs, RewriteSystem(vs), f)


def emitted_certificate(P, d=1, **opts):
    structs, _ = build_structures(P, d)
    Sd = assemble_sdp(structs, P, d)
    sol = solve(Sd)
    pre = rationalize_solution(P, structs, sol)
    return certify_precertificate(P, pre, CertifyOptions(**opts) if opts else None)


def test_pipeline_certificate_accepted():
    P = chsh_problem()
    _, cert = emitted_certificate(P)
    ok, failing = verify_identity(P, cert)
    assert ok and failing is None
    assert all(verify_psd(cert))
    assert verify_certificate(P, cert).valid


def test_bumped_entry_rejected_with_failing_word():
    P = chsh_problem()
    _, cert = emitted_certificate(P)
    i, j = 1, 3
    cert.blocks[0].matrix[i][j] = cert.blocks[0].matrix[i][j] + Scalar(
        Fraction(1, 10**18)
    )
    cert.blocks[0].matrix[j][i] = cert.blocks[0].matrix[i][j].conj()
    ok, failing = verify_identity(P, cert)
    assert not ok and failing == "A0*B0"  # basis position 3 is B0
    assert not verify_certificate(P, cert).valid


def test_hand_certificate_accepted():
    vs = unipotent_varset(1)
    R = RewriteSystem(vs)
    P = NPOProblem("x", vs, R, parse_polynomial("X0", vs))
    half = Scalar(Fraction(1, 2))
    blk = CertificateBlock(
        "G0", "monomial", [(), (0,)], [[half, -half], [-half, half]], weight=2
    )
    cert = Certificate(
        "x", 1, "maximize", Fraction(1), Fraction(1), PATH_ALREADY_PSD,
        MODE_DENSE, "unipotent", [blk],
    )
    assert verify_certificate(P, cert).valid


def test_psd_examples():
    blk_id = CertificateBlock("a", "monomial", [(), (0,)], [[S(1), S(0)], [S(0), S(1)]], weight=2)
    blk_bad = CertificateBlock("b", "monomial", [(), (0,)], [[S(0), S(1)], [S(1), S(0)]], weight=2)
    cert = Certificate(
        "t", 1, "maximize", Fraction(0), Fraction(0), PATH_ALREADY_PSD,
        MODE_DENSE, None, [blk_id, blk_bad],
    )
    assert verify_psd(cert) == [True, False]


def test_rank_deficient_block_from_tightening_accepted():
    # tightened certificates sit on the PSD boundary (zero pivot case)
    from certibound.rationalize import PreCertificate, rational_lhs
    from certibound.relaxation import build_gram_structure

    vs = unipotent_varset(2)
    R = RewriteSystem(vs)
    from certibound.algebra import Polynomial

    P = NPOProblem("pd", vs, R, Polynomial.zero(vs))
    s_struct = build_gram_structure(P, 1)
    n = s_struct.dim
    c = Fraction(1, 4)
    pre = PreCertificate(
        lambda_tilde=n * c,
        blocks=[[[Scalar(c) if i == j else S(0) for j in range(n)] for i in range(n)]],
        block_bases=[tuple(s_struct.basis.words)],
        multipliers=[],
        kappas=[],
        lhs=rational_lhs(P, n * c),
        correction_norm2=Fraction(0),
    )
    bound, cert = certify_precertificate(
        P, pre, CertifyOptions(tighten=True, gap=Fraction(1, 10**6))
    )
    rep = verify_certificate(P, cert)
    assert rep.valid and all(rep.psd_ok)


def test_basis_mismatch_rejected():
    P = chsh_problem()
    _, cert = emitted_certificate(P)
    cert.blocks[0].basis[1] = (0, 0)  # not a reduced word (A0*A0 -> 1)
    with pytest.raises(BasisMismatch):
        verify_identity(P, cert)


def test_wrong_arithmetic_rejected():
    P = chsh_problem()
    _, cert = emitted_certificate(P)
    cert.lambda_rat = cert.lambda_rat + Fraction(1, 10**9)
    rep = verify_certificate(P, cert)
    assert not rep.constraint_family_ok and not rep.valid


def test_mutation_testing_50_random():
    r = rng("mutations")
    problems = []
    P1 = chsh_problem()
    problems.append((P1, emitted_certificate(P1)[1]))
    vs = unipotent_varset(1)
    P2 = NPOProblem("x", vs, RewriteSystem(vs), parse_polynomial("X0", vs))
    problems.append((P2, emitted_certificate(P2)[1]))
    rejected = 0
    for trial in range(50):
        P, base = problems[trial % len(problems)]
        import copy

        cert = copy.deepcopy(base)
        blk = cert.blocks[r.randrange(len(cert.blocks))]
        n = blk.dim
        i, j = r.randrange(n), r.randrange(n)
        bump = Scalar(Fraction(r.randint(1, 9), 10 ** r.randint(6, 15)))
        mode = r.random()
        if mode < 0.4:
            blk.matrix[i][j] = blk.matrix[i][j] + bump  # may break Hermiticity
        elif mode < 0.8:
            blk.matrix[i][j] = blk.matrix[i][j] + bump
            blk.matrix[j][i] = blk.matrix[i][j].conj() if i != j else blk.matrix[i][j]
        else:
            cert.lambda_rat = cert.lambda_rat + (bump.re if r.random() < 0.5 else -bump.re)
        if not verify_certificate(P, cert).valid:
            rejected += 1
    assert rejected == 50


def test_witness_verification_examples():
    bvs = VariableSet([Variable(0, "X0")])
    w = constant_sohs_witness("box", bvs, 1, Fraction(1))
    assert verify_constant_sohs(w, "box", 1)
    pvs = VariableSet([Variable(0, "P0", 0, PROJECTOR)])
    wp = constant_sohs_witness("projector", pvs, 1, Fraction(1))
    assert verify_constant_sohs(wp, "projector", 1)
    wp.q_terms.pop()
    assert not verify_constant_sohs(wp, "projector", 1)
    uvs = unipotent_varset(2)
    wu = constant_sohs_witness("unipotent", uvs, 2, Fraction(2, 3))
    assert verify_constant_sohs(wu, "unipotent", 2)
    b2 = VariableSet([Variable(0, "X0"), Variable(1, "X1"), Variable(2, "X2")])
    wb = constant_sohs_witness("ball", b2, 2, Fraction(5, 4))
    assert verify_constant_sohs(wb, "ball", 2)
    assert not verify_constant_sohs(wb, "ball", 1)


def test_verifier_reports_elapsed_and_blocks():
    P = chsh_problem()
    _, cert = emitted_certificate(P)
    rep = verify_certificate(P, cert)
    assert rep.elapsed >= 0
    assert rep.failing_block is None
