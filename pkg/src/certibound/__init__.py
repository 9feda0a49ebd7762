"""certibound: exact rational certification of SOHS/NPA semidefinite bounds.

Pipeline: build a dense or correlative-sparse SOHS relaxation of a
non-commutative polynomial optimization problem, solve it numerically at
desk scale, round the floating Gram data to rationals, project it
Frobenius-optimally back onto the certificate identity, and lift (or
tighten) the result into an exactly verified rational bound.
"""

__version__ = "0.1.0"

from .scalars import Scalar
from .algebra import (
    Polynomial,
    QuotientBasis,
    RewriteSystem,
    Variable,
    VariableSet,
    dense_basis_size,
    normal_form,
    parse_polynomial,
    quotient_basis,
)
from .relaxation import (
    MomentInequality,
    NPOProblem,
    SDPData,
    assemble_sdp,
    build_structures,
    min_relaxation_order,
)
from .sdpsolve import NumericSolution, SolverConfig, certificate_error, solve
from .rationalize import PreCertificate, RoundingConfig, rationalize_solution
from .certify import CertifiedBound, CertifyOptions, certify_precertificate
from .verifier import VerificationReport, verify_certificate

__all__ = [
    "Scalar",
    "Polynomial",
    "QuotientBasis",
    "RewriteSystem",
    "Variable",
    "VariableSet",
    "dense_basis_size",
    "normal_form",
    "parse_polynomial",
    "quotient_basis",
    "MomentInequality",
    "NPOProblem",
    "SDPData",
    "assemble_sdp",
    "build_structures",
    "min_relaxation_order",
    "NumericSolution",
    "SolverConfig",
    "certificate_error",
    "solve",
    "PreCertificate",
    "RoundingConfig",
    "rationalize_solution",
    "CertifiedBound",
    "CertifyOptions",
    "certify_precertificate",
    "VerificationReport",
    "verify_certificate",
    "__version__",
]
