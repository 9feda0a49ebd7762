"""Problem generators and desk-scale exact oracles.

Two-party Bell expressions (dichotomic observables, unipotent with a
bipartite commuting partition), the tilted CHSH family, a hand-editable
catalog file format, Heisenberg J1-J2 chains over per-site Pauli
algebras, and exact diagonalization with a certified rational interval
around the ground energy.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .algebra import (
    PAULI,
    UNIPOTENT,
    Polynomial,
    RewriteSystem,
    Variable,
    VariableSet,
    parse_polynomial,
)
from .errors import DimensionMismatch, InvalidSpec, ParseError, TooLarge
from .relaxation import MAXIMIZE, MomentInequality, NPOProblem
from .scalars import Scalar, format_fraction, parse_fraction


# ---------------------------------------------------------------------------
# two-party Bell problems


@dataclass
class BellSpec:
    m_a: int
    m_b: int
    c: list  # m_a x m_b rational table
    a: list = field(default_factory=list)
    b: list = field(default_factory=list)

    def __post_init__(self):
        if not self.a:
            self.a = [Fraction(0)] * self.m_a
        if not self.b:
            self.b = [Fraction(0)] * self.m_b
        if len(self.c) != self.m_a or any(len(row) != self.m_b for row in self.c):
            raise DimensionMismatch("correlator table does not match counts")
        if len(self.a) != self.m_a or len(self.b) != self.m_b:
            raise DimensionMismatch("marginal tables do not match counts")


def chsh_spec() -> BellSpec:
    one = Fraction(1)
    return BellSpec(2, 2, [[one, one], [one, -one]])


def bell_varset(m_a: int, m_b: int) -> VariableSet:
    out = [Variable(i, f"A{i}", 0, UNIPOTENT) for i in range(m_a)]
    out += [Variable(m_a + j, f"B{j}", 1, UNIPOTENT) for j in range(m_b)]
    return VariableSet(out)


def bell_two_party(spec: BellSpec, name: str = "bell") -> NPOProblem:
    vs = bell_varset(spec.m_a, spec.m_b)
    R = RewriteSystem(vs)
    terms = []
    for i in range(spec.m_a):
        for j in range(spec.m_b):
            if spec.c[i][j]:
                terms.append(((i, spec.m_a + j), Scalar(spec.c[i][j])))
    for i in range(spec.m_a):
        if spec.a[i]:
            terms.append(((i,), Scalar(spec.a[i])))
    for j in range(spec.m_b):
        if spec.b[j]:
            terms.append(((spec.m_a + j,), Scalar(spec.b[j])))
    f = Polynomial(vs, terms)
    return NPOProblem(name, vs, R, f, sense=MAXIMIZE)


def tilted_chsh(theta_a: Fraction, theta_b: Fraction) -> NPOProblem:
    """sum_xy (-1)^(x y) <A_x B_y> + theta_a <A_0> + theta_b <B_0>."""
    one = Fraction(1)
    spec = BellSpec(
        2,
        2,
        [[one, one], [one, -one]],
        a=[Fraction(theta_a), Fraction(0)],
        b=[Fraction(theta_b), Fraction(0)],
    )
    return bell_two_party(spec, name=f"tilted_chsh_{theta_a}_{theta_b}")


def classical_bound(spec: BellSpec) -> Fraction:
    """Brute force over deterministic +-1 strategies (the local bound)."""
    best = None
    for alphas in itertools.product((1, -1), repeat=spec.m_a):
        for betas in itertools.product((1, -1), repeat=spec.m_b):
            v = Fraction(0)
            for i in range(spec.m_a):
                for j in range(spec.m_b):
                    v += spec.c[i][j] * alphas[i] * betas[j]
            for i in range(spec.m_a):
                v += spec.a[i] * alphas[i]
            for j in range(spec.m_b):
                v += spec.b[j] * betas[j]
            best = v if best is None else max(best, v)
    return best


# ---------------------------------------------------------------------------
# catalog files: one inequality per line,
#   name ; m_A m_B ; c row-major ; a ; b


def load_catalog(path) -> list:
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(";")]
            if len(parts) != 5:
                raise ParseError("expected 5 ';'-separated fields", line=lineno)
            name, counts, c_text, a_text, b_text = parts
            try:
                m_a, m_b = (int(t) for t in counts.split())
                c_vals = [parse_fraction(t) for t in c_text.split()]
                a_vals = [parse_fraction(t) for t in a_text.split()] if a_text else []
                b_vals = [parse_fraction(t) for t in b_text.split()] if b_text else []
                if len(c_vals) != m_a * m_b:
                    raise ValueError(f"need {m_a * m_b} correlator entries")
                c = [c_vals[i * m_b : (i + 1) * m_b] for i in range(m_a)]
                spec = BellSpec(m_a, m_b, c, a_vals, b_vals)
            except (ValueError, DimensionMismatch, ParseError) as exc:
                raise ParseError(str(exc), line=lineno) from exc
            out.append((name, spec))
    return out


def save_catalog(path, entries):
    with open(path, "w") as fh:
        fh.write("# name ; m_A m_B ; c row-major ; a ; b\n")
        for name, spec in entries:
            c_flat = " ".join(
                format_fraction(x) for row in spec.c for x in row
            )
            a_text = " ".join(format_fraction(x) for x in spec.a)
            b_text = " ".join(format_fraction(x) for x in spec.b)
            fh.write(
                f"{name} ; {spec.m_a} {spec.m_b} ; {c_flat} ; {a_text} ; {b_text}\n"
            )


# ---------------------------------------------------------------------------
# Heisenberg J1-J2 chains


@dataclass
class ChainSpec:
    n: int
    j2: Fraction = Fraction(0)
    periodic: bool = True

    def __post_init__(self):
        self.j2 = Fraction(self.j2)
        if self.n < 2:
            raise InvalidSpec("need at least two sites")
        if self.j2 and self.n < 3:
            raise InvalidSpec("second-neighbour coupling needs at least 3 sites")


def pauli_varset(n_sites: int) -> VariableSet:
    out = []
    for s in range(n_sites):
        for a, axis in enumerate("xyz"):
            out.append(Variable(3 * s + a, f"{axis}{s}", s, PAULI, a))
    return VariableSet(out)


def _chain_pairs(spec: ChainSpec):
    pairs = []
    rng1 = range(spec.n) if spec.periodic else range(spec.n - 1)
    for i in rng1:
        pairs.append((i, (i + 1) % spec.n, Fraction(1, 4)))
    if spec.j2:
        rng2 = range(spec.n) if spec.periodic else range(spec.n - 2)
        for i in rng2:
            pairs.append((i, (i + 2) % spec.n, spec.j2 / 4))
    return pairs


def hamiltonian_polynomial(spec: ChainSpec, vs: VariableSet | None = None) -> Polynomial:
    """H = 1/4 sum_i sum_a (s_i^a s_(i+1)^a + J2 s_i^a s_(i+2)^a)."""
    vs = vs or pauli_varset(spec.n)
    h = Polynomial.zero(vs)
    for i, j, coef in _chain_pairs(spec):
        for a in range(3):
            w = tuple(sorted((3 * i + a, 3 * j + a)))
            h = h + Polynomial(vs, {w: Scalar(coef)})
    return h


def heisenberg_chain(spec: ChainSpec) -> NPOProblem:
    """Ground-state problem: maximize -H/N (upper bounds on -H/N are
    lower bounds on the ground energy density)."""
    vs = pauli_varset(spec.n)
    R = RewriteSystem(vs)
    h = hamiltonian_polynomial(spec, vs)
    f = h.scale(Scalar(Fraction(-1, spec.n)))
    name = f"heisenberg_n{spec.n}_j2_{spec.j2.numerator}_{spec.j2.denominator}"
    return NPOProblem(
        name,
        vs,
        R,
        f,
        sense=MAXIMIZE,
        metadata={
            "kind": "heisenberg_chain",
            "n_sites": spec.n,
            "j2": format_fraction(spec.j2),
            "periodic": spec.periodic,
            "majumdar_ghosh": spec.j2 == Fraction(1, 2),
            "bound_scale": -spec.n,  # E0 >= -N * lambda_rat
        },
    )


def heisenberg_observable(
    spec: ChainSpec,
    observable: Polynomial,
    e_low: Fraction,
    e_high: Fraction,
    sense: str = "lower",
) -> NPOProblem:
    """Bound a ground-state observable under an exact energy window:
    <H> >= e_low and <H> <= e_high enter as scalar-multiplier moment
    constraints."""
    vs = observable.varset
    R = RewriteSystem(vs)
    h = hamiltonian_polynomial(spec, vs)
    sign = Fraction(-1) if sense == "lower" else Fraction(1)
    f = observable.scale(Scalar(sign / spec.n))
    moments = [
        MomentInequality(h, Fraction(e_low)),
        MomentInequality(h.scale(Scalar(-1)), -Fraction(e_high)),
    ]
    return NPOProblem(
        f"heisenberg_obs_n{spec.n}",
        vs,
        R,
        f,
        sense=MAXIMIZE,
        moment_inequalities=moments,
        metadata={"kind": "heisenberg_observable", "observable_sense": sense},
    )


# ---------------------------------------------------------------------------
# exact diagonalization (N <= 8)

_PAULI_FLOAT = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


@dataclass
class GroundEnergyInterval:
    low: Fraction
    high: Fraction
    degeneracy: int

    @property
    def width(self) -> Fraction:
        return self.high - self.low


def _dense_hamiltonian(spec: ChainSpec) -> np.ndarray:
    dim = 2**spec.n
    H = np.zeros((dim, dim), dtype=complex)
    for i, j, coef in _chain_pairs(spec):
        for a in range(3):
            op = np.eye(1, dtype=complex)
            for s in range(spec.n):
                op = np.kron(op, _PAULI_FLOAT[a] if s in (i, j) else np.eye(2))
            H += float(coef) * op
    return H


def _exact_hamiltonian(spec: ChainSpec):
    """The 2^N x 2^N Hamiltonian with exact rational entries."""
    dim = 2**spec.n
    rows = [[Scalar(0)] * dim for _ in range(dim)]
    pauli_exact = [
        [[Scalar(0), Scalar(1)], [Scalar(1), Scalar(0)]],
        [[Scalar(0), Scalar(0, -1)], [Scalar(0, 1), Scalar(0)]],
        [[Scalar(1), Scalar(0)], [Scalar(0), Scalar(-1)]],
    ]
    eye2 = [[Scalar(1), Scalar(0)], [Scalar(0), Scalar(1)]]
    for i, j, coef in _chain_pairs(spec):
        for a in range(3):
            term = [[Scalar(Fraction(coef))]]
            for s in range(spec.n):
                factor = pauli_exact[a] if s in (i, j) else eye2
                term = _kron(term, factor)
            for r in range(dim):
                for c in range(dim):
                    if not term[r][c].is_zero():
                        rows[r][c] = rows[r][c] + term[r][c]
    return rows


def _kron(A, B):
    ra, ca = len(A), len(A[0])
    rb, cb = len(B), len(B[0])
    out = [[Scalar(0)] * (ca * cb) for _ in range(ra * rb)]
    for i in range(ra):
        for j in range(ca):
            if A[i][j].is_zero():
                continue
            for k in range(rb):
                for l in range(cb):
                    if not B[k][l].is_zero():
                        out[i * rb + k][j * cb + l] = A[i][j] * B[k][l]
    return out


def exact_diagonalization(
    spec: ChainSpec, width: Fraction = Fraction(1, 10**6)
) -> GroundEnergyInterval:
    """Certified rational interval around the ground energy.

    A float eigensolve locates E0; the bracket is then proven by exact
    rational bisection (LDL PSD checks on H - mu*I) on the exact
    Hamiltonian, so the returned interval is rigorous.
    """
    if spec.n > 8:
        raise TooLarge("exact diagonalization is desk-scale only (N <= 8)")
    from .certify import min_eig_lower_bound

    Hf = _dense_hamiltonian(spec)
    evals = np.linalg.eigvalsh(0.5 * (Hf + Hf.conj().T))
    e0 = float(evals[0])
    degeneracy = int(np.sum(np.abs(evals - e0) <= 1e-8))
    H = _exact_hamiltonian(spec)
    sb = min_eig_lower_bound(H, Fraction(width), hint=e0)
    return GroundEnergyInterval(
        low=sb.mu_low, high=sb.mu_low + sb.gap, degeneracy=degeneracy
    )


# ---------------------------------------------------------------------------
# problem files


def problem_to_json(P: NPOProblem) -> dict:
    return {
        "format": "certibound-problem/1",
        "name": P.name,
        "sense": P.sense,
        "variables": [
            {"label": v.label, "group": v.group, "kind": v.kind, "axis": v.axis}
            for v in P.varset
        ],
        "objective": str(P.objective),
        "inequalities": [str(g) for g in P.inequalities],
        "moment_inequalities": [
            {"poly": str(m.poly), "bound": format_fraction(m.bound)}
            for m in P.moment_inequalities
        ],
        "user_rules": [
            {
                "pattern": P.varset.word_str(pat),
                "coeff": str(c),
                "replacement": P.varset.word_str(repl),
            }
            for pat, (c, repl) in P.rewrite.user_rules.items()
        ],
        "metadata": P.metadata,
    }


def save_problem(path, P: NPOProblem):
    with open(path, "w") as fh:
        json.dump(problem_to_json(P), fh, indent=1, sort_keys=True)
        fh.write("\n")


def problem_from_json(doc: dict) -> NPOProblem:
    if doc.get("format") != "certibound-problem/1":
        raise ParseError("not a certibound problem file")
    variables = [
        Variable(
            i,
            v["label"],
            int(v.get("group", 0)),
            v.get("kind", "free"),
            v.get("axis"),
        )
        for i, v in enumerate(doc["variables"])
    ]
    vs = VariableSet(variables)
    from .algebra import _parse_word

    user_rules = {
        tuple(_parse_word(r["pattern"], vs)): (
            Scalar.parse(r["coeff"]),
            tuple(_parse_word(r["replacement"], vs)),
        )
        for r in doc.get("user_rules", [])
    }
    R = RewriteSystem(vs, user_rules=user_rules or None)
    objective = parse_polynomial(doc["objective"], vs)
    inequalities = [parse_polynomial(t, vs) for t in doc.get("inequalities", [])]
    moments = [
        MomentInequality(parse_polynomial(m["poly"], vs), parse_fraction(m["bound"]))
        for m in doc.get("moment_inequalities", [])
    ]
    return NPOProblem(
        doc["name"],
        vs,
        R,
        objective,
        sense=doc.get("sense", MAXIMIZE),
        inequalities=inequalities,
        moment_inequalities=moments,
        metadata=doc.get("metadata", {}),
    )


def load_problem(path) -> NPOProblem:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from exc
    return problem_from_json(doc)
