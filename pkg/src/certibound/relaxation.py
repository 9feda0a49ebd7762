"""Dense and correlative-sparse SOHS relaxation structures.

A relaxation at order d certifies ``lambda - f = sum_k v_k^* G_k v_k``
modulo the equality ideal, with one main Gram block per clique plus one
localizing block per operator inequality and a 1x1 scalar block per
moment inequality.  :func:`assemble_sdp` turns the blocks into affine
constraint data: one constraint per reduced word (up to adjoint pairing),
with the bound variable living only in the empty-word coefficient.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction

from .algebra import (
    Polynomial,
    QuotientBasis,
    RewriteSystem,
    VariableSet,
    involute_word,
    normal_form,
    quotient_basis,
)
from .errors import OrderTooLow, UncoveredMonomial, NotChordal
from .scalars import Scalar

MAXIMIZE = "maximize"
MINIMIZE = "minimize"


@dataclass
class MomentInequality:
    """Scalar-multiplier constraint <m> >= bound."""

    poly: Polynomial
    bound: Fraction


@dataclass
class NPOProblem:
    name: str
    varset: VariableSet
    rewrite: RewriteSystem
    objective: Polynomial
    sense: str = MAXIMIZE
    inequalities: list = field(default_factory=list)
    moment_inequalities: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.sense not in (MAXIMIZE, MINIMIZE):
            raise ValueError(f"unknown sense {self.sense!r}")
        f = normal_form(self.objective, self.rewrite)
        if normal_form(f.involute(), self.rewrite) != f:
            raise ValueError("objective is not Hermitian modulo the ideal")
        for g in self.inequalities:
            gn = normal_form(g, self.rewrite)
            if normal_form(gn.involute(), self.rewrite) != gn:
                raise ValueError("inequality constraint is not Hermitian")

    def canonical_objective(self) -> Polynomial:
        """Objective in the internal maximize convention, normal-formed."""
        f = normal_form(self.objective, self.rewrite)
        return f if self.sense == MAXIMIZE else f.scale(Scalar(-1))

    def user_bound(self, lam: Fraction) -> Fraction:
        """Map an internal upper bound back to the user-facing sense."""
        return lam if self.sense == MAXIMIZE else -lam


def min_relaxation_order(P: NPOProblem) -> int:
    degs = [P.objective.degree()]
    for v in P.varset:
        if v.kind != "free":
            degs.append(2)
    for pat in P.rewrite.user_rules:
        degs.append(len(pat))
    for g in P.inequalities:
        degs.append(g.degree())
    for m in P.moment_inequalities:
        degs.append(m.poly.degree())
    top = max(degs) if degs else 0
    return max((top + 1) // 2, 1)


MAIN = "main"
LOCALIZING = "localizing"
MOMENT = "moment"


@dataclass
class GramStructure:
    """Indexing basis plus the reduced-word coefficient map of one block.

    ``entries[i][j]`` lists the ``(word, coeff)`` contributions of entry
    (i, j); main blocks always have a single unit-modulus contribution
    (binomial normal forms).  ``word_index`` inverts the map and
    ``word_multiplicity`` counts entries per reduced word within this
    block (the dense-path n_I counts of the binomial fast path).
    """

    label: str
    kind: str
    basis: QuotientBasis
    clique: tuple | None = None
    constraint: Polynomial | None = None
    constraint_ref: tuple | None = None  # ("ineq"|"moment", index)
    entries: list = field(default_factory=list, repr=False)
    word_index: dict = field(default_factory=dict, repr=False)
    word_multiplicity: dict = field(default_factory=dict, repr=False)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def n_count(self, i: int, j: int) -> int:
        """Within-block n_I(alpha, beta): entries sharing this entry's word."""
        (word, _), = self.entries[i][j]
        return self.word_multiplicity[word]


def _build_entries(structure: GramStructure, R: RewriteSystem):
    words = structure.basis.words
    g = structure.constraint
    entries = []
    word_index: dict = {}
    mult: dict = {}
    for i, alpha in enumerate(words):
        a_star = involute_word(alpha)
        row = []
        for j, beta in enumerate(words):
            contrib: dict = {}
            if g is None:
                c, w = R.reduce_word(a_star + beta)
                contrib[w] = c
            else:
                for gw, gc in g.terms():
                    c, w = R.reduce_word(a_star + gw + beta)
                    s = contrib.get(w)
                    s = gc * c if s is None else s + gc * c
                    if s.is_zero():
                        contrib.pop(w, None)
                    else:
                        contrib[w] = s
            cell = sorted(contrib.items(), key=lambda t: (len(t[0]), t[0]))
            row.append(cell)
            for w, c in cell:
                word_index.setdefault(w, []).append((i, j, c))
                mult[w] = mult.get(w, 0) + 1
        entries.append(row)
    structure.entries = entries
    structure.word_index = word_index
    structure.word_multiplicity = mult


def build_gram_structure(
    P: NPOProblem, d: int, clique=None, label: str = "G0"
) -> GramStructure:
    if d < min_relaxation_order(P):
        raise OrderTooLow(
            f"order {d} below minimal relaxation order {min_relaxation_order(P)}"
        )
    basis = quotient_basis(P.rewrite, d, letters=clique)
    s = GramStructure(label=label, kind=MAIN, basis=basis, clique=clique)
    _build_entries(s, P.rewrite)
    return s


def build_localizing_structure(
    P: NPOProblem, g: Polynomial, d: int, clique=None, label: str = "L", ref=None
) -> GramStructure:
    gn = normal_form(g, P.rewrite)
    if gn.degree() > 2 * d:
        raise OrderTooLow(f"constraint degree {gn.degree()} exceeds 2*{d}")
    # scalar multipliers remain truncation-valid whenever deg g <= 2d
    di = max((d - gn.degree()) // 2, 0)
    basis = quotient_basis(P.rewrite, di, letters=clique)
    s = GramStructure(
        label=label,
        kind=LOCALIZING,
        basis=basis,
        clique=clique,
        constraint=gn,
        constraint_ref=ref,
    )
    _build_entries(s, P.rewrite)
    return s


def build_moment_structure(
    P: NPOProblem, m: MomentInequality, label: str = "M", ref=None
) -> GramStructure:
    """Moment inequality <m> >= b as a scalar multiplier on (m - b)."""
    shifted = normal_form(
        m.poly + Polynomial.constant(P.varset, Scalar(-m.bound)), P.rewrite
    )
    basis = quotient_basis(P.rewrite, 0)
    s = GramStructure(
        label=label,
        kind=MOMENT,
        basis=basis,
        constraint=shifted,
        constraint_ref=ref,
    )
    _build_entries(s, P.rewrite)
    return s


# ---------------------------------------------------------------------------
# correlative sparsity


def correlation_graph(P: NPOProblem):
    """Vertices = variable ids; edges = co-occurrence in objective words
    or inside a single constraint polynomial."""
    n = len(P.varset)
    edges: set = set()
    f = P.canonical_objective()
    for w in f.support():
        ids = sorted(set(w))
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                edges.add((ids[a], ids[b]))
    pools = [normal_form(g, P.rewrite) for g in P.inequalities]
    pools += [normal_form(m.poly, P.rewrite) for m in P.moment_inequalities]
    for g in pools:
        ids = sorted({i for w in g.support() for i in w})
        for a in range(len(ids)):
            for b in range(a + 1, len(ids)):
                edges.add((ids[a], ids[b]))
    return n, edges


def _neighbors(n, edges):
    adj = {v: set() for v in range(n)}
    for a, b in edges:
        adj[a].add(b)
        adj[b].add(a)
    return adj


MIN_FILL = "min_fill"
AMALGAMATE = "amalgamate_to_dense"


def chordal_extension(graph, strategy: str = MIN_FILL):
    """Extend to a chordal supergraph; returns (n, edges)."""
    n, edges = graph
    if strategy == AMALGAMATE:
        return n, {(a, b) for a in range(n) for b in range(a + 1, n)}
    if strategy != MIN_FILL:
        raise ValueError(f"unknown chordal extension strategy {strategy!r}")
    adj = _neighbors(n, edges)
    out = set(edges)
    remaining = set(range(n))
    while remaining:
        # ties break toward the highest id: later-declared variables are
        # eliminated first, keeping early variables in the larger cliques
        best, best_fill = None, None
        for v in sorted(remaining, reverse=True):
            nb = adj[v] & remaining
            nb_list = sorted(nb)
            fill = sum(
                1
                for a in range(len(nb_list))
                for b in range(a + 1, len(nb_list))
                if nb_list[b] not in adj[nb_list[a]]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        nb_list = sorted(adj[best] & remaining)
        for a in range(len(nb_list)):
            for b in range(a + 1, len(nb_list)):
                x, y = nb_list[a], nb_list[b]
                if y not in adj[x]:
                    adj[x].add(y)
                    adj[y].add(x)
                    out.add((x, y))
        remaining.discard(best)
    return n, out


def perfect_elimination_ordering(graph):
    """A PEO via maximum cardinality search, or None if not chordal."""
    n, edges = graph
    adj = _neighbors(n, edges)
    weight = {v: 0 for v in range(n)}
    order = []
    placed = set()
    for _ in range(n):
        v = max(
            (u for u in range(n) if u not in placed),
            key=lambda u: (weight[u], -u),
        )
        order.append(v)
        placed.add(v)
        for u in adj[v]:
            if u not in placed:
                weight[u] += 1
    order.reverse()  # elimination order
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [u for u in adj[v] if pos[u] > pos[v]]
        if not later:
            continue
        parent = min(later, key=lambda u: pos[u])
        for u in later:
            if u != parent and u not in adj[parent]:
                return None
    return order


def is_chordal(graph) -> bool:
    return perfect_elimination_ordering(graph) is not None


@dataclass
class CliqueDecomposition:
    cliques: list
    constraint_assignment: list  # J_k: inequality indices per clique
    moment_assignment: list
    extension_edges: list
    strategy: str


def maximal_cliques(graph, P: NPOProblem | None = None, strategy: str = MIN_FILL):
    """Maximal cliques of a chordal graph from a PEO, plus constraint
    assignment when a problem is supplied."""
    order = perfect_elimination_ordering(graph)
    if order is None:
        raise NotChordal("input graph is not chordal")
    n, edges = graph
    adj = _neighbors(n, edges)
    pos = {v: i for i, v in enumerate(order)}
    candidates = []
    for v in order:
        c = tuple(sorted([v] + [u for u in adj[v] if pos[u] > pos[v]]))
        candidates.append(c)
    candidates.sort(key=lambda c: (-len(c), c))
    cliques = []
    for c in candidates:
        cs = set(c)
        if not any(cs < set(k) or cs == set(k) for k in cliques):
            cliques.append(c)
    cliques.sort()
    assignment = [[] for _ in cliques]
    moments = [[] for _ in cliques]
    if P is not None:
        for gi, g in enumerate(P.inequalities):
            ids = {i for w in normal_form(g, P.rewrite).support() for i in w}
            k = _containing_clique(cliques, ids)
            assignment[k].append(gi)
        for mi, m in enumerate(P.moment_inequalities):
            ids = {i for w in normal_form(m.poly, P.rewrite).support() for i in w}
            k = _containing_clique(cliques, ids)
            moments[k].append(mi)
    return CliqueDecomposition(
        cliques=cliques,
        constraint_assignment=assignment,
        moment_assignment=moments,
        extension_edges=sorted(edges),
        strategy=strategy,
    )


def _containing_clique(cliques, ids) -> int:
    for k, c in enumerate(cliques):
        if ids <= set(c):
            return k
    raise UncoveredMonomial(f"no clique contains variables {sorted(ids)}")


def build_structures(
    P: NPOProblem, d: int, sparse: bool = False, strategy: str = MIN_FILL
):
    """All Gram blocks of the order-d relaxation (dense or sparse)."""
    structures = []
    decomposition = None
    if not sparse:
        structures.append(build_gram_structure(P, d, label="G0"))
        for gi, g in enumerate(P.inequalities):
            structures.append(
                build_localizing_structure(
                    P, g, d, label=f"L{gi}", ref=("ineq", gi)
                )
            )
        for mi, m in enumerate(P.moment_inequalities):
            structures.append(
                build_moment_structure(P, m, label=f"M{mi}", ref=("moment", mi))
            )
    else:
        graph = correlation_graph(P)
        ext = chordal_extension(graph, strategy)
        decomposition = maximal_cliques(ext, P, strategy)
        for k, clique in enumerate(decomposition.cliques):
            structures.append(
                build_gram_structure(P, d, clique=clique, label=f"G0.{k}")
            )
            for gi in decomposition.constraint_assignment[k]:
                structures.append(
                    build_localizing_structure(
                        P,
                        P.inequalities[gi],
                        d,
                        clique=decomposition.cliques[k],
                        label=f"L{gi}.{k}",
                        ref=("ineq", gi),
                    )
                )
        for mi, m in enumerate(P.moment_inequalities):
            structures.append(
                build_moment_structure(P, m, label=f"M{mi}", ref=("moment", mi))
            )
    return structures, decomposition


# ---------------------------------------------------------------------------
# SDP assembly


@dataclass
class SDPData:
    """Affine form of the relaxation: one constraint per reduced word
    (adjoint-pair representative); the bound enters only through the
    empty-word functional, which becomes the solver objective."""

    problem_name: str
    d: int
    sparse: bool
    blocks: list  # (label, dim, kind)
    basis_words: list  # per block: tuple of words
    constraints: list  # (word, [(block, i, j, Scalar)], Scalar rhs)
    objective_entries: list  # [(block, i, j, Scalar)] for the empty word
    f_const: Scalar
    complex_field: bool
    metadata: dict = field(default_factory=dict)

    @property
    def dims(self):
        return [dim for (_, dim, _) in self.blocks]

    @property
    def num_affine_constraints(self) -> int:
        """One per reduced-word representative, the empty word included."""
        return len(self.constraints) + 1


def assemble_sdp(structures, P: NPOProblem, d: int) -> SDPData:
    f = P.canonical_objective()
    R = P.rewrite

    contributions: dict = {}
    for k, s in enumerate(structures):
        for w, cells in s.word_index.items():
            contributions.setdefault(w, []).extend(
                (k, i, j, c) for (i, j, c) in cells
            )

    for w in f.support():
        if w and w not in contributions:
            raise UncoveredMonomial(
                f"objective word {P.varset.word_str(w)} is not reachable by any block"
            )

    words = set(contributions) | set(f.support())
    representatives = []
    seen = set()
    for w in sorted(words, key=lambda w: (len(w), w)):
        if w in seen:
            continue
        _, w_adj = R.reduce_word(involute_word(w))
        seen.add(w)
        seen.add(w_adj)
        representatives.append(w)

    constraints = []
    objective_entries = None
    for w in representatives:
        cells = contributions.get(w, [])
        if not w:
            objective_entries = cells
            continue
        rhs = -f.coeff(w)
        constraints.append((w, cells, rhs))

    if objective_entries is None:
        objective_entries = []

    complex_field = any(
        not c.is_real() for (_, cells, rhs) in constraints for (_, _, _, c) in cells
    ) or any(not rhs.is_real() for (_, _, rhs) in constraints) or any(
        not c.is_real() for (_, _, _, c) in objective_entries
    )

    return SDPData(
        problem_name=P.name,
        d=d,
        sparse=any(s.clique is not None for s in structures),
        blocks=[(s.label, s.dim, s.kind) for s in structures],
        basis_words=[tuple(s.basis.words) for s in structures],
        constraints=constraints,
        objective_entries=objective_entries,
        f_const=f.coeff(()),
        complex_field=complex_field,
        metadata={
            "sense": P.sense,
            "cliques": [list(s.clique) if s.clique else None for s in structures],
            "constraint_refs": [
                list(s.constraint_ref) if s.constraint_ref else None
                for s in structures
            ],
        },
    )


# ---------------------------------------------------------------------------
# JSON export / import of SDPData


def sdp_to_json(S: SDPData, P: NPOProblem) -> dict:
    return {
        "format": "certibound-sdp/1",
        "problem": S.problem_name,
        "order": S.d,
        "sparse": S.sparse,
        "sense": S.metadata.get("sense", MAXIMIZE),
        "blocks": [
            {
                "label": label,
                "dim": dim,
                "kind": kind,
                "basis": [P.varset.word_str(w) for w in S.basis_words[k]],
                "clique": S.metadata["cliques"][k],
                "constraint_ref": S.metadata["constraint_refs"][k],
            }
            for k, (label, dim, kind) in enumerate(S.blocks)
        ],
        "f_const": str(S.f_const),
        "objective_entries": [
            [k, i, j, str(c)] for (k, i, j, c) in S.objective_entries
        ],
        "constraints": [
            {
                "word": P.varset.word_str(w),
                "rhs": str(rhs),
                "entries": [[k, i, j, str(c)] for (k, i, j, c) in cells],
            }
            for (w, cells, rhs) in S.constraints
        ],
        "complex": S.complex_field,
    }


def sdp_from_json(doc: dict, P: NPOProblem) -> SDPData:
    from .algebra import _parse_word

    blocks = [(b["label"], b["dim"], b["kind"]) for b in doc["blocks"]]
    basis_words = [
        tuple(_parse_word(t, P.varset) for t in b["basis"]) for b in doc["blocks"]
    ]
    constraints = [
        (
            _parse_word(c["word"], P.varset),
            [(k, i, j, Scalar.parse(s)) for k, i, j, s in c["entries"]],
            Scalar.parse(c["rhs"]),
        )
        for c in doc["constraints"]
    ]
    return SDPData(
        problem_name=doc["problem"],
        d=doc["order"],
        sparse=doc["sparse"],
        blocks=blocks,
        basis_words=basis_words,
        constraints=constraints,
        objective_entries=[
            (k, i, j, Scalar.parse(s)) for k, i, j, s in doc["objective_entries"]
        ],
        f_const=Scalar.parse(doc["f_const"]),
        complex_field=doc["complex"],
        metadata={
            "sense": doc.get("sense", MAXIMIZE),
            "cliques": [b.get("clique") for b in doc["blocks"]],
            "constraint_refs": [b.get("constraint_ref") for b in doc["blocks"]],
        },
    )


def save_sdp(path, S: SDPData, P: NPOProblem):
    with open(path, "w") as fh:
        json.dump(sdp_to_json(S, P), fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_sdp(path, P: NPOProblem) -> SDPData:
    with open(path) as fh:
        return sdp_from_json(json.load(fh), P)
