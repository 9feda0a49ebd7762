"""Non-commutative *-polynomial algebra with binomial normal forms.

Variables are self-adjoint letters; a word is a tuple of variable ids and
the empty word is the identity monomial.  A :class:`RewriteSystem` holds
the equality constraints of a problem as binomial rules (every word
reduces to a single word times a unit-modulus scalar):

* unipotent letters, ``x*x -> 1``
* projector letters, ``x*x -> x``
* Pauli site letters, ``s^a s^a -> 1`` and ``s^a s^b -> i eps_abc s^c``
* commuting partition: letters in distinct groups commute and are sorted
  by ``(group, id)``
* optional user binomial rules, checked for local confluence

Words are ordered graded-lexicographically: by length, then by the letter
id sequence.  This fixes the canonical quotient basis returned by
:func:`quotient_basis`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator

from .errors import NonConfluentRules, ParseError, UnknownVariable
from .scalars import MINUS_I, ONE, I, Scalar

Word = tuple  # tuple of variable ids; () is the identity monomial

# letter kinds
FREE = "free"
UNIPOTENT = "unipotent"
PROJECTOR = "projector"
PAULI = "pauli"

# Pauli axis products: (a, b) -> (sign of i, c) for a != b, axes x=0 y=1 z=2
_PAULI_MUL = {
    (0, 1): (1, 2),
    (1, 2): (1, 0),
    (2, 0): (1, 1),
    (1, 0): (-1, 2),
    (2, 1): (-1, 0),
    (0, 2): (-1, 1),
}


@dataclass(frozen=True)
class Variable:
    id: int
    label: str
    group: int = 0  # commuting-partition group / Pauli site
    kind: str = FREE
    axis: int | None = None  # Pauli axis 0/1/2


class VariableSet:
    """Dense, ordered set of declared variables with unique labels."""

    def __init__(self, variables: Iterable[Variable]):
        self.variables = tuple(variables)
        for i, v in enumerate(self.variables):
            if v.id != i:
                raise ValueError(f"variable ids must be dense 0..n-1, got {v.id} at {i}")
        self.by_label = {v.label: v for v in self.variables}
        if len(self.by_label) != len(self.variables):
            raise ValueError("duplicate variable labels")

    def __len__(self):
        return len(self.variables)

    def __iter__(self) -> Iterator[Variable]:
        return iter(self.variables)

    def __getitem__(self, i: int) -> Variable:
        return self.variables[i]

    def __eq__(self, other):
        return isinstance(other, VariableSet) and self.variables == other.variables

    def id_of(self, label: str) -> int:
        try:
            return self.by_label[label].id
        except KeyError:
            raise UnknownVariable(f"undeclared variable {label!r}") from None

    def word_str(self, word: Word) -> str:
        if not word:
            return "1"
        return "*".join(self.variables[i].label for i in word)


def involute_word(word: Word) -> Word:
    """Involution on words: reverse letter order (letters self-adjoint)."""
    return word[::-1]


class RewriteSystem:
    """Binomial normal-form engine over a :class:`VariableSet`."""

    def __init__(self, varset: VariableSet, user_rules=None):
        self.varset = varset
        self._kind = [v.kind for v in varset]
        self._group = [v.group for v in varset]
        self._axis = [v.axis for v in varset]
        self.user_rules: dict[Word, tuple[Scalar, Word]] = {}
        if user_rules:
            for pattern, (coeff, repl) in user_rules.items():
                self._add_user_rule(tuple(pattern), coeff, tuple(repl))
            self._check_local_confluence()

    # -- rule management -------------------------------------------------
    def _add_user_rule(self, pattern: Word, coeff: Scalar, repl: Word):
        for i in pattern + repl:
            if not 0 <= i < len(self.varset):
                raise UnknownVariable(f"rule references undeclared variable id {i}")
        if not pattern:
            raise ValueError("empty rule pattern")
        if coeff.abs2() != 1:
            raise ValueError(f"rule coefficient must have unit modulus, got {coeff}")
        if len(repl) > len(pattern) or (len(repl) == len(pattern) and repl >= pattern):
            raise ValueError("rules must be strictly decreasing in graded-lex order")
        self.user_rules[pattern] = (coeff, repl)

    def _all_patterns(self):
        """User patterns plus the built-in length-reducing pair rules."""
        pats = dict(self.user_rules)
        for v in self.varset:
            if v.kind == UNIPOTENT:
                pats.setdefault((v.id, v.id), (ONE, ()))
            elif v.kind == PROJECTOR:
                pats.setdefault((v.id, v.id), (ONE, (v.id,)))
            elif v.kind == PAULI:
                pats.setdefault((v.id, v.id), (ONE, ()))
                for w in self.varset:
                    if w.kind == PAULI and w.group == v.group and w.id != v.id:
                        sign, c_axis = _PAULI_MUL[(v.axis, w.axis)]
                        c_id = self._pauli_lookup(v.group, c_axis)
                        coeff = I if sign > 0 else MINUS_I
                        pats.setdefault((v.id, w.id), (coeff, (c_id,)))
        return pats

    def _pauli_lookup(self, site: int, axis: int) -> int:
        for v in self.varset:
            if v.kind == PAULI and v.group == site and v.axis == axis:
                return v.id
        raise UnknownVariable(f"Pauli site {site} is missing axis {axis}")

    def _check_local_confluence(self):
        """Reject user rules whose critical pairs do not join."""
        pats = self._all_patterns()
        for p1 in self.user_rules:
            for p2 in pats:
                for w in _overlaps(p1, p2):
                    results = set()
                    for pat in (p1, p2):
                        c, repl = pats[pat]
                        for pos in _positions(w, pat):
                            results.add(self._reduce_after(w, pos, pat, c, repl))
                    if len(results) > 1:
                        raise NonConfluentRules(
                            f"overlap {w} of {p1} and {p2} does not join: {results}"
                        )

    def _reduce_after(self, word: Word, pos: int, pattern: Word, coeff: Scalar, repl: Word):
        first = word[:pos] + repl + word[pos + len(pattern) :]
        c, w = self.reduce_word(first)
        return (coeff * c, w)

    # -- reduction ---------------------------------------------------------
    def reduce_word(self, word: Word) -> tuple[Scalar, Word]:
        """Fully reduce a word to ``(coeff, canonical word)``."""
        n = len(self.varset)
        for i in word:
            if not 0 <= i < n:
                raise UnknownVariable(f"undeclared variable id {i}")
        coeff = ONE
        letters = list(word)
        kind, group, axis = self._kind, self._group, self._axis
        changed = True
        while changed:
            changed = False
            i = 0
            while i < len(letters) - 1:
                x, y = letters[i], letters[i + 1]
                if x == y and kind[x] == UNIPOTENT:
                    del letters[i : i + 2]
                    changed = True
                    i = max(i - 1, 0)
                    continue
                if x == y and kind[x] == PROJECTOR:
                    del letters[i]
                    changed = True
                    i = max(i - 1, 0)
                    continue
                if kind[x] == PAULI and kind[y] == PAULI and group[x] == group[y]:
                    if x == y:
                        del letters[i : i + 2]
                    else:
                        sign, c_axis = _PAULI_MUL[(axis[x], axis[y])]
                        letters[i : i + 2] = [self._pauli_lookup(group[x], c_axis)]
                        coeff = coeff * (I if sign > 0 else MINUS_I)
                    changed = True
                    i = max(i - 1, 0)
                    continue
                if group[x] != group[y] and (group[y], y) < (group[x], x):
                    letters[i], letters[i + 1] = y, x
                    changed = True
                    i = max(i - 1, 0)
                    continue
                i += 1
            if self.user_rules:
                for pos in range(len(letters)):
                    for pattern, (c, repl) in self.user_rules.items():
                        if tuple(letters[pos : pos + len(pattern)]) == pattern:
                            letters[pos : pos + len(pattern)] = list(repl)
                            coeff = coeff * c
                            changed = True
                            break
                    if changed:
                        break
        return coeff, tuple(letters)

    def is_reduced(self, word: Word) -> bool:
        c, w = self.reduce_word(word)
        return w == word and c.is_one()

    def all_unipotent(self) -> bool:
        """True when every letter squares to the identity (Pauli included)."""
        return all(k in (UNIPOTENT, PAULI) for k in self._kind) and len(self.varset) > 0

    def all_projector(self) -> bool:
        return all(k == PROJECTOR for k in self._kind) and len(self.varset) > 0


def _positions(word: Word, pattern: Word):
    return [
        pos
        for pos in range(len(word) - len(pattern) + 1)
        if word[pos : pos + len(pattern)] == pattern
    ]


def _overlaps(p1: Word, p2: Word):
    """Critical-pair overlap words of two patterns (length <= len p1 + p2)."""
    out = set()
    for k in range(1, min(len(p1), len(p2)) + 1):
        if p1[-k:] == p2[:k]:
            out.add(p1 + p2[k:])
        if p2[-k:] == p1[:k]:
            out.add(p2 + p1[k:])
    for pos in range(len(p1) - len(p2) + 1):
        if p1[pos : pos + len(p2)] == p2:
            out.add(p1)
    for pos in range(len(p2) - len(p1) + 1):
        if p2[pos : pos + len(p1)] == p1:
            out.add(p2)
    return out


class Polynomial:
    """Field-linear combination of words with Scalar coefficients.

    Zero coefficients are never stored.  Instances are treated as
    immutable; all operations return new polynomials.
    """

    __slots__ = ("varset", "_terms")

    def __init__(self, varset: VariableSet, terms=None):
        self.varset = varset
        self._terms: dict[Word, Scalar] = {}
        if terms:
            n = len(varset)
            for w, c in terms.items() if isinstance(terms, dict) else terms:
                for i in w:
                    if not 0 <= i < n:
                        raise UnknownVariable(f"undeclared variable id {i}")
                if not c.is_zero():
                    acc = self._terms.get(w)
                    s = c if acc is None else acc + c
                    if s.is_zero():
                        self._terms.pop(w, None)
                    else:
                        self._terms[w] = s

    # -- inspection --------------------------------------------------------
    def terms(self) -> Iterator[tuple[Word, Scalar]]:
        return iter(sorted(self._terms.items(), key=lambda t: (len(t[0]), t[0])))

    def coeff(self, word: Word) -> Scalar:
        return self._terms.get(tuple(word), Scalar(0))

    def support(self) -> list[Word]:
        return sorted(self._terms, key=lambda w: (len(w), w))

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.varset == other.varset
            and self._terms == other._terms
        )

    def __hash__(self):
        return hash(frozenset(self._terms.items()))

    # -- ring operations -----------------------------------------------------
    def _binary_check(self, other: "Polynomial"):
        if self.varset != other.varset:
            raise UnknownVariable("polynomials over different variable sets")

    def __add__(self, other: "Polynomial") -> "Polynomial":
        self._binary_check(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            s = out.get(w)
            s = c if s is None else s + c
            if s.is_zero():
                out.pop(w, None)
            else:
                out[w] = s
        return Polynomial._raw(self.varset, out)

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + other.scale(Scalar(-1))

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        self._binary_check(other)
        out: dict[Word, Scalar] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 + w2
                c = c1 * c2
                s = out.get(w)
                s = c if s is None else s + c
                if s.is_zero():
                    out.pop(w, None)
                else:
                    out[w] = s
        return Polynomial._raw(self.varset, out)

    def scale(self, c: Scalar) -> "Polynomial":
        if c.is_zero():
            return Polynomial._raw(self.varset, {})
        return Polynomial._raw(self.varset, {w: x * c for w, x in self._terms.items()})

    def involute(self) -> "Polynomial":
        return Polynomial._raw(
            self.varset, {w[::-1]: c.conj() for w, c in self._terms.items()}
        )

    @classmethod
    def _raw(cls, varset, terms: dict) -> "Polynomial":
        p = cls.__new__(cls)
        p.varset = varset
        p._terms = terms
        return p

    @classmethod
    def zero(cls, varset) -> "Polynomial":
        return cls._raw(varset, {})

    @classmethod
    def constant(cls, varset, c: Scalar) -> "Polynomial":
        return cls._raw(varset, {} if c.is_zero() else {(): c})

    @classmethod
    def monomial(cls, varset, word: Word, c: Scalar = ONE) -> "Polynomial":
        return cls(varset, {tuple(word): c})

    # -- text format -----------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for w, c in self.terms():
            parts.append(f"{c} * {self.varset.word_str(w)}")
        return " + ".join(parts)

    def __repr__(self):
        return f"Polynomial({self})"


def normal_form(p: Polynomial, R: RewriteSystem) -> Polynomial:
    """Reduce every word of ``p``; the result is a fixed point of ``R``."""
    if p.varset != R.varset:
        raise UnknownVariable("polynomial and rewrite system disagree on variables")
    out: dict[Word, Scalar] = {}
    for w, c in p._terms.items():
        rc, rw = R.reduce_word(w)
        s = out.get(rw)
        s = c * rc if s is None else s + c * rc
        if s.is_zero():
            out.pop(rw, None)
        else:
            out[rw] = s
    return Polynomial._raw(p.varset, out)


def is_hermitian(p: Polynomial, R: RewriteSystem) -> bool:
    q = normal_form(p, R)
    return q == normal_form(q.involute(), R)


@dataclass(frozen=True)
class QuotientBasis:
    """Canonical reduced words up to a degree, in graded-lex order."""

    varset: VariableSet
    degree: int
    words: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self):
        return len(self.words)

    def __iter__(self):
        return iter(self.words)


def quotient_basis(R: RewriteSystem, d: int, letters=None) -> QuotientBasis:
    """All distinct reduced words of degree <= d over ``R``'s variables.

    ``letters`` restricts generation to a variable subset (clique bases);
    reduction still happens in the full quotient.
    """
    if d < 0:
        raise ValueError("degree must be >= 0")
    varset = R.varset
    ids = sorted(letters) if letters is not None else [v.id for v in varset]
    for i in ids:
        if not 0 <= i < len(varset):
            raise UnknownVariable(f"undeclared variable id {i}")
    words: list[Word] = [()]
    if R.user_rules:
        # user rules may break prefix-closure of canonical words; enumerate
        seen = {()}
        frontier = [()]
        for _ in range(d):
            nxt = []
            for w in frontier:
                for i in ids:
                    nxt.append(w + (i,))
            frontier = nxt
            level = set()
            for w in frontier:
                _, red = R.reduce_word(w)
                if red not in seen:
                    seen.add(red)
                    level.add(red)
            words.extend(sorted(level, key=lambda w: (len(w), w)))
        words = sorted(set(words), key=lambda w: (len(w), w))
    else:
        prev = [()]
        for _ in range(d):
            level = set()
            for w in prev:
                for i in ids:
                    cand = w + (i,)
                    c, red = R.reduce_word(cand)
                    if red == cand and c.is_one():
                        level.add(cand)
            prev = sorted(level)
            words.extend(prev)
    return QuotientBasis(varset, d, tuple(words), {w: k for k, w in enumerate(words)})


def dense_basis_size(n: int, d: int) -> int:
    """dim of the free algebra truncated at degree d: 1 + n + ... + n^d."""
    if n < 1:
        raise ValueError("need at least one variable")
    if d < 0:
        raise ValueError("degree must be >= 0")
    if n == 1:
        return d + 1
    return (n ** (d + 1) - 1) // (n - 1)


# -- polynomial text format ------------------------------------------------
#
# terms joined by top-level `+` / `-`; each term is `coeff * w1*w2*...`
# with rational coefficients `p/q` or Gaussian rationals `(p/q+r/s i)`.
# The identity word is written `1`; a bare coefficient means coeff * 1.


def parse_polynomial(text: str, varset: VariableSet) -> Polynomial:
    chunks = _split_terms(text)
    if not chunks:
        raise ParseError(f"empty polynomial text: {text!r}")
    terms: list[tuple[Word, Scalar]] = []
    for sign, chunk in chunks:
        chunk = chunk.strip()
        if not chunk:
            raise ParseError(f"empty term in {text!r}")
        if "*" in chunk and not chunk.startswith("("):
            head, _, tail = chunk.partition("*")
        elif chunk.startswith("("):
            close = chunk.index(")")
            head = chunk[: close + 1]
            tail = chunk[close + 1 :].lstrip()
            if tail.startswith("*"):
                tail = tail[1:]
        else:
            head, tail = chunk, ""
        head = head.strip()
        tail = tail.strip()
        if _looks_like_scalar(head):
            coeff = Scalar.parse(head)
            word_text = tail if tail else "1"
        else:
            coeff = ONE
            word_text = chunk
        word = _parse_word(word_text, varset)
        if sign < 0:
            coeff = -coeff
        terms.append((word, coeff))
    return Polynomial(varset, terms)


def _looks_like_scalar(tok: str) -> bool:
    return bool(tok) and (tok[0].isdigit() or tok[0] in "+-(" or tok == "i")


def _parse_word(text: str, varset: VariableSet) -> Word:
    text = text.strip()
    if text in ("1", ""):
        return ()
    letters = []
    for part in text.split("*"):
        part = part.strip()
        if part == "1":
            continue
        letters.append(varset.id_of(part))
    return tuple(letters)


def _split_terms(text: str):
    """Split on top-level + and - (keeping parenthesised scalars intact)."""
    out = []
    depth = 0
    cur = []
    sign = 1
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
            if depth < 0:
                raise ParseError(f"unbalanced parentheses in {text!r}")
        if depth == 0 and ch in "+-":
            if "".join(cur).strip():
                out.append((sign, "".join(cur)))
                cur = []
                sign = 1 if ch == "+" else -1
            else:
                sign *= 1 if ch == "+" else -1
            continue
        cur.append(ch)
    if depth != 0:
        raise ParseError(f"unbalanced parentheses in {text!r}")
    if "".join(cur).strip():
        out.append((sign, "".join(cur)))
    return out


def format_polynomial(p: Polynomial) -> str:
    return str(p)
