"""Shared fixtures: standard variable sets, seeded RNGs, matrix oracles."""

import os
import random
from fractions import Fraction

import numpy as np

from certibound.algebra import (
    PAULI,
    PROJECTOR,
    UNIPOTENT,
    Polynomial,
    RewriteSystem,
    Variable,
    VariableSet,
)
from certibound.scalars import Scalar

SEED = int(os.environ.get("CERTIBOUND_SEED", "20240501"))


def rng(tag: str) -> random.Random:
    return random.Random(f"{SEED}:{tag}")


def chsh_varset() -> VariableSet:
    return VariableSet(
        [
            Variable(0, "A0", 0, UNIPOTENT),
            Variable(1, "A1", 0, UNIPOTENT),
            Variable(2, "B0", 1, UNIPOTENT),
            Variable(3, "B1", 1, UNIPOTENT),
        ]
    )


def unipotent_varset(n: int, groups=None) -> VariableSet:
    return VariableSet(
        [
            Variable(i, f"X{i}", groups[i] if groups else 0, UNIPOTENT)
            for i in range(n)
        ]
    )


def projector_varset(n: int) -> VariableSet:
    return VariableSet([Variable(i, f"P{i}", 0, PROJECTOR) for i in range(n)])


def pauli_varset(sites: int) -> VariableSet:
    out = []
    for s in range(sites):
        for a, name in enumerate("xyz"):
            out.append(Variable(3 * s + a, f"{name}{s}", s, PAULI, a))
    return VariableSet(out)


PAULI_MATS = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def pauli_word_matrix(word, sites: int) -> np.ndarray:
    """Evaluate a Pauli word (ids = 3*site + axis) as a 2^sites matrix."""
    acc = np.eye(2**sites, dtype=complex)
    for vid in word:
        site, axis = divmod(vid, 3)
        op = np.eye(1, dtype=complex)
        for s in range(sites):
            op = np.kron(op, PAULI_MATS[axis] if s == site else np.eye(2))
        acc = acc @ op
    return acc


def random_scalar(r: random.Random, complex_ok=False) -> Scalar:
    num = Fraction(r.randint(-6, 6), r.randint(1, 6))
    if complex_ok and r.random() < 0.4:
        return Scalar(num, Fraction(r.randint(-6, 6), r.randint(1, 6)))
    return Scalar(num)


def random_polynomial(r: random.Random, varset, max_deg=3, n_terms=4, complex_ok=False):
    terms = []
    for _ in range(n_terms):
        length = r.randint(0, max_deg)
        word = tuple(r.randrange(len(varset)) for _ in range(length))
        terms.append((word, random_scalar(r, complex_ok)))
    return Polynomial(varset, terms)


def random_reduction(r: random.Random, R: RewriteSystem, word):
    """Reduce by applying applicable rewrites in random order (oracle)."""
    from certibound.algebra import _PAULI_MUL
    from certibound.scalars import I, MINUS_I, ONE

    kind = [v.kind for v in R.varset]
    group = [v.group for v in R.varset]
    axis = [v.axis for v in R.varset]
    coeff = ONE
    letters = list(word)
    while True:
        moves = []
        for i in range(len(letters) - 1):
            x, y = letters[i], letters[i + 1]
            if x == y and kind[x] in (UNIPOTENT, PAULI):
                moves.append((i, ONE, []))
            elif x == y and kind[x] == PROJECTOR:
                moves.append((i, ONE, [x]))
            elif kind[x] == PAULI and kind[y] == PAULI and group[x] == group[y]:
                sign, c_axis = _PAULI_MUL[(axis[x], axis[y])]
                moves.append((i, I if sign > 0 else MINUS_I, [3 * group[x] + c_axis]))
            elif group[x] != group[y] and (group[y], y) < (group[x], x):
                moves.append((i, ONE, [y, x]))
        for pos in range(len(letters)):
            for pattern, (c, repl) in R.user_rules.items():
                if tuple(letters[pos : pos + len(pattern)]) == pattern:
                    moves.append((pos, c, list(repl), len(pattern)))
        if not moves:
            return coeff, tuple(letters)
        mv = r.choice(moves)
        if len(mv) == 4:
            pos, c, repl, plen = mv
        else:
            pos, c, repl = mv
            plen = 2
        letters[pos : pos + plen] = repl
        coeff = coeff * c
