"""Exact rational linear algebra on Hermitian Scalar matrices.

Matrices are plain nested lists of :class:`~certibound.scalars.Scalar`.
The PSD decision is an exact LDL elimination with the zero-pivot rule
(a vanishing pivot forces its whole column to vanish); linear systems are
solved by fraction-free Bareiss elimination after clearing denominators.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import NotHermitian, SingularSolve
from .scalars import Scalar

Matrix = list  # list[list[Scalar]]


def mat_dim(M: Matrix) -> int:
    n = len(M)
    for row in M:
        if len(row) != n:
            raise ValueError("matrix is not square")
    return n


def mat_identity(n: int, scale: Fraction = Fraction(1)) -> Matrix:
    return [
        [Scalar(scale) if i == j else Scalar(0) for j in range(n)] for i in range(n)
    ]


def mat_copy(M: Matrix) -> Matrix:
    return [list(row) for row in M]


def mat_shift(M: Matrix, mu: Fraction) -> Matrix:
    """M + mu * I."""
    out = mat_copy(M)
    for i in range(len(out)):
        out[i][i] = out[i][i] + Scalar(mu)
    return out


def check_hermitian(M: Matrix):
    n = mat_dim(M)
    for i in range(n):
        if M[i][i].im:
            raise NotHermitian(f"diagonal entry ({i},{i}) is not real")
        for j in range(i):
            if M[i][j] != M[j][i].conj():
                raise NotHermitian(f"entries ({i},{j}) and ({j},{i}) are not conjugate")


def is_hermitian(M: Matrix) -> bool:
    try:
        check_hermitian(M)
        return True
    except (NotHermitian, ValueError):
        return False


def ldl_psd(M: Matrix, order=None) -> bool:
    """Exact PSD decision via LDL elimination in the given pivot order.

    Zero pivots are accepted only when the entire remaining pivot column
    vanishes; a negative pivot decides non-PSD immediately.
    """
    n = mat_dim(M)
    idx = list(order) if order is not None else list(range(n))
    if sorted(idx) != list(range(n)):
        raise ValueError("pivot order must be a permutation")
    # lower-triangle working copy in permuted order
    B = [[M[idx[i]][idx[j]] for j in range(i + 1)] for i in range(n)]
    for i in range(n):
        if B[i][i].im:
            raise NotHermitian(f"diagonal entry {idx[i]} is not real")
    for k in range(n):
        p = B[k][k].re
        if p < 0:
            return False
        if p == 0:
            for i in range(k + 1, n):
                if not B[i][k].is_zero():
                    return False
            continue
        for i in range(k + 1, n):
            bik = B[i][k]
            if bik.is_zero():
                continue
            row = B[i]
            for j in range(k + 1, i + 1):
                bjk = B[j][k]
                if not bjk.is_zero():
                    prod = bik * bjk.conj()
                    row[j] = row[j] - Scalar(prod.re / p, prod.im / p)
    return True


def gershgorin_bounds(M: Matrix) -> tuple[Fraction, Fraction]:
    """Exact rational interval containing all eigenvalues of Hermitian M."""
    n = mat_dim(M)
    if n == 0:
        return Fraction(0), Fraction(0)
    lo = hi = None
    for i in range(n):
        radius = Fraction(0)
        for j in range(n):
            if j != i:
                radius += M[i][j].abs_upper()
        d = M[i][i].re
        lo = d - radius if lo is None else min(lo, d - radius)
        hi = d + radius if hi is None else max(hi, d + radius)
    return lo, hi


def solve_linear(A: Matrix, b: list) -> list:
    """Solve A x = b exactly (fraction-free Bareiss with row pivoting).

    Raises SingularSolve with the failing column index attached.
    """
    n = mat_dim(A)
    if len(b) != n:
        raise ValueError("dimension mismatch")
    # clear denominators row-wise: scaling a row of [A|b] keeps the solution
    aug = []
    for i in range(n):
        row = list(A[i]) + [b[i]]
        den = 1
        for s in row:
            den = _lcm(den, s.re.denominator)
            den = _lcm(den, s.im.denominator)
        f = Scalar(Fraction(den))
        aug.append([s * f for s in row])
    prev = Scalar(1)
    for k in range(n):
        if aug[k][k].is_zero():
            for i in range(k + 1, n):
                if not aug[i][k].is_zero():
                    aug[k], aug[i] = aug[i], aug[k]
                    break
            else:
                err = SingularSolve(f"singular system at column {k}")
                err.column = k
                raise err
        for i in range(k + 1, n):
            for j in range(k + 1, n + 1):
                num = aug[k][k] * aug[i][j] - aug[i][k] * aug[k][j]
                aug[i][j] = num / prev
            aug[i][k] = Scalar(0)
        prev = aug[k][k]
    x = [Scalar(0)] * n
    for i in range(n - 1, -1, -1):
        acc = aug[i][n]
        for j in range(i + 1, n):
            acc = acc - aug[i][j] * x[j]
        x[i] = acc / aug[i][i]
    return x


def _lcm(a: int, b: int) -> int:
    import math

    return a * b // math.gcd(a, b)


def mat_to_complex(M: Matrix):
    import numpy as np

    n = len(M)
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(len(M[i])):
            out[i, j] = M[i][j].to_complex()
    return out
