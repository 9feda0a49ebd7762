"""Desk-scale dense SDP solving and numeric certificate handling.

The built-in solver is a primal-dual path-following method with
Nesterov-Todd scaling on dense blocks, solving

    min <C, M>   s.t.  <A_j, M> = b_j,  M >= 0 (block diagonal)

where the data comes from :class:`~certibound.relaxation.SDPData` with
the bound variable eliminated into the objective (the empty-word
functional).  Complex Hermitian blocks are handled through the standard
real-symmetric embedding of twice the dimension.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NumericalFailure, ParseError, TooLarge
from .relaxation import MOMENT, SDPData

OPTIMAL = "optimal"
FEASIBLE_ONLY = "feasible_only"
FAILED = "failed"

MAX_TOTAL_DIM = 400  # desk scale


@dataclass
class SolverConfig:
    feas_tol: float = 1e-9
    gap_tol: float = 1e-9
    max_iter: int = 200
    init_scale: float = 1.0

    def __post_init__(self):
        if self.feas_tol <= 0 or self.gap_tol <= 0:
            raise ValueError("tolerances must be positive")


@dataclass
class NumericSolution:
    """Float bound and Gram blocks as issued by a solver (or imported)."""

    bound: float
    gram_blocks: list  # complex Hermitian numpy arrays, one per SDPData block
    status: str
    iterations: int = 0
    residuals: dict = field(default_factory=dict)

    def moment_multipliers(self, S: SDPData) -> list:
        out = []
        for k, (_, _, kind) in enumerate(S.blocks):
            if kind == MOMENT:
                out.append(float(self.gram_blocks[k][0, 0].real))
        return out


# ---------------------------------------------------------------------------
# real embedding of the affine data


class _Realized:
    """Float, real-symmetric form of an SDPData instance."""

    def __init__(self, S: SDPData):
        self.S = S
        self.complex_field = S.complex_field
        self.dims = [2 * d if S.complex_field else d for d in S.dims]
        if sum(self.dims) > MAX_TOTAL_DIM:
            raise TooLarge(
                f"total embedded dimension {sum(self.dims)} exceeds desk scale"
            )
        m = len(S.constraints)
        rows = []  # list of (blocks->matrix) appended lazily
        rhs = []
        for w, cells, r in S.constraints:
            re_row = self._functional(cells, part="re")
            rows.append(re_row)
            rhs.append(float(r.re))
            if S.complex_field:
                im_row = self._functional(cells, part="im")
                if any(np.any(a) for a in im_row) or r.im:
                    rows.append(im_row)
                    rhs.append(float(r.im))
        self.A = rows
        self.b = np.array(rhs)
        self.C = self._functional(S.objective_entries, part="re")

    def _functional(self, cells, part: str):
        mats = [np.zeros((d, d)) for d in self.dims]
        for (k, i, j, c) in cells:
            cr, ci = float(c.re), float(c.im)
            if not self.complex_field:
                mats[k][i, j] += cr
                continue
            s = self.S.dims[k]
            if part == "re":
                mats[k][i, j] += cr / 2
                mats[k][s + i, s + j] += cr / 2
                mats[k][s + i, j] += -ci / 2
                mats[k][i, s + j] += ci / 2
            else:
                mats[k][s + i, j] += cr / 2
                mats[k][i, s + j] += -cr / 2
                mats[k][i, j] += ci / 2
                mats[k][s + i, s + j] += ci / 2
        return [0.5 * (a + a.T) for a in mats]

    def extract_gram(self, M_blocks) -> list:
        """Hermitian Gram blocks from solved embedded blocks."""
        out = []
        for k, d in enumerate(self.S.dims):
            M = M_blocks[k]
            if not self.complex_field:
                G = 0.5 * (M + M.T).astype(complex)
            else:
                X = 0.5 * (M[:d, :d] + M[d:, d:])
                Y = 0.5 * (M[d:, :d] - M[:d, d:])
                G = X + 1j * Y
                G = 0.5 * (G + G.conj().T)
            out.append(G)
        return out

    def embed_gram(self, G_blocks) -> list:
        out = []
        for k, d in enumerate(self.S.dims):
            G = np.asarray(G_blocks[k], dtype=complex)
            if not self.complex_field:
                out.append(G.real.copy())
            else:
                M = np.zeros((2 * d, 2 * d))
                M[:d, :d] = G.real
                M[d:, d:] = G.real
                M[d:, :d] = G.imag
                M[:d, d:] = -G.imag
                out.append(M)
        return out


# ---------------------------------------------------------------------------
# interior-point kernel


def _dot(Ab, Xb) -> float:
    return sum(float(np.tensordot(a, x)) for a, x in zip(Ab, Xb))


def _step_to_boundary(X, D) -> float:
    """Largest alpha with X + alpha*D psd (per block, via scaled eigmin)."""
    alpha = np.inf
    for xb, db in zip(X, D):
        L = np.linalg.cholesky(xb)
        Li = np.linalg.inv(L)
        T = Li @ db @ Li.T
        lam = np.linalg.eigvalsh(0.5 * (T + T.T))[0]
        if lam < 0:
            alpha = min(alpha, -1.0 / lam)
    return alpha


def _ipm(dims, C, A, b, cfg: SolverConfig):
    nblocks = len(dims)
    m = len(A)
    nu = sum(dims)
    X = [cfg.init_scale * np.eye(d) for d in dims]
    S = [cfg.init_scale * np.eye(d) for d in dims]
    y = np.zeros(m)

    A_stack = [
        np.stack([A[j][k] for j in range(m)]) if m else np.zeros((0, d, d))
        for k, d in enumerate(dims)
    ]

    def Aop(Xb):
        out = np.zeros(m)
        for k in range(nblocks):
            out += np.tensordot(A_stack[k], Xb[k], axes=([1, 2], [0, 1]))
        return out

    def ATop(v):
        return [np.tensordot(v, A_stack[k], axes=(0, 0)) for k in range(nblocks)]

    norm_b = 1.0 + float(np.linalg.norm(b))
    norm_C = 1.0 + float(np.sqrt(sum(np.sum(c * c) for c in C)))

    best = None
    for it in range(cfg.max_iter):
        rp = b - Aop(X)
        ATy = ATop(y)
        Rd = [C[k] - S[k] - ATy[k] for k in range(nblocks)]
        gap = sum(float(np.tensordot(X[k], S[k])) for k in range(nblocks))
        mu = gap / nu
        pobj = _dot(C, X)
        dobj = float(b @ y)
        pinf = float(np.linalg.norm(rp)) / norm_b
        dinf = float(np.sqrt(sum(np.sum(r * r) for r in Rd))) / norm_C
        relgap = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        best = (X, y, S, it, pinf, dinf, relgap)
        if pinf <= cfg.feas_tol and dinf <= cfg.feas_tol and (
            relgap <= cfg.gap_tol or mu <= cfg.gap_tol
        ):
            return OPTIMAL, X, y, S, it, (pinf, dinf, relgap)

        try:
            # NT scaling point per block
            W = []
            Sinv = []
            for k in range(nblocks):
                Lx = np.linalg.cholesky(X[k])
                Ls = np.linalg.cholesky(S[k])
                U, sig, Vt = np.linalg.svd(Ls.T @ Lx)
                R = Lx @ Vt.T * (sig ** -0.5)
                W.append(R @ R.T)
                Li = np.linalg.inv(Ls)
                Sinv.append(Li.T @ Li)

            # Schur complement H[j,l] = <A_j, W A_l W>
            H = np.zeros((m, m))
            WAW_flat = []
            for k in range(nblocks):
                waw = W[k] @ A_stack[k] @ W[k]
                WAW_flat.append(waw.reshape(m, -1))
                H += WAW_flat[k] @ A_stack[k].reshape(m, -1).T
            H = 0.5 * (H + H.T)

            def solve_H(rhs):
                jitter = 0.0
                for _ in range(4):
                    try:
                        return np.linalg.solve(H + jitter * np.eye(m), rhs)
                    except np.linalg.LinAlgError:
                        jitter = max(10 * jitter, 1e-14 * (1 + np.trace(H) / m))
                raise np.linalg.LinAlgError("Schur solve failed")

            def directions(sigma_mu):
                # dX + W dS W = sigma_mu * S^{-1} - X
                E = [sigma_mu * Sinv[k] - X[k] for k in range(nblocks)]
                rhs = rp - Aop(E)
                for k in range(nblocks):
                    rhs += WAW_flat[k] @ Rd[k].reshape(-1)
                dy = solve_H(rhs)
                dS = [Rd[k] - ATop(dy)[k] for k in range(nblocks)]
                dX = []
                for k in range(nblocks):
                    v = E[k] - W[k] @ dS[k] @ W[k]
                    dX.append(0.5 * (v + v.T))
                return dX, dy, dS

            dXa, dya, dSa = directions(0.0)
            ap = min(1.0, 0.98 * _step_to_boundary(X, dXa))
            ad = min(1.0, 0.98 * _step_to_boundary(S, dSa))
            gap_aff = sum(
                float(np.tensordot(X[k] + ap * dXa[k], S[k] + ad * dSa[k]))
                for k in range(nblocks)
            )
            sigma = min(1.0, max(1e-10, (max(gap_aff, 0.0) / gap) ** 3))
            dX, dy, dS = directions(sigma * mu)
            ap = min(1.0, 0.98 * _step_to_boundary(X, dX))
            ad = min(1.0, 0.98 * _step_to_boundary(S, dS))
            X = [X[k] + ap * dX[k] for k in range(nblocks)]
            S = [S[k] + ad * dS[k] for k in range(nblocks)]
            y = y + ad * dy
        except np.linalg.LinAlgError as exc:
            if best is None:
                raise NumericalFailure(str(exc)) from exc
            X, y, S, it, pinf, dinf, relgap = best
            return FAILED, X, y, S, it, (pinf, dinf, relgap)

    X, y, S, it, pinf, dinf, relgap = best
    return FEASIBLE_ONLY, X, y, S, it, (pinf, dinf, relgap)


def solve(S: SDPData, cfg: SolverConfig | None = None) -> NumericSolution:
    """Solve the assembled SDP; returns the bound and float Gram blocks."""
    cfg = cfg or SolverConfig()
    real = _Realized(S)
    status, Xb, y, Sb, iters, (pinf, dinf, relgap) = _ipm(
        real.dims, real.C, real.A, real.b, cfg
    )
    gram = real.extract_gram(Xb)
    bound = float(S.f_const.re) + sum(
        (c.to_complex() * gram[k][i, j]).real
        for (k, i, j, c) in S.objective_entries
    )
    min_eigs = [float(np.linalg.eigvalsh(g).min().real) if g.size else 0.0 for g in gram]
    return NumericSolution(
        bound=bound,
        gram_blocks=gram,
        status=status,
        iterations=iters,
        residuals={
            "primal_infeasibility": pinf,
            "dual_infeasibility": dinf,
            "relative_gap": relgap,
            "min_block_eigenvalues": min_eigs,
        },
    )


# ---------------------------------------------------------------------------
# solution files


def solution_to_json(sol: NumericSolution, S: SDPData) -> dict:
    real = _Realized(S)
    embedded = real.embed_gram(sol.gram_blocks)
    return {
        "format": "certibound-solution/1",
        "problem": S.problem_name,
        "order": S.d,
        "status": sol.status,
        "bound": repr(float(sol.bound)),
        "iterations": sol.iterations,
        "residuals": sol.residuals,
        "complex": S.complex_field,
        "blocks": [
            {
                "label": S.blocks[k][0],
                "dim": int(embedded[k].shape[0]),
                "entries": [repr(float(x)) for x in embedded[k].reshape(-1)],
            }
            for k in range(len(S.blocks))
        ],
    }


def solution_from_json(doc: dict, S: SDPData) -> NumericSolution:
    if doc.get("format") != "certibound-solution/1":
        raise ParseError("not a certibound solution file")
    real = _Realized(S)
    if len(doc["blocks"]) != len(S.blocks):
        raise DimensionMismatch(
            f"expected {len(S.blocks)} blocks, file has {len(doc['blocks'])}"
        )
    mats = []
    for k, blk in enumerate(doc["blocks"]):
        d = real.dims[k]
        if blk["dim"] != d:
            raise DimensionMismatch(
                f"block {k}: expected embedded dim {d}, file has {blk['dim']}"
            )
        try:
            vals = np.array([float(x) for x in blk["entries"]])
        except ValueError as exc:
            raise ParseError(f"block {k}: {exc}") from exc
        if vals.size != d * d:
            raise DimensionMismatch(f"block {k}: wrong entry count")
        mats.append(vals.reshape(d, d))
    gram = real.extract_gram(mats)
    return NumericSolution(
        bound=float(doc["bound"]),
        gram_blocks=gram,
        status=doc.get("status", FEASIBLE_ONLY),
        iterations=int(doc.get("iterations", 0)),
        residuals=doc.get("residuals", {}),
    )


def save_solution(path, sol: NumericSolution, S: SDPData):
    with open(path, "w") as fh:
        json.dump(solution_to_json(sol, S), fh, indent=1, sort_keys=True)
        fh.write("\n")


def import_solution(path, S: SDPData) -> NumericSolution:
    """Load an externally produced solution; no feasibility is assumed."""
    with open(path) as fh:
        return solution_from_json(json.load(fh), S)


# ---------------------------------------------------------------------------
# numeric certificate error


def certificate_error(S: SDPData, sol: NumericSolution) -> float:
    """1-norm over reduced words of LHS - RHS coefficient differences.

    LHS is ``lambda_d - f`` (moment multipliers folded in through their
    blocks); RHS collects every block's word contributions at the float
    Gram values.
    """
    if len(sol.gram_blocks) != len(S.blocks):
        raise DimensionMismatch("solution does not match SDP block structure")
    for k, (_, d, _) in enumerate(S.blocks):
        if sol.gram_blocks[k].shape != (d, d):
            raise DimensionMismatch(f"block {k} has wrong shape")
    total = 0.0
    for w, cells, rhs in S.constraints:
        acc = complex(0.0)
        for (k, i, j, c) in cells:
            acc += c.to_complex() * sol.gram_blocks[k][i, j]
        total += abs(rhs.to_complex() - acc)
    # empty word: lambda - f_const vs objective entries
    acc = complex(0.0)
    for (k, i, j, c) in S.objective_entries:
        acc += c.to_complex() * sol.gram_blocks[k][i, j]
    total += abs((sol.bound - float(S.f_const.re)) - acc)
    return float(total)
