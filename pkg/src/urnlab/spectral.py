"""Dense linear algebra used by the analytic modules.

Floating point work goes through LAPACK (via numpy/scipy); kernels of
rational matrices are computed exactly with integer row reduction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from math import lcm

import numpy as np
import scipy.linalg


class SingularMatrix(ArithmeticError):
    pass


class NumericalFailure(ArithmeticError):
    pass


PIVOT_RTOL = 1e-12
DIAG_RCOND = 1e-8


def solve_row_system(Q, r) -> np.ndarray:
    """Solve ``x @ Q = r`` for the row vector ``x``."""
    Q = np.asarray(Q, dtype=float)
    r = np.asarray(r, dtype=float)
    n = Q.shape[0]
    if Q.shape != (n, n) or r.shape != (n,):
        raise ValueError(f"shape mismatch: Q {Q.shape}, r {r.shape}")
    if n == 0:
        return np.zeros(0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(Q, check_finite=True)
    scale = max(1.0, float(np.abs(Q).sum(axis=1).max()))
    if np.abs(np.diag(lu)).min() <= PIVOT_RTOL * n * scale:
        raise SingularMatrix("matrix is singular to working precision")
    # trans=1 solves Q^T y = r, i.e. y @ Q = r
    return scipy.linalg.lu_solve((lu, piv), r, trans=1)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray     # complex, sorted by (-Re, -Im)
    right_vectors: np.ndarray   # U, columns u_k
    left_vectors: np.ndarray    # V = U^{-1}, rows v_k
    diagonalizable: bool


def eig_order(values) -> np.ndarray:
    values = np.asarray(values, dtype=complex)
    # np.lexsort: last key is primary
    return np.lexsort((-values.imag, -values.real))


def eigendecompose(Q) -> EigenDecomposition:
    Q = np.asarray(Q, dtype=float)
    n = Q.shape[0]
    if n < 1 or Q.shape != (n, n):
        raise ValueError(f"need a non-empty square matrix, got shape {Q.shape}")
    try:
        if np.array_equal(Q, Q.T):
            # general eig can return near-parallel vectors for repeated eigenvalues
            values, U = np.linalg.eigh(Q)
        else:
            values, U = np.linalg.eig(Q)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(str(exc)) from None
    idx = eig_order(values)
    values = values[idx].astype(complex)
    U = U[:, idx].astype(complex)
    sv = np.linalg.svd(U, compute_uv=False)
    diagonalizable = bool(sv[-1] > DIAG_RCOND * sv[0])
    if diagonalizable:
        V = np.linalg.inv(U)
    else:
        V = np.linalg.pinv(U)
    return EigenDecomposition(values, U, V, diagonalizable)


def eigenvalues(Q) -> np.ndarray:
    return eigendecompose(Q).eigenvalues


# -- exact kernels ---------------------------------------------------------


def _integer_rows(Q) -> list[list[int]]:
    rows = []
    for row in Q:
        row = [Fraction(x) for x in row]
        scale = lcm(1, *(x.denominator for x in row))
        rows.append([int(x * scale) for x in row])
    return rows


def _echelon(Q) -> tuple[list[list[int]], list[int]]:
    """Fraction-free (Bareiss) reduction to row echelon form.

    Returns the reduced integer rows and the pivot columns.
    """
    M = _integer_rows(Q)
    n_rows = len(M)
    n_cols = len(M[0]) if M else 0
    pivots = []
    prev = 1
    r = 0
    for c in range(n_cols):
        p = next((k for k in range(r, n_rows) if M[k][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        piv = M[r][c]
        for k in range(r + 1, n_rows):
            factor = M[k][c]
            row = M[k]
            top = M[r]
            for j in range(c, n_cols):
                # exact by Sylvester's identity
                row[j] = (piv * row[j] - factor * top[j]) // prev
            row[c] = 0
        prev = piv
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return M[:r], pivots


def exact_rank(Q) -> int:
    return len(_echelon(Q)[1])


def kernel_basis_exact(Q) -> list[list[Fraction]]:
    """Basis of the right kernel ``{v : Q v = 0}`` over the rationals."""
    Q = [list(row) for row in Q]
    n_cols = len(Q[0]) if Q else 0
    E, pivots = _echelon(Q)
    free = [c for c in range(n_cols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * n_cols
        v[fc] = Fraction(1)
        for r in range(len(pivots) - 1, -1, -1):
            pc = pivots[r]
            acc = sum((E[r][j] * v[j] for j in range(pc + 1, n_cols)), Fraction(0))
            v[pc] = -acc / E[r][pc]
        basis.append(v)
    return basis


def identity_minus(W) -> list[list[Fraction]]:
    """Exact ``I - W`` for a square matrix of rationals."""
    n = len(W)
    return [[(1 if i == j else 0) - Fraction(W[i][j]) for j in range(n)] for i in range(n)]
