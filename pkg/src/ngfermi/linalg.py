"""Structured linear algebra shared by the whole package.

Everything here operates on plain numpy arrays: Pfaffians of skew-symmetric
matrices, exponentials of Hermitian-antisymmetric generators, the four signed
block contractions of 2N x 2N matrices, iterative rank-1 inverse updates and
SVD pseudo-inverses.  All functions are pure.
"""

from __future__ import annotations

from enum import Enum

import numpy as np
import scipy.linalg

from .errors import DimensionError, SingularUpdateError, ValidationError

SKEW_TOL = 1e-10


class BlockContractionKind(Enum):
    """Sign pattern of the four-entry block contraction.

    The first sign belongs to the column index (mode p), the second to the
    row index (mode q); see :func:`block_contract`.
    """

    PLUS_MINUS = "+-"
    MINUS_PLUS = "-+"
    PLUS_PLUS = "++"
    MINUS_MINUS = "--"


def check_skew(mat: np.ndarray, tol: float = SKEW_TOL, what: str = "matrix") -> np.ndarray:
    """Validate skew-symmetry and return the exactly skew part (M - M^T)/2.

    Symmetrizing after validation kills accumulated floating-point drift
    without hiding genuinely non-skew inputs.
    """
    mat = np.asarray(mat)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionError(f"{what} must be square, got shape {mat.shape}")
    dev = np.max(np.abs(mat + mat.T)) if mat.size else 0.0
    if dev > tol:
        raise ValidationError(f"{what} is not skew-symmetric: |M + M^T| = {dev:.3e}")
    return 0.5 * (mat - mat.T)


def pfaffian(skew: np.ndarray, tol: float = SKEW_TOL) -> complex:
    """Pfaffian of an even-dimensional skew-symmetric matrix.

    Uses Parlett-Reid skew tridiagonalization with partial pivoting, O(n^3).
    Works for real and complex entries (no conjugation is involved) and
    satisfies Pf(S)^2 = det(S).
    """
    a = check_skew(skew, tol=tol, what="pfaffian input")
    n = a.shape[0]
    if n % 2 != 0:
        raise DimensionError(f"pfaffian needs even dimension, got {n}")
    if n == 0:
        return 1.0 + 0.0j
    a = a.astype(complex, copy=True)
    val = 1.0 + 0.0j
    for k in range(0, n - 1, 2):
        # pivot the largest entry of column k into position (k+1, k)
        pivot_row = k + 1 + int(np.argmax(np.abs(a[k + 1:, k])))
        if pivot_row != k + 1:
            a[[k + 1, pivot_row], :] = a[[pivot_row, k + 1], :]
            a[:, [k + 1, pivot_row]] = a[:, [pivot_row, k + 1]]
            val = -val
        pivot = a[k, k + 1]
        if pivot == 0.0:
            return 0.0 + 0.0j
        val *= pivot
        if k + 2 < n:
            tau = a[k, k + 2:] / pivot
            # congruence with a unit Gauss transform leaves the Pfaffian fixed
            a[k + 2:, k + 2:] += np.outer(tau, a[k + 2:, k + 1])
            a[k + 2:, k + 2:] -= np.outer(a[k + 2:, k + 1], tau)
    return complex(val)


def check_generator(xi: np.ndarray, tol: float = SKEW_TOL) -> np.ndarray:
    """Validate a Hermitian-antisymmetric generator and return i*xi (real skew)."""
    xi = np.asarray(xi, dtype=complex)
    if xi.ndim != 2 or xi.shape[0] != xi.shape[1]:
        raise DimensionError(f"generator must be square, got shape {xi.shape}")
    dev_h = np.max(np.abs(xi - xi.conj().T)) if xi.size else 0.0
    dev_a = np.max(np.abs(xi + xi.T)) if xi.size else 0.0
    if dev_h > tol or dev_a > tol:
        raise ValidationError(
            f"generator must satisfy xi^dag = xi and xi^T = -xi "
            f"(deviations {dev_h:.3e}, {dev_a:.3e})"
        )
    ixi = np.real(1j * xi)
    return 0.5 * (ixi - ixi.T)


def skew_exp(xi: np.ndarray, tol: float = SKEW_TOL) -> np.ndarray:
    """exp(i*xi) for a Hermitian-antisymmetric xi; the result is real orthogonal."""
    ixi = check_generator(xi, tol=tol)
    return scipy.linalg.expm(ixi)


def block_contract(
    mat: np.ndarray, kind: BlockContractionKind, p: int, q: int
) -> complex:
    """Signed four-entry contraction of a 2N x 2N matrix at modes (p, q).

    With row index built from q and column index from p (0-based modes),
    returns M[q,p] + cq*i*M[N+q,p] + cp*(-i)*M[q,N+p] + cq*cp*M[N+q,N+p],
    where (cp, cq) are the signs named by ``kind`` (column sign first).
    """
    mat = np.asarray(mat)
    n2 = mat.shape[0]
    if mat.ndim != 2 or mat.shape[1] != n2 or n2 % 2 != 0:
        raise DimensionError(f"expected square even-dimensional matrix, got {mat.shape}")
    n = n2 // 2
    if not (0 <= p < n and 0 <= q < n):
        raise DimensionError(f"mode indices ({p}, {q}) out of range for {n} modes")
    cp, cq = _CONTRACTION_SIGNS[kind]
    return complex(
        mat[q, p]
        + cp * (-1j) * mat[q, n + p]
        + cq * 1j * mat[n + q, p]
        + cp * cq * mat[n + q, n + p]
    )


_CONTRACTION_SIGNS = {
    BlockContractionKind.PLUS_MINUS: (1.0, 1.0),
    BlockContractionKind.MINUS_PLUS: (-1.0, -1.0),
    BlockContractionKind.PLUS_PLUS: (1.0, -1.0),
    BlockContractionKind.MINUS_MINUS: (-1.0, 1.0),
}
# Sign tuples are (cp, cq): the column selector is (1_p, cp*(-i)_p) and the
# row selector (1_q, cq*(+i)_q).  A "+" in a slot weights that mode's upper
# component with -i, a "-" weights it with +i; the first superscript char
# belongs to the p (column) slot, the second to the q (row) slot:
#   "+-": column (1, -i), row (1, +i)   -> (cp, cq) = (+1, +1)
#   "-+": column (1, +i), row (1, -i)   -> (-1, -1)
#   "++": column (1, -i), row (1, -i)   -> (+1, -1)
#   "--": column (1, +i), row (1, +i)   -> (-1, +1)


def block_contract_all(mat: np.ndarray, kind: BlockContractionKind) -> np.ndarray:
    """All block contractions at once: out[p, q] = contraction of (p, q)."""
    mat = np.asarray(mat)
    n = mat.shape[0] // 2
    cp, cq = _CONTRACTION_SIGNS[kind]
    m11 = mat[:n, :n]
    m12 = mat[:n, n:]
    m21 = mat[n:, :n]
    m22 = mat[n:, n:]
    # out[p, q]: row index of mat is q, column index is p -> transpose blocks
    return (m11 + cp * (-1j) * m12 + cq * 1j * m21 + cp * cq * m22).T


def miller_inverse(
    base_inverse: np.ndarray,
    updates: list[tuple[complex, np.ndarray, np.ndarray]],
    fallback_matrix: np.ndarray | None = None,
    denom_tol: float = 1e-12,
) -> tuple[np.ndarray, bool]:
    """Inverse of A + sum_k beta_k |u_k><v_k| built iteratively from A^-1.

    Each step applies C^-1 <- C^-1 - g C^-1 B C^-1 with B = beta |u><v| and
    g = 1/(1 + beta <v|C^-1|u>).  When a denominator falls below ``denom_tol``
    the update sequence is abandoned: if ``fallback_matrix`` (the full matrix
    A + sum B) was supplied its direct inverse is returned with the fallback
    flag set, otherwise :class:`SingularUpdateError` is raised naming the step.

    Returns ``(inverse, used_fallback)``.
    """
    inv = np.array(base_inverse, dtype=complex, copy=True)
    for step, (beta, u, v) in enumerate(updates):
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        iu = inv @ u
        vi = v @ inv
        denom = 1.0 + beta * (v @ iu)
        if abs(denom) < denom_tol:
            if fallback_matrix is not None:
                return np.linalg.inv(np.asarray(fallback_matrix, dtype=complex)), True
            raise SingularUpdateError(step, denom)
        inv -= (beta / denom) * np.outer(iu, vi)
    return inv, False


def pseudo_inverse(mat: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Moore-Penrose pseudo-inverse with a relative singular-value cutoff."""
    mat = np.asarray(mat)
    if not np.all(np.isfinite(mat)):
        raise ValidationError("pseudo_inverse requires finite entries")
    if not (0.0 < rcond < 1.0):
        raise ValidationError(f"rcond must lie in (0, 1), got {rcond}")
    return np.linalg.pinv(mat, rcond=rcond)
