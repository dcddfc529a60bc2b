"""Dense linear algebra kernel: ranks, psd tests, matrix roots, vectorization.

Conventions: matrices are numpy arrays (real float64 or complex128), the inner
product on (Hermitian) matrices is trace(A B), and every tolerance scales with
1 + max absolute entry of the operand.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

DEFAULT_TOL = 1e-9


def as_matrix(m, name: str = "matrix") -> np.ndarray:
    """Validate a 2-d finite array-like and return it as float64/complex128."""
    a = np.asarray(m)
    if a.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {a.shape}")
    if a.size and not np.iscomplexobj(a):
        a = a.astype(np.float64, copy=False)
    if a.size and not np.all(np.isfinite(a)):
        raise InputError(f"{name} contains NaN or Inf entries")
    return a


def scale_of(m) -> float:
    a = np.asarray(m)
    return 1.0 + (float(np.max(np.abs(a))) if a.size else 0.0)


def sym(m: np.ndarray) -> np.ndarray:
    """Symmetric (Hermitian) part of a square matrix."""
    return 0.5 * (m + m.conj().T)


def check_symmetric(m, tol: float = DEFAULT_TOL, name: str = "matrix") -> np.ndarray:
    a = as_matrix(m, name)
    if a.shape[0] != a.shape[1]:
        raise DomainError(f"{name} must be square, got shape {a.shape}")
    if a.size and float(np.max(np.abs(a - a.conj().T))) > 10 * tol * scale_of(a):
        raise DomainError(f"{name} is not symmetric/Hermitian within tolerance")
    return sym(a)


def numerical_rank(m, tol: float = DEFAULT_TOL) -> int:
    """Number of singular values above tol * max(p, q) * sigma_max."""
    a = as_matrix(m)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.count_nonzero(s > tol * max(a.shape) * s[0]))


def min_eig(m) -> float:
    a = check_symmetric(m)
    if a.size == 0:
        return 0.0
    return float(np.linalg.eigvalsh(a)[0])


def is_psd(m, tol: float = DEFAULT_TOL) -> bool:
    """Symmetric/Hermitian psd test: min eigenvalue >= -tol * (1 + max |entry|)."""
    a = check_symmetric(m)
    if a.size == 0:
        return True
    return min_eig(a) >= -tol * scale_of(a)


def vecm(m) -> np.ndarray:
    """Isometric vectorization of a symmetric matrix.

    Ordering: the k diagonal entries first, then the strict upper triangle
    row by row scaled by sqrt(2), so that <vecm(X), vecm(Y)> = trace(X Y).
    """
    a = check_symmetric(m)
    k = a.shape[0]
    iu = np.triu_indices(k, 1)
    return np.concatenate([np.diagonal(a), np.sqrt(2.0) * a[iu]])


@dataclass(frozen=True)
class PsdRoots:
    sqrt: np.ndarray
    inv_sqrt: np.ndarray
    pinv: np.ndarray
    rank: int


def psd_roots(m, tol: float = DEFAULT_TOL) -> PsdRoots:
    """Square root, pseudo-inverse square root and pseudo-inverse of a psd matrix.

    Eigenvalues below the psd-test cutoff tol * (1 + max |entry|) are treated
    as zero; a genuinely negative spectrum raises DomainError.
    """
    a = check_symmetric(m)
    cutoff = tol * scale_of(a)
    w, v = np.linalg.eigh(a)
    if a.size and w[0] < -cutoff:
        raise DomainError(f"matrix is not psd (min eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    keep = w > cutoff
    sqrt_w = np.sqrt(w)
    inv_sqrt_w = np.where(keep, 1.0 / np.where(keep, sqrt_w, 1.0), 0.0)
    inv_w = np.where(keep, 1.0 / np.where(keep, w, 1.0), 0.0)

    def build(d):
        return sym((v * d) @ v.conj().T)

    return PsdRoots(build(sqrt_w), build(inv_sqrt_w), build(inv_w), int(keep.sum()))


def psd_sqrt_and_pinv(m, tol: float = DEFAULT_TOL):
    """(S^(1/2), S^(-1/2), S^+) of a psd matrix, eigenvalue cutoff as in psd_roots."""
    r = psd_roots(m, tol)
    return r.sqrt, r.inv_sqrt, r.pinv


def kron(a, b) -> np.ndarray:
    """Kronecker product with the row-major pairing (i,s),(j,t) -> a[i,j] b[s,t]."""
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def pair_value(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> float:
    """trace(A B) for symmetric/Hermitian factors, asserting a real result."""
    v = complex(np.sum(a * b.conj()))
    if abs(v.imag) > tol * (scale_of(a) * scale_of(b)) * max(1, a.shape[0]):
        raise DomainError(f"inner product has non-negligible imaginary part {v.imag:.3e}")
    return v.real


def orth_defect(a: np.ndarray, b: np.ndarray) -> float:
    """max |(A B)_{uv}|; near zero whenever trace(A B) ~ 0 with A, B psd."""
    return float(np.max(np.abs(a @ b))) if a.size else 0.0


def rank_factorization(m, tol: float = DEFAULT_TOL):
    """SVD-based rank factorization m = u @ v with inner dimension = rank."""
    a = as_matrix(m)
    r = numerical_rank(a, tol)
    if r == 0:
        return np.zeros((a.shape[0], 0)), np.zeros((0, a.shape[1]))
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    return u[:, :r] * s[:r], vt[:r, :]


def exact_int_rank(rows: list[list[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [list(map(int, r)) for r in rows]
    if not m or not m[0]:
        return 0
    nrow, ncol = len(m), len(m[0])
    rank = 0
    r = 0
    prev = 1
    for c in range(ncol):
        piv = next((i for i in range(r, nrow) if m[i][c] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        for i in range(r + 1, nrow):
            for j in range(c + 1, ncol):
                m[i][j] = (m[i][j] * m[r][c] - m[i][c] * m[r][j]) // prev
            m[i][c] = 0
        prev = m[r][c]
        r += 1
        rank += 1
        if r == nrow:
            break
    return rank
