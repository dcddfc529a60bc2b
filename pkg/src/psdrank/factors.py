"""Psd factorizations of nonnegative matrices and the operations that build them.

A factorization of a p x q nonnegative matrix M is a list of k x k psd row
factors A_1..A_p and column factors B_1..B_q with trace(A_i B_j) = M_ij.
The field tag is "real" (symmetric factors) or "hermitian".
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DomainError, InputError
from .linalg import DEFAULT_TOL


@dataclass(frozen=True)
class PsdFactorization:
    field: str
    row_factors: tuple
    col_factors: tuple

    @property
    def k(self) -> int:
        if self.row_factors:
            return self.row_factors[0].shape[0]
        if self.col_factors:
            return self.col_factors[0].shape[0]
        return 0

    @property
    def shape(self) -> tuple:
        return (len(self.row_factors), len(self.col_factors))

    def matrix(self) -> np.ndarray:
        """Reconstruct M from trace(A_i B_j)."""
        p, q = self.shape
        if p == 0 or q == 0 or self.k == 0:
            return np.zeros((p, q))
        a = np.stack(self.row_factors)
        b = np.stack(self.col_factors)
        m = np.einsum("aij,bij->ab", a, b.conj())
        return np.real_if_close(m, tol=1000).real if np.iscomplexobj(m) else m


@dataclass(frozen=True)
class VerificationReport:
    max_residual: float
    max_psd_violation: float
    max_orth_defect: float
    orth_bound: float
    passed: bool
    imag_residual: float = 0.0

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (
            f"{verdict}: residual {self.max_residual:.3e}, "
            f"psd violation {self.max_psd_violation:.3e}, "
            f"orthogonality defect {self.max_orth_defect:.3e} "
            f"(bound {self.orth_bound:.3e})"
        )


def make_factorization(row_factors, col_factors, field: str | None = None) -> PsdFactorization:
    """Assemble and sanity-check a factorization from factor lists."""
    rows = tuple(linalg.check_symmetric(a, name="row factor") for a in row_factors)
    cols = tuple(linalg.check_symmetric(b, name="column factor") for b in col_factors)
    sizes = {m.shape[0] for m in rows + cols}
    if len(sizes) > 1:
        raise InputError(f"factor sizes differ: {sorted(sizes)}")
    if field is None:
        field = "hermitian" if any(np.iscomplexobj(m) for m in rows + cols) else "real"
    if field not in ("real", "hermitian"):
        raise InputError(f"unknown field tag '{field}'")
    if field == "real":
        if any(np.iscomplexobj(m) for m in rows + cols):
            raise InputError("real factorization contains complex factors")
    else:
        rows = tuple(m.astype(np.complex128) for m in rows)
        cols = tuple(m.astype(np.complex128) for m in cols)
    return PsdFactorization(field, rows, cols)


def verify(m, f: PsdFactorization, tol: float = DEFAULT_TOL) -> VerificationReport:
    """Check residuals, factor psd-ness and orthogonality at zero entries.

    The orthogonality bound follows from trace(A B) = sum of squared inner
    products of the factor columns: trace(A B) <= eps with A, B psd forces
    max |(A B)_{uv}| <= sqrt(eps * lmax(A) * lmax(B)).
    """
    mm = linalg.as_matrix(m)
    p, q = f.shape
    if mm.shape != (p, q):
        raise InputError(f"matrix shape {mm.shape} does not match factorization {p}x{q}")
    scale_m = linalg.scale_of(mm)

    if p == 0 or q == 0:
        return VerificationReport(0.0, 0.0, 0.0, 0.0, True)

    approx = f.matrix() if f.k else np.zeros((p, q))
    imag = 0.0
    if f.field == "hermitian" and f.k:
        a = np.stack(f.row_factors)
        b = np.stack(f.col_factors)
        raw = np.einsum("aij,bij->ab", a, b.conj())
        imag = float(np.max(np.abs(raw.imag)))
    max_residual = float(np.max(np.abs(approx - mm.real))) if f.k else float(np.max(np.abs(mm)))
    if np.iscomplexobj(mm) and np.max(np.abs(mm.imag)) > tol * scale_m:
        raise InputError("matrix to verify has complex entries")

    violations = []
    fac_scale = 1.0
    for g in f.row_factors + f.col_factors:
        violations.append(max(0.0, -linalg.min_eig(g)))
        fac_scale = max(fac_scale, linalg.scale_of(g))
    max_viol = max(violations) if violations else 0.0

    lmax_rows = [float(np.linalg.eigvalsh(g)[-1]) if g.size else 0.0 for g in f.row_factors]
    lmax_cols = [float(np.linalg.eigvalsh(g)[-1]) if g.size else 0.0 for g in f.col_factors]
    max_defect = 0.0
    orth_bound = 0.0
    orth_ok = True
    zero_rows, zero_cols = np.nonzero(mm.real <= tol * scale_m)
    for i, j in zip(zero_rows, zero_cols):
        defect = linalg.orth_defect(f.row_factors[i], f.col_factors[j])
        eps = max(float(mm.real[i, j]), 0.0) + tol * scale_m
        bound = 2.0 * np.sqrt(eps * max(lmax_rows[i], tol) * max(lmax_cols[j], tol)) + tol
        max_defect = max(max_defect, defect)
        orth_bound = max(orth_bound, bound)
        if defect > bound:
            orth_ok = False

    passed = (
        max_residual <= tol * scale_m
        and max_viol <= tol * fac_scale
        and imag <= tol * fac_scale * max(1, f.k)
        and orth_ok
    )
    return VerificationReport(max_residual, max_viol, max_defect, orth_bound, passed, imag)


# ---------------------------------------------------------------------------
# constructors


def from_nonneg_factorization(a_vecs, b_vecs) -> PsdFactorization:
    """Diagonal psd factorization of M_ij = <a_i, b_j> from nonnegative vectors."""
    aa = np.atleast_2d(np.asarray(a_vecs, dtype=float))
    bb = np.atleast_2d(np.asarray(b_vecs, dtype=float))
    if aa.shape[1] != bb.shape[1]:
        raise InputError("vector lengths differ between the two sides")
    if np.min(aa, initial=0.0) < 0 or np.min(bb, initial=0.0) < 0:
        raise InputError("vectors must be nonnegative")
    rows = [np.diag(a) for a in aa]
    cols = [np.diag(b) for b in bb]
    return make_factorization(rows, cols, "real")


def from_hadamard_sqrt(n, tol: float = DEFAULT_TOL) -> PsdFactorization:
    """Rank-one factorization of n∘n from a rank factorization of n."""
    nn = linalg.as_matrix(n, "sqrt matrix")
    u, v = linalg.rank_factorization(nn, tol)
    rows = [np.outer(u[i, :], u[i, :]) for i in range(nn.shape[0])]
    cols = [np.outer(v[:, j], v[:, j]) for j in range(nn.shape[1])]
    return make_factorization(rows, cols, "real")


def direct_sum(f: PsdFactorization, g: PsdFactorization) -> PsdFactorization:
    """Factorization of diag(M, N) by block-diagonal padding."""
    if g.k == 0 and g.shape == (0, 0):
        return f
    if f.k == 0 and f.shape == (0, 0):
        return g
    field = _require_same_field(f, g)
    kf, kg = f.k, g.k
    k = kf + kg

    def pad_left(a):
        out = np.zeros((k, k), dtype=a.dtype)
        out[:kf, :kf] = a
        return out

    def pad_right(b):
        out = np.zeros((k, k), dtype=b.dtype)
        out[kf:, kf:] = b
        return out

    rows = [pad_left(a) for a in f.row_factors] + [pad_right(a) for a in g.row_factors]
    cols = [pad_left(b) for b in f.col_factors] + [pad_right(b) for b in g.col_factors]
    if k == 0:
        return PsdFactorization(field, tuple(rows), tuple(cols))
    return make_factorization(rows, cols, field)


def add(f: PsdFactorization, g: PsdFactorization) -> PsdFactorization:
    """Factorization of M + N by stacking both on a common block diagonal."""
    if f.shape != g.shape:
        raise InputError(f"shapes differ: {f.shape} vs {g.shape}")
    field = _require_same_field(f, g)
    kf, kg = f.k, g.k
    k = kf + kg

    def stack(a, b):
        out = np.zeros((k, k), dtype=complex if field == "hermitian" else float)
        out[:kf, :kf] = a
        out[kf:, kf:] = b
        return out

    rows = [stack(a, b) for a, b in zip(f.row_factors, g.row_factors)]
    cols = [stack(a, b) for a, b in zip(f.col_factors, g.col_factors)]
    return make_factorization(rows, cols, field)


def compose_right(f: PsdFactorization, n) -> PsdFactorization:
    """Factorization of M N for entrywise-nonnegative N: new columns sum old ones."""
    nn = linalg.as_matrix(n, "n")
    if np.min(nn.real, initial=0.0) < 0:
        raise InputError("composition matrix must be nonnegative")
    q = len(f.col_factors)
    if nn.shape[0] != q:
        raise InputError(f"composition matrix needs {q} rows, got {nn.shape[0]}")
    cols = []
    for j in range(nn.shape[1]):
        c = np.zeros((f.k, f.k), dtype=complex if f.field == "hermitian" else float)
        for t in range(q):
            c = c + nn[t, j] * f.col_factors[t]
        cols.append(c)
    return make_factorization(f.row_factors, cols, f.field)


def kron_factorization(f: PsdFactorization, g: PsdFactorization) -> PsdFactorization:
    """Factorization of kron(M, N) via Kronecker products of factors."""
    field = _require_same_field(f, g)
    rows = [np.kron(a, b) for a in f.row_factors for b in g.row_factors]
    cols = [np.kron(a, b) for a in f.col_factors for b in g.col_factors]
    return make_factorization(rows, cols, field)


def hermitian_embed(f: PsdFactorization) -> PsdFactorization:
    """Real 2k x 2k factorization of the same matrix from a Hermitian one."""
    if f.field != "hermitian":
        raise DomainError("factorization is already real")

    def embed(a):
        re, im = a.real, a.imag
        return np.block([[re, im], [-im, re]]) / np.sqrt(2.0)

    rows = [embed(a) for a in f.row_factors]
    cols = [embed(b) for b in f.col_factors]
    return make_factorization(rows, cols, "real")


# ---------------------------------------------------------------------------
# rescalings


def rescale_trace(f: PsdFactorization, m=None, tol: float = DEFAULT_TOL) -> PsdFactorization:
    """Conjugate by (sum A_i)^(-1/2) so the row factors sum to the identity.

    Column factors then satisfy trace(B'_j) = sum_i M_ij; columns with zero
    sum are returned as exactly zero factors. If the row factors span only a
    subspace, the rescaling happens on that subspace and sum A'_i is the
    orthogonal projector onto it.
    """
    col_sums = None
    if m is not None:
        mm = linalg.as_matrix(m)
        if mm.shape != f.shape:
            raise InputError("matrix shape does not match the factorization")
        col_sums = np.sum(mm.real, axis=0)
        m_scale = linalg.scale_of(mm)
    f, restore = _compress_to_common_span(f, tol, rows_only=True)
    k = f.k
    if k == 0 or not any(np.any(a) for a in f.row_factors):
        raise DomainError("row factors are all zero; nothing to normalize")
    s = sum(f.row_factors)
    roots = linalg.psd_roots(s, tol)
    if roots.rank < k:
        raise DomainError("row factors sum to a singular matrix after compression")
    rows = [linalg.sym(roots.inv_sqrt @ a @ roots.inv_sqrt) for a in f.row_factors]
    cols = []
    for j, b in enumerate(f.col_factors):
        if col_sums is not None:
            zero_col = col_sums[j] <= tol * m_scale * len(rows)
        else:
            colsum = linalg.pair_value(s, b)
            zero_col = abs(colsum) <= tol * linalg.scale_of(s) * linalg.scale_of(b) * k
        if zero_col:
            cols.append(np.zeros_like(b))
        else:
            cols.append(linalg.sym(roots.sqrt @ b @ roots.sqrt))
    return restore(PsdFactorization(f.field, tuple(rows), tuple(cols)))


def rescale_john(f: PsdFactorization, m=None, tol: float = DEFAULT_TOL) -> PsdFactorization:
    """Conjugate so every factor eigenvalue is at most sqrt(k * max entry of M).

    Computes the minimum-volume origin-symmetric ellipsoid containing the
    union of the row-factor ellipsoids {u : A_i - u u^T psd} and conjugates by
    the scaled inverse of its defining map. Degenerate spans are reduced to
    the common range first and embedded back afterwards.
    """
    if f.field != "real":
        raise DomainError("John rescaling needs real factors; apply hermitian_embed first")
    if m is not None:
        mm = linalg.as_matrix(m)
        if mm.shape != f.shape:
            raise InputError("matrix shape does not match the factorization")
        max_m = float(np.max(mm.real, initial=0.0))
    else:
        max_m = float(np.max(f.matrix(), initial=0.0))
    if max_m <= tol:
        raise DomainError("matrix is numerically zero; eigenvalue bound is unattainable")
    f, restore = _compress_to_common_span(f, tol)
    d = f.k
    if d == 0:
        raise DomainError("all factors are zero")

    from .sdp import min_volume_shape

    shape = min_volume_shape([np.asarray(a, dtype=float) for a in f.row_factors])
    p_half, p_inv_half = _sym_sqrt_pair(shape.p)
    c = d ** 0.25 * max_m ** 0.25
    left = c * p_half
    left_inv = p_inv_half / c
    rows = [linalg.sym(left @ a @ left.T) for a in f.row_factors]
    cols = [linalg.sym(left_inv.T @ b @ left_inv) for b in f.col_factors]
    return restore(PsdFactorization("real", tuple(rows), tuple(cols)))


def _sym_sqrt_pair(p: np.ndarray):
    w, v = np.linalg.eigh(linalg.sym(p))
    w = np.clip(w, 1e-300, None)
    return linalg.sym((v * np.sqrt(w)) @ v.T), linalg.sym((v / np.sqrt(w)) @ v.T)


def _compress_to_common_span(f: PsdFactorization, tol: float, rows_only: bool = False):
    """Project both factor lists onto the common range and return an inverse embed."""
    k = f.k
    if k == 0:
        return f, lambda g: g

    def range_basis(s):
        w, v = np.linalg.eigh(linalg.sym(s))
        keep = w > tol * linalg.scale_of(s)
        return v[:, keep]

    wa = range_basis(sum(f.row_factors))
    if wa.shape[1] == k and rows_only:
        return f, lambda g: g
    rows = [wa.conj().T @ a @ wa for a in f.row_factors]
    cols = [wa.conj().T @ b @ wa for b in f.col_factors]
    if not rows_only and rows:
        wb = range_basis(sum(np.asarray(b) for b in cols))
        if wb.shape[1] < wa.shape[1]:
            rows = [wb.conj().T @ a @ wb for a in rows]
            cols = [wb.conj().T @ b @ wb for b in cols]
            wa = wa @ wb
    if wa.shape[1] == k:
        return f, lambda g: g

    def restore(g: PsdFactorization) -> PsdFactorization:
        back_rows = [linalg.sym(wa @ a @ wa.conj().T) for a in g.row_factors]
        back_cols = [linalg.sym(wa @ b @ wa.conj().T) for b in g.col_factors]
        return PsdFactorization(g.field, tuple(back_rows), tuple(back_cols))

    compressed = PsdFactorization(
        f.field,
        tuple(linalg.sym(a) for a in rows),
        tuple(linalg.sym(b) for b in cols),
    )
    return compressed, restore


# ---------------------------------------------------------------------------
# expansions


@dataclass(frozen=True)
class Rank1Expansion:
    matrix: np.ndarray
    factorization: PsdFactorization
    sqrt_witness: np.ndarray


def rank1_expand(f: PsdFactorization, tol: float = DEFAULT_TOL) -> Rank1Expansion:
    """Blow M up to a pk x qk matrix admitting a rank-one factorization.

    Each factor is split into k spectral rank-one pieces (padded with zeros);
    entry ((i,s),(j,r)) of the expanded matrix is the squared inner product of
    the corresponding vectors, so the k x k block sums reproduce M and the
    matrix of unsquared inner products is a Hadamard square root of rank <= k.
    """
    k = f.k
    p, q = f.shape

    def spectral_vectors(g):
        w, v = np.linalg.eigh(g)
        w = np.clip(w, 0.0, None)
        return (v * np.sqrt(w)).T  # k vectors as rows

    row_vecs = [spectral_vectors(a) for a in f.row_factors]
    col_vecs = [spectral_vectors(b) for b in f.col_factors]
    dtype = complex if f.field == "hermitian" else float
    witness = np.zeros((p * k, q * k), dtype=dtype)
    for i in range(p):
        for j in range(q):
            g = row_vecs[i].conj() @ col_vecs[j].T
            witness[i * k : (i + 1) * k, j * k : (j + 1) * k] = g
    n = np.abs(witness) ** 2 if dtype is complex else witness**2
    rows = [np.outer(v, v.conj()) for vecs in row_vecs for v in vecs]
    cols = [np.outer(v, v.conj()) for vecs in col_vecs for v in vecs]
    expansion = make_factorization(rows, cols, f.field)
    return Rank1Expansion(n, expansion, witness)


# ---------------------------------------------------------------------------
# explicit family factorization


def derangement_factorization(n: int) -> PsdFactorization:
    """Size min{k : n <= k(k+1)/2} factorization of the n x n zero-diagonal ones matrix.

    Row factors are the k coordinate projectors followed by the difference
    forms F_{s,t} = (e_s - e_t)(e_s - e_t)^T in lexicographic pair order; the
    column factors are the companion half-integer matrices.
    """
    n = int(n)
    if n < 1:
        raise InputError("derangement size must be positive")
    k = 1
    while k * (k + 1) // 2 < n:
        k += 1
    pairs = [(s, t) for s in range(k) for t in range(s + 1, k)]

    rows = []
    cols = []
    for i in range(k):
        a = np.zeros((k, k))
        a[i, i] = 1.0
        rows.append(a)
        b = 0.5 * (np.eye(k) + np.ones((k, k)))
        b[i, :] = 0.0
        b[:, i] = 0.0
        cols.append(b)
    for s, t in pairs:
        a = np.zeros((k, k))
        a[s, s] = a[t, t] = 1.0
        a[s, t] = a[t, s] = -1.0
        rows.append(a)
        b = 0.5 * (np.eye(k) + np.ones((k, k)))
        b[s, t] += 0.5
        b[t, s] += 0.5
        cols.append(b)
    return make_factorization(rows[:n], cols[:n], "real")


def hermitian_derangement4() -> PsdFactorization:
    """Hermitian size-2 factorization of the 4 x 4 derangement matrix."""
    w = np.exp(2j * np.pi / 3)
    rows = [
        np.array([[1, 0], [0, 0]], dtype=complex),
        np.array([[0, 0], [0, 1]], dtype=complex),
        np.array([[1, -1], [-1, 1]], dtype=complex),
        np.array([[1, w], [np.conj(w), 1]]),
    ]
    cols = [
        np.array([[0, 0], [0, 1]], dtype=complex),
        np.array([[1, 0], [0, 0]], dtype=complex),
        np.array([[1, 1], [1, 1]], dtype=complex),
        np.array([[1, -w], [-np.conj(w), 1]]),
    ]
    return make_factorization(rows, cols, "hermitian")


def scale_rows(f: PsdFactorization, scales) -> PsdFactorization:
    """Factorization of diag(scales) @ M via scaled row factors."""
    s = np.asarray(scales, dtype=float)
    if s.ndim != 1 or s.size != len(f.row_factors):
        raise InputError("need one nonnegative scale per row")
    if np.any(s < 0):
        raise InputError("row scales must be nonnegative")
    rows = [si * a for si, a in zip(s, f.row_factors)]
    return PsdFactorization(f.field, tuple(rows), f.col_factors)


def scale_cols(f: PsdFactorization, scales) -> PsdFactorization:
    """Factorization of M @ diag(scales) via scaled column factors."""
    s = np.asarray(scales, dtype=float)
    if s.ndim != 1 or s.size != len(f.col_factors):
        raise InputError("need one nonnegative scale per column")
    if np.any(s < 0):
        raise InputError("column scales must be nonnegative")
    cols = [sj * b for sj, b in zip(s, f.col_factors)]
    return PsdFactorization(f.field, f.row_factors, tuple(cols))


def transpose(f: PsdFactorization) -> PsdFactorization:
    """Factorization of M^T (swap row and column factors)."""
    return PsdFactorization(f.field, f.col_factors, f.row_factors)


def _require_same_field(f: PsdFactorization, g: PsdFactorization) -> str:
    if f.field != g.field:
        raise InputError(f"field tags differ: {f.field} vs {g.field}")
    return f.field
