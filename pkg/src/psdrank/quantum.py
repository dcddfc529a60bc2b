"""One-way quantum correlation protocols matching a nonnegative matrix.

A size-k psd factorization of a probability table turns into a pair of POVMs
and a shared state on two k-level systems whose outcome distribution is the
table; the reverse direction reads a factorization back out of any protocol.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log2

import numpy as np

from . import linalg
from .errors import DomainError, InputError
from .factors import PsdFactorization, make_factorization
from .linalg import DEFAULT_TOL


@dataclass(frozen=True)
class Povm:
    """A finite measurement: psd elements summing to the identity."""

    elements: tuple

    def __init__(self, elements, tol: float = DEFAULT_TOL):
        elems = tuple(linalg.check_symmetric(e, tol) for e in elements)
        if not elems:
            raise InputError("a measurement needs at least one element")
        d = elems[0].shape[0]
        if any(e.shape[0] != d for e in elems):
            raise InputError("measurement elements must share one dimension")
        total = sum(elems)
        if np.max(np.abs(total - np.eye(d))) > 1e-9 * (1 + d):
            raise InputError("measurement elements must sum to the identity")
        for idx, e in enumerate(elems):
            if linalg.min_eig(e) < -tol * linalg.scale_of(e):
                raise InputError(f"measurement element {idx} is not psd")
        object.__setattr__(self, "elements", elems)

    @property
    def dim(self) -> int:
        return self.elements[0].shape[0]

    def __len__(self):
        return len(self.elements)


@dataclass(frozen=True)
class CorrelationProtocol:
    """Local measurements plus a shared state on a k*k joint system."""

    k: int
    alice: Povm
    bob: Povm
    rho: np.ndarray

    def __post_init__(self):
        rho = linalg.check_symmetric(self.rho, DEFAULT_TOL)
        if rho.shape[0] != self.k * self.k:
            raise InputError(f"state must be {self.k * self.k} dimensional")
        if self.alice.dim != self.k or self.bob.dim != self.k:
            raise InputError("measurement dimensions must match k")
        if abs(np.trace(rho).real - 1.0) > 1e-9:
            raise InputError("state must have unit trace")
        if linalg.min_eig(rho) < -1e-9 * linalg.scale_of(rho):
            raise InputError("state must be psd")
        object.__setattr__(self, "rho", rho)

    @property
    def qubits(self) -> float:
        """Qubits each side must send/hold: log2 of the local dimension."""
        return log2(self.k)

    def outcome_matrix(self) -> np.ndarray:
        """Joint outcome probabilities p(i, j) as a matrix."""
        p, q = len(self.alice), len(self.bob)
        out = np.empty((p, q))
        for i, f in enumerate(self.alice.elements):
            for j, g in enumerate(self.bob.elements):
                out[i, j] = float(np.trace(np.kron(f, g) @ self.rho).real)
        return out


def to_protocol(f: PsdFactorization, m, tol: float = DEFAULT_TOL) -> CorrelationProtocol:
    """Build the protocol whose outcome distribution is m.

    Requires the entries of m to sum to one; normalize first otherwise. The
    factor sums are inverted on their common range, so rank-deficient sums are
    fine as long as the factorization is genuine.
    """
    mm = linalg.as_matrix(m)
    if np.iscomplexobj(mm):
        raise InputError("probability table must be real")
    total = float(mm.sum())
    if abs(total - 1.0) > 1e-9:
        raise InputError(
            f"entries sum to {total:.6g}, not 1; normalize the matrix first"
        )
    if f.field != "real":
        raise DomainError("protocols are built for real factorizations")
    if f.shape != mm.shape:
        raise InputError(f"factorization is {f.shape}, matrix is {mm.shape}")

    a_stack = np.array(f.row_factors)
    b_stack = np.array(f.col_factors)
    f2, moved = _compress_onto_common_range(f, tol)
    if moved:
        a_stack = np.array(f2.row_factors)
        b_stack = np.array(f2.col_factors)
    k = a_stack.shape[1]

    sig_a = linalg.sym(a_stack.sum(axis=0))
    sig_b = linalg.sym(b_stack.sum(axis=0))
    ra = linalg.psd_roots(sig_a, tol)
    rb = linalg.psd_roots(sig_b, tol)

    alice = Povm([linalg.sym(ra.inv_sqrt @ a @ ra.inv_sqrt) for a in a_stack], tol=1e-6)
    bob = Povm([linalg.sym(rb.inv_sqrt @ b @ rb.inv_sqrt) for b in b_stack], tol=1e-6)
    psi = np.kron(ra.sqrt, rb.sqrt) @ np.eye(k).ravel()
    rho = np.outer(psi, psi)
    rho = rho / np.trace(rho)
    return CorrelationProtocol(k, alice, bob, rho)


def _compress_onto_common_range(f: PsdFactorization, tol: float):
    """Restrict factors to the range of their sums when those are singular."""
    a_stack = np.array(f.row_factors)
    b_stack = np.array(f.col_factors)
    moved = False
    for which in (0, 1):
        stack = a_stack if which == 0 else b_stack
        s = linalg.sym(stack.sum(axis=0))
        w, v = np.linalg.eigh(s)
        keep = w > tol * max(1.0, w.max(initial=0.0))
        if keep.all():
            continue
        basis = v[:, keep]
        if basis.shape[1] == 0:
            raise DomainError("all factors on one side vanish")
        a_stack = np.einsum("ku,aki,iv->auv", basis, a_stack, basis)
        b_stack = np.einsum("ku,aki,iv->auv", basis, b_stack, basis)
        moved = True
    if not moved:
        return f, False
    return make_factorization(list(a_stack), list(b_stack)), True


def from_protocol(pr: CorrelationProtocol, tol: float = DEFAULT_TOL) -> PsdFactorization:
    """Read a psd factorization of the outcome matrix from any protocol.

    Each eigenvector of the state contributes a block; pure states give
    factors of size k, mixed states a direct sum over the spectral terms.
    """
    k = pr.k
    w, vecs = np.linalg.eigh(pr.rho)
    keep = [t for t in range(len(w)) if w[t] > tol * max(1.0, w.max())]
    if not keep:
        raise DomainError("state has no usable spectral weight")

    row_blocks = [[] for _ in pr.alice.elements]
    col_blocks = [[] for _ in pr.bob.elements]
    for t in keep:
        kmat = np.sqrt(w[t]) * vecs[:, t].reshape(k, k)
        u, s, vt = np.linalg.svd(kmat)
        half = s > 0
        left = u[:, half] * np.sqrt(s[half])
        right = vt[half].T * np.sqrt(s[half])
        for i, fel in enumerate(pr.alice.elements):
            row_blocks[i].append(linalg.sym(left.T @ fel @ left))
        for j, gel in enumerate(pr.bob.elements):
            col_blocks[j].append(linalg.sym(right.T @ gel @ right))

    def assemble(blocks):
        sizes = [b.shape[0] for b in blocks[0]]
        total = sum(sizes)
        out = []
        for per in blocks:
            mat = np.zeros((total, total))
            at = 0
            for b in per:
                mat[at:at + b.shape[0], at:at + b.shape[0]] = b
                at += b.shape[0]
            out.append(mat)
        return out

    return make_factorization(assemble(row_blocks), assemble(col_blocks))


@dataclass(frozen=True)
class ProtocolReport:
    """Verification summary for a protocol against its target table."""

    max_residual: float
    completeness_residual: float
    state_psd_violation: float
    trace_error: float
    passed: bool

    def __str__(self):
        verdict = "pass" if self.passed else "FAIL"
        return (f"protocol {verdict}: residual {self.max_residual:.3e}, "
                f"completeness {self.completeness_residual:.3e}, "
                f"state eig {self.state_psd_violation:.3e}, "
                f"trace {self.trace_error:.3e}")


def verify_protocol(m, pr: CorrelationProtocol, tol: float = 1e-7) -> ProtocolReport:
    """Check the protocol reproduces m and is physically well formed."""
    mm = linalg.as_matrix(m)
    if mm.shape != (len(pr.alice), len(pr.bob)):
        raise InputError(f"matrix is {mm.shape}, protocol has "
                         f"{len(pr.alice)}x{len(pr.bob)} outcomes")
    residual = float(np.max(np.abs(pr.outcome_matrix() - mm)))
    eye = np.eye(pr.k)
    comp = max(
        float(np.max(np.abs(sum(pr.alice.elements) - eye))),
        float(np.max(np.abs(sum(pr.bob.elements) - eye))),
    )
    psd_viol = max(0.0, -linalg.min_eig(pr.rho))
    tr_err = abs(float(np.trace(pr.rho)) - 1.0)
    scale = linalg.scale_of(mm)
    passed = (residual <= tol * scale and comp <= tol
              and psd_viol <= tol and tr_err <= tol)
    return ProtocolReport(residual, comp, psd_viol, tr_err, passed)


def sample(pr: CorrelationProtocol, count: int, seed: int | None = None) -> np.ndarray:
    """Draw outcome pairs; returns a p x q table of counts.

    The same seed always yields the same table: a single uniform stream is
    pushed through the inverse cdf of the flattened outcome distribution.
    """
    if count < 0:
        raise InputError("count must be nonnegative")
    probs = pr.outcome_matrix().ravel()
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if total <= 0:
        raise DomainError("protocol has no outcome mass to sample")
    probs = probs / total
    rng = np.random.default_rng(seed)
    edges = np.cumsum(probs)
    edges[-1] = 1.0
    draws = np.searchsorted(edges, rng.random(count), side="right")
    flat = np.bincount(draws, minlength=probs.size)
    return flat.reshape(len(pr.alice), len(pr.bob))
