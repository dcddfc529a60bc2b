"""Small dense semidefinite solver over block LMI constraints.

Problems are affine sections of psd cones: each block is a coefficient list
(F0, F1, .., Fn) meaning F0 + sum_i x_i F_i >= 0, with an optional linear
objective and linear equalities. The solver is a plain logarithmic-barrier
path follower with Newton centering; feasibility is decided through an
always-strictly-feasible max-margin reformulation whose dual supplies a
separation certificate on the infeasible side. Everything is dense and
deterministic; intended for block sizes up to ~30 and a few hundred
variables.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import InputError, NumericalFailure


@dataclass(frozen=True)
class SdpParams:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-7
    cert_tol: float = 1e-6
    inner_tol: float = 1e-10
    mu: float = 20.0
    max_newton: int = 120
    box: float = 1e6
    feasibility_point: str = "least_norm"  # or "margin"


@dataclass
class SdpProblem:
    n: int
    blocks: list
    c: np.ndarray | None = None
    eq_a: np.ndarray | None = None
    eq_d: np.ndarray | None = None

    def __post_init__(self):
        self.n = int(self.n)
        if self.n < 0:
            raise InputError("variable count must be nonnegative")
        clean = []
        for blk in self.blocks:
            mats = [linalg.check_symmetric(np.asarray(f, dtype=float), name="block matrix") for f in blk]
            if len(mats) != self.n + 1:
                raise InputError(f"block needs {self.n + 1} coefficient matrices, got {len(mats)}")
            sizes = {m.shape[0] for m in mats}
            if len(sizes) != 1:
                raise InputError("coefficient matrices in a block differ in size")
            clean.append(np.stack(mats))
        if not clean:
            raise InputError("problem has no constraint blocks")
        self.blocks = clean
        if self.c is None:
            self.c = np.zeros(self.n)
        else:
            self.c = np.asarray(self.c, dtype=float).reshape(-1)
            if self.c.size != self.n:
                raise InputError("objective length does not match variable count")
        if (self.eq_a is None) != (self.eq_d is None):
            raise InputError("equalities need both a matrix and an rhs")
        if self.eq_a is not None:
            self.eq_a = np.atleast_2d(np.asarray(self.eq_a, dtype=float))
            self.eq_d = np.asarray(self.eq_d, dtype=float).reshape(-1)
            if self.eq_a.shape != (self.eq_d.size, self.n):
                raise InputError("equality shapes inconsistent")

    def block_values(self, x):
        x = np.asarray(x, dtype=float)
        return [blk[0] + np.tensordot(x, blk[1:], axes=1) for blk in self.blocks]

    def margins(self, x):
        return np.array([linalg.min_eig(v) for v in self.block_values(x)])


@dataclass(frozen=True)
class SdpSolution:
    status: str
    x: np.ndarray | None
    block_margins: np.ndarray | None
    value: float | None = None
    margin: float | None = None
    gap: float | None = None
    duals: list | None = None
    eq_dual: np.ndarray | None = None
    certificate: dict | None = None
    newton_steps: int = 0


# ---------------------------------------------------------------------------
# barrier core over size-grouped block stacks


class _Cone:
    """Stacked LMI blocks of one common size: F0 (B,s,s), G (B,n,s,s)."""

    def __init__(self, f0, g, weights):
        self.f0 = np.ascontiguousarray(f0)
        self.g = np.ascontiguousarray(g)
        self.w = np.asarray(weights, dtype=float)
        self.s = f0.shape[-1]

    def values(self, x):
        return self.f0 + np.tensordot(x, self.g, axes=(0, 1))

    def try_chol(self, x):
        try:
            np.linalg.cholesky(self.values(x))
            return True
        except np.linalg.LinAlgError:
            return False

    def barrier(self, x):
        sign, logdet = np.linalg.slogdet(self.values(x))
        if np.any(sign <= 0):
            return np.inf
        return -float(self.w @ logdet)

    def grad_hess(self, x):
        f = self.values(x)
        finv_g = np.linalg.solve(f[:, None, :, :], self.g)
        traces = np.einsum("bikk->bi", finv_g)
        grad = -traces.T @ self.w
        hess = np.einsum("b,biuv,bjvu->ij", self.w, finv_g, finv_g)
        return grad, hess

def _group_blocks(blocks, weights=None):
    if weights is None:
        weights = [1.0] * len(blocks)
    by_size: dict = {}
    for blk, w in zip(blocks, weights):
        by_size.setdefault(blk.shape[-1], []).append((blk, w))
    cones = []
    for s in sorted(by_size):
        group = by_size[s]
        f0 = np.stack([blk[0] for blk, _ in group])
        g = np.stack([blk[1:] for blk, _ in group])
        cones.append(_Cone(f0, g, [w for _, w in group]))
    return cones


def _center(cones, c_lin, x0, eq_a=None, inner_tol=1e-10, max_newton=120):
    """Newton minimization of c_lin.x + sum of weighted block barriers.

    x0 must satisfy the equalities; Newton steps stay in their null space.
    Returns (x, mult, steps) where mult are the equality multipliers.
    """
    x = np.asarray(x0, dtype=float).copy()
    n = x.size
    if not all(cone.try_chol(x) for cone in cones):
        raise NumericalFailure("centering started outside the cone domain")
    mult = None
    for step in range(max_newton):
        grad = c_lin.copy()
        hess = np.zeros((n, n))
        for cone in cones:
            g, h = cone.grad_hess(x)
            grad += g
            hess += h
        hess = 0.5 * (hess + hess.T)
        if eq_a is not None:
            m = eq_a.shape[0]
            kkt = np.zeros((n + m, n + m))
            kkt[:n, :n] = hess
            kkt[:n, n:] = eq_a.T
            kkt[n:, :n] = eq_a
            rhs = np.concatenate([-grad, np.zeros(m)])
        else:
            kkt = hess
            rhs = -grad
        ridge = 0.0
        for _ in range(4):
            try:
                sol = np.linalg.solve(kkt + ridge * np.eye(kkt.shape[0]), rhs)
                break
            except np.linalg.LinAlgError:
                ridge = max(ridge * 100, 1e-12 * (1 + np.abs(kkt).max()))
        else:
            raise NumericalFailure("singular KKT system during centering")
        dx = sol[:n]
        mult = sol[n:] if eq_a is not None else None
        decrement = float(dx @ hess @ dx)
        if decrement <= 2 * inner_tol:
            return x, mult, step
        phi0 = float(c_lin @ x) + sum(cone.barrier(x) for cone in cones)
        # the predicted decrease is about half the decrement; once it drops
        # below the floating point resolution of the potential no further
        # progress is representable, however large the path weight got
        if decrement <= 64.0 * np.finfo(float).eps * (1.0 + abs(phi0)):
            return x, mult, step
        # damped step for large decrements keeps the iterate off the cone
        # boundary; plain backtracking from 1 can dive into it and stall
        lam = np.sqrt(max(decrement, 0.0))
        alpha = 1.0 if lam <= 0.25 else 1.0 / (1.0 + lam)
        slope = float(grad @ dx)
        for _ in range(80):
            xn = x + alpha * dx
            if all(cone.try_chol(xn) for cone in cones):
                phin = float(c_lin @ xn) + sum(cone.barrier(xn) for cone in cones)
                if phin <= phi0 + 0.25 * alpha * slope or alpha < 1e-14:
                    break
            alpha *= 0.5
        else:
            raise NumericalFailure("line search failed during centering")
        if np.array_equal(xn, x):
            return x, mult, step
        x = xn
    raise NumericalFailure("Newton iteration cap exceeded during centering")


# ---------------------------------------------------------------------------
# public solve


def solve(problem: SdpProblem, params: SdpParams | None = None) -> SdpSolution:
    """Decide feasibility or minimize the objective over the block section.

    Feasibility (zero objective) answers through a max-margin phase whose
    optimum sign is conclusive; strictly feasible problems then return a
    least-norm interior point unless params.feasibility_point == "margin".
    Optimization runs a barrier path from the margin point. Infeasible
    statuses carry a dual separation certificate, re-verified numerically
    before being reported; everything is deterministic.
    """
    params = params or SdpParams()
    p = problem
    n = p.n

    x_eq = np.zeros(n)
    if p.eq_a is not None:
        x_eq, *_ = np.linalg.lstsq(p.eq_a, p.eq_d, rcond=None)
        resid = p.eq_d - p.eq_a @ x_eq
        rnorm = float(np.linalg.norm(resid))
        if rnorm > params.feas_tol * (1.0 + np.linalg.norm(p.eq_d)):
            y = resid / max(rnorm, 1e-300)
            cert = {
                "kind": "inconsistent-equalities",
                "y": y,
                "value": -float(y @ p.eq_d),
                "residual": float(np.linalg.norm(p.eq_a.T @ y)),
                "scale": max(1.0, float(np.max(np.abs(p.eq_a)))),
            }
            if cert["value"] <= -params.cert_tol and cert["residual"] <= params.feas_tol * cert["scale"]:
                return SdpSolution("infeasible", None, None, certificate=cert)
            return SdpSolution("numerical-failure", None, None, certificate=cert)

    if np.max(np.abs(x_eq), initial=0.0) > 0.9 * params.box:
        return SdpSolution("numerical-failure", None, None)

    margin_sol = _max_margin(p, params, x_eq)
    if margin_sol.status != "ok":
        return SdpSolution("numerical-failure", None, None, newton_steps=margin_sol.steps)
    tau = margin_sol.tau
    gap = margin_sol.gap
    steps = margin_sol.steps

    if tau + gap < -params.feas_tol:
        cert = margin_sol.certificate
        if (cert is not None and cert["value"] <= -params.cert_tol
                and cert["residual"] <= params.feas_tol * cert["scale"]):
            return SdpSolution("infeasible", None, None, margin=tau, gap=gap,
                               certificate=cert, newton_steps=steps)
        return SdpSolution("numerical-failure", None, None, margin=tau, gap=gap,
                           certificate=cert, newton_steps=steps)

    if tau < -params.feas_tol:
        return SdpSolution("numerical-failure", None, None, margin=tau, gap=gap, newton_steps=steps)

    x_margin = margin_sol.x
    feasibility = not np.any(p.c)
    # every block margin at the iterate strictly exceeds its tau value
    strict = tau > 1e-9

    if feasibility:
        x_out = x_margin
        if strict and params.feasibility_point == "least_norm":
            try:
                x_out, extra = _least_norm(p, params, x_margin)
                steps += extra
            except NumericalFailure:
                x_out = x_margin
        margins = p.margins(x_out)
        return SdpSolution("feasible", x_out, margins, value=0.0, margin=float(margins.min()),
                           gap=gap, newton_steps=steps)

    if not strict:
        return SdpSolution("numerical-failure", x_margin, p.margins(x_margin), margin=tau,
                           gap=gap, newton_steps=steps)
    return _optimize(p, params, x_margin, steps)


@dataclass
class _MarginResult:
    status: str
    tau: float = 0.0
    gap: float = np.inf
    x: np.ndarray | None = None
    certificate: dict | None = None
    steps: int = 0


def _margin_blocks(p: SdpProblem, params: SdpParams):
    """Blocks of the margin problem in variables (x, tau)."""
    n = p.n
    ext = []
    for blk in p.blocks:
        s = blk.shape[-1]
        g_tau = -np.eye(s)[None]
        ext.append(np.concatenate([blk, g_tau], axis=0))
    cap = np.zeros((n + 2, 1, 1))
    cap[0, 0, 0] = 1.0
    cap[n + 1, 0, 0] = -1.0
    ext.append(cap)
    for i in range(n):
        for sign in (1.0, -1.0):
            box = np.zeros((n + 2, 1, 1))
            box[0, 0, 0] = params.box
            box[i + 1, 0, 0] = sign
            ext.append(box)
    return ext


def _max_margin(p: SdpProblem, params: SdpParams, x_eq) -> _MarginResult:
    n = p.n
    blocks = _margin_blocks(p, params)
    nu = sum(b.shape[-1] for b in blocks)
    base_margin = min(linalg.min_eig(v) for v in p.block_values(x_eq))
    tau0 = min(base_margin, 1.0) - 1.0
    x0 = np.concatenate([x_eq, [tau0]])

    eq = None
    if p.eq_a is not None:
        eq = np.hstack([p.eq_a, np.zeros((p.eq_a.shape[0], 1))])

    c_obj = np.zeros(n + 1)
    c_obj[n] = -1.0

    target = min(params.gap_tol, params.cert_tol / 10, params.feas_tol / 10)
    decisive = max(10.0 * params.feas_tol, 1e-6)
    cones = _group_blocks(blocks)
    t = 1.0
    x = x0
    total = 0
    last = None
    while True:
        try:
            x, mult, used = _center(cones, t * c_obj, x, eq,
                                    params.inner_tol, params.max_newton)
        except NumericalFailure:
            # keep the last finished stage: the decision bands stay sound
            # at any achieved gap, and deeper t values exceed float64 anyway
            if last is None:
                return _MarginResult("failed", steps=total)
            x, mult, t = last
            break
        total += used + 1
        tau = float(x[n])
        if tau >= decisive:
            # the iterate itself proves strict feasibility; refining the
            # margin further only pushes x toward the box scale
            return _MarginResult("ok", tau, nu / t, x[:n], None, total)
        if tau + nu / t < -params.feas_tol:
            cert = _margin_certificate(p, params, x, mult, t)
            if (cert is not None and cert["value"] <= -params.cert_tol
                    and cert["residual"] <= params.feas_tol * cert["scale"]):
                return _MarginResult("ok", tau, nu / t, x[:n], cert, total)
        last = (x, mult, t)
        if nu / t <= target:
            break
        t *= params.mu

    tau = float(x[n])
    gap = nu / t
    cert = _margin_certificate(p, params, x, mult, t)
    return _MarginResult("ok", tau, gap, x[:n], cert, total)


def _margin_certificate(p: SdpProblem, params: SdpParams, x_full, mult, t):
    """Normalized dual of the margin problem, box terms dropped."""
    n = p.n
    x = x_full[:n]
    tau = x_full[n]
    zs = []
    total_tr = 0.0
    for blk in p.blocks:
        s = blk.shape[-1]
        f = blk[0] + np.tensordot(x, blk[1:], axes=1) - tau * np.eye(s)
        try:
            z = np.linalg.inv(f) / t
        except np.linalg.LinAlgError:
            return None
        z = 0.5 * (z + z.T)
        zs.append(z)
        total_tr += float(np.trace(z))
    if total_tr <= 0:
        return None
    zs = [z / total_tr for z in zs]
    res = np.array([
        sum(float(np.tensordot(z, blk[1 + i], axes=2)) for z, blk in zip(zs, p.blocks))
        for i in range(n)
    ])
    # trace of each dual is <= 1, so residuals are judged against the
    # coefficient magnitudes rather than absolutely
    gscale = max(
        (float(np.linalg.norm(blk[1 + i])) for blk in p.blocks for i in range(n)),
        default=1.0,
    )
    y = None
    value = sum(float(np.tensordot(z, blk[0], axes=2)) for z, blk in zip(zs, p.blocks))
    if p.eq_a is not None:
        y, *_ = np.linalg.lstsq(p.eq_a.T, -res, rcond=None)
        correction = p.eq_a.T @ y
        res = res + correction
        value -= float(y @ p.eq_d)
        gscale = max(gscale, float(np.max(np.abs(correction), initial=0.0)))
    return {
        "kind": "separating-dual",
        "blocks": zs,
        "y": y,
        "value": value,
        "residual": float(np.max(np.abs(res), initial=0.0)),
        "scale": max(1.0, gscale),
    }


def _least_norm(p: SdpProblem, params: SdpParams, x_margin):
    """Phase-2 path toward the minimum-norm feasible point."""
    n = p.n
    epi = np.zeros((n + 2, n + 1, n + 1))
    epi[0, :n, :n] = np.eye(n)
    for i in range(n):
        epi[i + 1, i, n] = 1.0
        epi[i + 1, n, i] = 1.0
    epi[n + 1, n, n] = 1.0

    blocks = [np.concatenate([blk, np.zeros((1,) + blk.shape[1:])], axis=0) for blk in p.blocks]
    blocks.append(epi)
    nu = sum(b.shape[-1] for b in blocks)
    cones = _group_blocks(blocks)

    eq = None
    if p.eq_a is not None:
        eq = np.hstack([p.eq_a, np.zeros((p.eq_a.shape[0], 1))])

    c_obj = np.zeros(n + 1)
    c_obj[n] = 1.0
    # start the path where its center sits near the warm start: a t=1 start
    # from a huge margin point forces one giant traverse that collapses the
    # epigraph slack and stalls Newton on the cone boundary
    norm2 = float(x_margin @ x_margin)
    x = np.concatenate([x_margin, [2.0 * norm2 + 1.0]])
    t = min(1.0, 1.0 / max(1.0, norm2))
    total = 0
    while True:
        x, _, used = _center(cones, t * c_obj, x, eq, params.inner_tol, params.max_newton)
        total += used + 1
        if nu / t <= params.gap_tol * max(1.0, abs(float(x[n]))):
            return x[:n], total
        t *= params.mu


def _optimize(p: SdpProblem, params: SdpParams, x_margin, steps):
    n = p.n
    blocks = list(p.blocks)
    for i in range(n):
        for sign in (1.0, -1.0):
            box = np.zeros((n + 1, 1, 1))
            box[0, 0, 0] = params.box
            box[i + 1, 0, 0] = sign
            blocks.append(box)
    nu = sum(b.shape[-1] for b in blocks)
    cones = _group_blocks(blocks)

    x = x_margin
    t = min(1.0, nu / (1.0 + abs(float(p.c @ x))))
    total = steps
    try:
        while True:
            x, mult, used = _center(cones, t * p.c, x, p.eq_a, params.inner_tol, params.max_newton)
            total += used + 1
            gap = nu / t
            if gap <= params.gap_tol * max(1.0, abs(float(p.c @ x))):
                break
            t *= params.mu
    except NumericalFailure:
        return SdpSolution("numerical-failure", None, None, newton_steps=total)

    if np.max(np.abs(x), initial=0.0) >= 0.99 * params.box:
        return SdpSolution("numerical-failure", x, p.margins(x), gap=gap, newton_steps=total)

    duals = []
    for blk in p.blocks:
        f = blk[0] + np.tensordot(x, blk[1:], axes=1)
        try:
            duals.append(0.5 * (np.linalg.inv(f) + np.linalg.inv(f).T) / t)
        except np.linalg.LinAlgError:
            duals.append(None)
    y = None if mult is None else np.asarray(mult) / t
    margins = p.margins(x)
    return SdpSolution("optimal", x, margins, value=float(p.c @ x), margin=float(margins.min()),
                       gap=gap, duals=duals, eq_dual=y, newton_steps=total)


# ---------------------------------------------------------------------------
# determinant maximization: minimum-volume origin-symmetric enclosing ellipsoid


@dataclass(frozen=True)
class MveeResult:
    p: np.ndarray
    containment_margins: np.ndarray
    path_parameter: float
    logdet_gap: float
    polar_slack: float


def _sym_basis(d):
    """vecm-ordered basis of d x d symmetric matrices (diagonal first)."""
    mats = []
    for i in range(d):
        e = np.zeros((d, d))
        e[i, i] = 1.0
        mats.append(e)
    r = 1.0 / np.sqrt(2.0)
    for i in range(d):
        for j in range(i + 1, d):
            e = np.zeros((d, d))
            e[i, j] = e[j, i] = r
            mats.append(e)
    return np.stack(mats)


def min_volume_shape(shapes, slack_tol: float = 1e-8, inner_tol: float = 1e-10,
                     mu: float = 20.0) -> MveeResult:
    """Shape matrix P of the min-volume origin-symmetric ellipsoid containing
    all {u : S - u u^T >= 0} for S in shapes.

    Maximizes log det P subject to S^(1/2) P S^(1/2) <= I via the barrier
    path; running the path parameter to (number of shapes)/slack_tol makes
    the polar bound max_{v: S - vv^T >= 0} v' P^-1 v <= d * max_trace-ish
    hold with relative slack <= slack_tol, and containment is exact at every
    interior central point.
    """
    shapes = [linalg.check_symmetric(np.asarray(s, dtype=float), name="shape") for s in shapes]
    if not shapes:
        raise InputError("need at least one shape")
    d = shapes[0].shape[0]
    if any(s.shape[0] != d for s in shapes):
        raise InputError("shapes differ in size")
    total = sum(shapes)
    wmax = float(np.linalg.eigvalsh(total)[-1])
    if wmax <= 0 or linalg.numerical_rank(total) < d:
        raise InputError("shape union does not span the space")

    roots = []
    lam_max = 0.0
    for s in shapes:
        w, v = np.linalg.eigh(s)
        w = np.clip(w, 0.0, None)
        roots.append((v * np.sqrt(w)) @ v.T)
        lam_max = max(lam_max, float(w[-1]) if w.size else 0.0)
    # work at unit top eigenvalue so the barrier sees O(1) coefficients no
    # matter how the caller scaled the shapes; undone on the optimal P below
    roots = [r / np.sqrt(lam_max) for r in roots]

    basis = _sym_basis(d)
    nvar = basis.shape[0]

    blocks = []
    own = np.concatenate([np.zeros((1, d, d)), basis], axis=0)
    blocks.append(own)
    for r in roots:
        g = np.stack([-r @ e @ r for e in basis])
        blocks.append(np.concatenate([np.eye(d)[None], g], axis=0))

    n_shapes = len(shapes)
    x = linalg.vecm(0.5 * np.eye(d))

    t_final = max(10.0 * n_shapes / slack_tol, 1.0)
    t = 1.0
    while True:
        weights = [t] + [1.0] * n_shapes
        cones = _group_blocks(blocks, weights)
        x, _, _ = _center(cones, np.zeros(nvar), x, None, inner_tol)
        if t >= t_final:
            break
        t = min(t * mu, t_final)

    p = np.tensordot(x, basis, axes=1)
    p = 0.5 * (p + p.T)
    margins = np.array([linalg.min_eig(np.eye(d) - r @ p @ r) for r in roots])
    logdet_gap = n_shapes * d / t
    return MveeResult(p / lam_max, margins, t, logdet_gap, n_shapes / t)
