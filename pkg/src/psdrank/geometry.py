"""Planar geometry behind psd rank 2: slack matrices, sandwich pairs,
the ellipse feasibility program, factorization extraction, and MVEE.

A rank-3 nonnegative matrix is, after row normalization, the slack matrix of
a polygon P nested in a polyhedron Q. Its psd rank is 2 exactly when some
ellipse E satisfies P inside E inside Q; that containment is an SDP in the
quadratic form of E, with one multiplier per facet of Q tying E inside each
halfplane. A certifying ellipse converts into an explicit size-2
factorization through a fixed linear section of the 2x2 psd cone.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg, sdp
from .errors import DomainError, InputError, NumericalFailure
from .factors import PsdFactorization, make_factorization
from .linalg import DEFAULT_TOL

DEGENERATE_EIG = 1e-10


@dataclass(frozen=True)
class PolytopeV:
    vertices: np.ndarray  # (v, n)

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        if v.shape[0] < 1:
            raise InputError("polytope needs at least one vertex")
        if not np.all(np.isfinite(v)):
            raise InputError("vertices must be finite")
        object.__setattr__(self, "vertices", v)

    @property
    def dimension(self) -> int:
        return self.vertices.shape[1]


@dataclass(frozen=True)
class PolyhedronH:
    normals: np.ndarray  # (f, n), rows a_j
    offsets: np.ndarray  # (f,), values b_j; a_j . x <= b_j

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.normals, dtype=float))
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if a.shape[0] != b.size or a.shape[0] < 1:
            raise InputError("need one offset per inequality")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InputError("inequalities must be finite")
        object.__setattr__(self, "normals", a)
        object.__setattr__(self, "offsets", b)

    @property
    def dimension(self) -> int:
        return self.normals.shape[1]


@dataclass(frozen=True)
class SandwichPair:
    inner: PolytopeV
    outer: PolyhedronH

    def __post_init__(self):
        if self.inner.dimension != self.outer.dimension:
            raise InputError("inner and outer dimensions differ")

    def raw_slacks(self) -> np.ndarray:
        return self.outer.offsets[None, :] - self.inner.vertices @ self.outer.normals.T


def slack_matrix(p: PolytopeV, q: PolyhedronH, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Nonnegative matrix of slacks b_j - a_j . x_i; errors if P is not inside Q."""
    pair = SandwichPair(p, q)
    s = pair.raw_slacks()
    scale = linalg.scale_of(s)
    if np.min(s) < -tol * scale:
        worst = np.unravel_index(np.argmin(s), s.shape)
        raise DomainError(
            f"vertex {worst[0]} violates inequality {worst[1]} by {-float(s.min()):.3e}"
        )
    s = np.where(np.abs(s) <= tol * scale, 0.0, s)
    return s


def polytopes_from_matrix(m, tol: float = DEFAULT_TOL) -> SandwichPair:
    """Sandwich pair in R^(rank-1) whose slack matrix is the row-normalized input.

    Rows are rescaled to sum to one (a psd-rank-preserving diagonal scaling),
    a rank factorization is adjusted so both halves have unit row sums, and
    the affine chart dropping the last coordinate turns its rows into
    vertices and its columns into inequalities.
    """
    mm = linalg.as_matrix(m)
    if np.iscomplexobj(mm):
        raise InputError("matrix must be real")
    if np.min(mm) < -tol * linalg.scale_of(mm):
        raise InputError("matrix must be nonnegative")
    mm = np.clip(mm, 0.0, None)
    sums = mm.sum(axis=1)
    if np.min(sums) <= tol * linalg.scale_of(mm):
        raise InputError("every row must have positive sum")
    norm = mm / sums[:, None]

    u, v = linalg.rank_factorization(norm, tol)
    r = u.shape[1]
    z = v @ np.ones(v.shape[1])
    rot = _ones_completion(z)
    a = u @ np.linalg.inv(rot)
    b = rot @ v

    verts = a[:, : r - 1]
    normals = (b[r - 1, :][None, :] - b[: r - 1, :]).T
    offsets = b[r - 1, :]
    return SandwichPair(PolytopeV(verts), PolyhedronH(normals, offsets))


def _ones_completion(z: np.ndarray) -> np.ndarray:
    """Invertible R with R z = all-ones, built from a Householder reflection."""
    r = z.size
    nz = np.linalg.norm(z)
    if nz <= 0:
        raise InputError("rank factorization has a zero row-sum vector")
    w = z / nz - np.eye(r)[:, 0]
    wn = np.linalg.norm(w)
    if wn > 1e-12:
        h = np.eye(r) - 2.0 * np.outer(w, w) / (wn * wn)
    else:
        h = np.eye(r)
    s = np.eye(r)
    s[:, 0] = 1.0 / nz
    return s @ h


# ---------------------------------------------------------------------------
# ellipses


@dataclass(frozen=True)
class Ellipse:
    theta: np.ndarray       # 3x3 symmetric [[A, b], [b^T, c]]
    multipliers: np.ndarray  # one per outer inequality

    def __post_init__(self):
        t = linalg.check_symmetric(np.asarray(self.theta, dtype=float), name="ellipse form")
        if t.shape != (3, 3):
            raise InputError("ellipse form must be 3x3")
        object.__setattr__(self, "theta", t)
        object.__setattr__(self, "multipliers", np.asarray(self.multipliers, dtype=float).reshape(-1))

    @property
    def a_form(self) -> np.ndarray:
        return self.theta[:2, :2]

    @property
    def b_vec(self) -> np.ndarray:
        return self.theta[:2, 2]

    @property
    def c_val(self) -> float:
        return float(self.theta[2, 2])

    def is_degenerate(self, tol: float = DEGENERATE_EIG) -> bool:
        return linalg.min_eig(self.a_form) < tol

    def evaluate(self, x) -> float:
        """Quadratic q(x); the ellipse is {x : q(x) <= 0}."""
        h = np.append(np.asarray(x, dtype=float), 1.0)
        return float(h @ self.theta @ h)


def _facet_form(g: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros((3, 3))
    out[:2, 2] = g / 2.0
    out[2, :2] = g / 2.0
    out[2, 2] = -h
    return out


@dataclass(frozen=True)
class EllipseCheck:
    trace_error: float
    psd_violation: float
    vertex_violation: float
    facet_violation: float
    multiplier_violation: float
    passed: bool

    @property
    def worst(self) -> float:
        return max(self.trace_error, self.psd_violation, self.vertex_violation,
                   self.facet_violation, self.multiplier_violation)


def certify(pair: SandwichPair, e: Ellipse, tol: float = 1e-7) -> EllipseCheck:
    """Re-check the three certificate constraint families at tolerance tol."""
    a = e.a_form
    trace_error = abs(float(np.trace(a)) - 1.0)
    psd_violation = max(0.0, -linalg.min_eig(a))
    vertex_violation = max(
        (max(0.0, e.evaluate(x)) for x in pair.inner.vertices), default=0.0
    )
    facet_violation = 0.0
    normals, offsets = pair.outer.normals, pair.outer.offsets
    if e.multipliers.size != offsets.size:
        raise InputError("multiplier count does not match the outer inequality count")
    for g, h, lam in zip(normals, offsets, e.multipliers):
        block = e.theta - lam * _facet_form(g, h)
        facet_violation = max(facet_violation, max(0.0, -linalg.min_eig(block)))
    multiplier_violation = max(0.0, -float(np.min(e.multipliers, initial=0.0)))
    passed = (
        trace_error <= tol
        and psd_violation <= tol
        and vertex_violation <= tol
        and facet_violation <= tol
        and multiplier_violation <= tol
    )
    return EllipseCheck(trace_error, psd_violation, vertex_violation,
                        facet_violation, multiplier_violation, passed)


def compute_multipliers(pair: SandwichPair, theta, tol: float = 1e-9) -> np.ndarray:
    """Best facet multipliers for a given form: per facet, the lambda >= 0
    maximizing the minimum eigenvalue of theta - lambda * facet form."""
    theta = linalg.check_symmetric(np.asarray(theta, dtype=float), name="ellipse form")
    lams = []
    for g, h in zip(pair.outer.normals, pair.outer.offsets):
        form = _facet_form(np.asarray(g, dtype=float), float(h))

        def margin(lam):
            return linalg.min_eig(theta - lam * form)

        hi = 1.0
        while margin(hi * 2) > margin(hi) and hi < 1e8:
            hi *= 2
        lo = 0.0
        for _ in range(200):
            m1 = lo + (hi - lo) / 3
            m2 = hi - (hi - lo) / 3
            if margin(m1) < margin(m2):
                lo = m1
            else:
                hi = m2
            if hi - lo < tol * max(1.0, hi):
                break
        lams.append(0.5 * (lo + hi))
    return np.array(lams)


def ellipse_program(pair: SandwichPair) -> sdp.SdpProblem:
    """The containment SDP: find Theta (trace of the quadratic part 1) and
    multipliers with every vertex inside and every facet S-procedure block psd.

    Variables: (a11, a22, a12, b1, b2, c, lam_1..lam_f).
    """
    verts = pair.inner.vertices
    normals, offsets = pair.outer.normals, pair.outer.offsets
    if pair.inner.dimension != 2:
        raise InputError("ellipse program needs a planar pair")
    f = normals.shape[0]
    n = 6 + f

    def theta_coeffs():
        """(n, 3, 3) stack: d Theta / d variable."""
        out = np.zeros((n, 3, 3))
        out[0, 0, 0] = 1.0
        out[1, 1, 1] = 1.0
        out[2, 0, 1] = out[2, 1, 0] = 1.0
        out[3, 0, 2] = out[3, 2, 0] = 1.0
        out[4, 1, 2] = out[4, 2, 1] = 1.0
        out[5, 2, 2] = 1.0
        return out

    tc = theta_coeffs()
    blocks = []

    a_block = np.zeros((n + 1, 2, 2))
    a_block[1:, :, :] = tc[:, :2, :2]
    blocks.append(a_block)

    for x in verts:
        h = np.append(x, 1.0)
        quad = np.outer(h, h)
        blk = np.zeros((n + 1, 1, 1))
        for i in range(6):
            blk[i + 1, 0, 0] = -float(np.tensordot(tc[i], quad, axes=2))
        blocks.append(blk)

    for j, (g, hval) in enumerate(zip(normals, offsets)):
        form = _facet_form(np.asarray(g, dtype=float), float(hval))
        blk = np.zeros((n + 1, 3, 3))
        blk[1:7] = tc[:6]
        blk[7 + j] = -form
        blocks.append(blk)
        pos = np.zeros((n + 1, 1, 1))
        pos[7 + j, 0, 0] = 1.0
        blocks.append(pos)

    eq_a = np.zeros((1, n))
    eq_a[0, 0] = eq_a[0, 1] = 1.0
    return sdp.SdpProblem(n=n, blocks=blocks, eq_a=eq_a, eq_d=np.array([1.0]))


def _solution_to_ellipse(x: np.ndarray, f: int) -> Ellipse:
    theta = np.array(
        [
            [x[0], x[2], x[3]],
            [x[2], x[1], x[4]],
            [x[3], x[4], x[5]],
        ]
    )
    lams = np.clip(x[6 : 6 + f], 0.0, None)
    return Ellipse(theta, lams)


def decide_psd_rank_le_2(m, params: sdp.SdpParams | None = None):
    """(answer, certificate): is the psd rank of m at most 2?

    Matrices of usual rank <= 2 are a yes without a certificate (psd rank is
    at most the rank); rank >= 4 is a no since a size-2 factorization forces
    rank <= 3. The rank-3 core builds the planar pair and solves the ellipse
    containment program, accepting boundary-tight certificates.
    """
    mm = linalg.as_matrix(m)
    r = linalg.numerical_rank(mm)
    if r <= 2:
        return True, None
    if r >= 4:
        return False, None

    pair = polytopes_from_matrix(mm)
    problem = ellipse_program(pair)
    params = params or sdp.SdpParams()
    params = sdp.SdpParams(
        gap_tol=params.gap_tol, feas_tol=params.feas_tol, cert_tol=params.cert_tol,
        inner_tol=params.inner_tol, mu=params.mu, max_newton=params.max_newton,
        box=params.box, feasibility_point="margin",
    )
    sol = sdp.solve(problem, params)
    if sol.status == "feasible":
        return True, _solution_to_ellipse(sol.x, pair.outer.offsets.size)
    if sol.status == "infeasible":
        return False, None
    raise NumericalFailure(
        f"ellipse program undecided (margin {sol.margin}, gap {sol.gap})"
    )


def ellipse_path(e0: Ellipse, e1: Ellipse, t: float) -> Ellipse:
    """Convex combination of two certificates for the same pair; the combined
    form is renormalized to unit trace and inherits combined multipliers."""
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise InputError("path parameter must lie in [0, 1]")
    if e0.multipliers.size != e1.multipliers.size:
        raise InputError("certificates have different facet counts")
    theta = (1 - t) * e0.theta + t * e1.theta
    lams = (1 - t) * e0.multipliers + t * e1.multipliers
    tr = float(np.trace(theta[:2, :2]))
    if tr <= 0:
        raise DomainError("combined form has nonpositive trace")
    return Ellipse(theta / tr, lams / tr)


# ---------------------------------------------------------------------------
# factorization extraction


def _psd_section_maps(e: Ellipse):
    """Linear map phi with phi(psd cone of S^2) = cone over the ellipse.

    The section X = [[x1, x2], [x2, x3]] -> (x1+x3, x1-x3, 2 x2) carries the
    cone onto w1 >= |(w2, w3)|; a permutation plus the affine disk-to-ellipse
    map then lands on cone{(x, 1) : q(x) <= 0}.
    """
    a = e.a_form
    eig_min = linalg.min_eig(a)
    if eig_min < DEGENERATE_EIG:
        raise DomainError("degenerate certificate: quadratic part is singular")
    roots = linalg.psd_roots(a)
    center = -roots.pinv @ e.b_vec
    rho = float(e.b_vec @ roots.pinv @ e.b_vec) - e.c_val
    if rho < DEGENERATE_EIG:
        raise DomainError("degenerate certificate: empty or pointlike ellipse")
    sq = np.sqrt(rho)

    # disk cone (u1, u2, s) -> plane point (x, s): x = s*center + sq*inv_sqrt(A) u
    t_aff = np.zeros((3, 3))
    t_aff[:2, :2] = sq * roots.inv_sqrt
    t_aff[:2, 2] = center
    t_aff[2, 2] = 1.0
    perm = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    fwd = t_aff @ perm  # applied after the section map
    return fwd


def _section(x1, x2, x3):
    return np.array([x1 + x3, x1 - x3, 2.0 * x2])


def _section_inv(w):
    return np.array([[(w[0] + w[1]) / 2.0, w[2] / 2.0], [w[2] / 2.0, (w[0] - w[1]) / 2.0]])


def _section_adjoint(y):
    return np.array([[y[0] + y[1], y[2]], [y[2], y[0] - y[1]]])


def factorization_from_ellipse(m, pair: SandwichPair, e: Ellipse,
                               tol: float = DEFAULT_TOL) -> PsdFactorization:
    """Size-2 psd factorization of m from an ellipse certificate of its pair.

    Row factors are preimages of the homogenized vertices under the cone
    isomorphism, scaled per row to undo the slack normalization; column
    factors are adjoint images of the facet functionals (h_j, -g_j).
    """
    mm = linalg.as_matrix(m)
    if np.iscomplexobj(mm):
        raise InputError("matrix must be real")
    if linalg.numerical_rank(mm) != 3:
        raise DomainError("extraction needs a rank-3 matrix")
    slack = pair.raw_slacks()
    if mm.shape != slack.shape:
        raise InputError("matrix shape does not match the pair")
    msums = mm.sum(axis=1)
    ssums = slack.sum(axis=1)
    if np.any(ssums <= tol):
        raise DomainError("pair has a vertex with all-zero slack")
    ratios = msums / ssums
    if np.max(np.abs(mm - ratios[:, None] * slack)) > 1e-6 * linalg.scale_of(mm):
        raise InputError("matrix is not a row rescaling of the pair's slack matrix")

    fwd = _psd_section_maps(e)
    inv = np.linalg.inv(fwd)

    rows = []
    for x, r in zip(pair.inner.vertices, ratios):
        w = inv @ np.append(x, 1.0)
        rows.append(r * _section_inv(w))
    cols = []
    for g, h in zip(pair.outer.normals, pair.outer.offsets):
        y = fwd.T @ np.concatenate([-g, [h]])
        cols.append(_section_adjoint(y))
    return make_factorization(rows, cols, "real")


# ---------------------------------------------------------------------------
# minimum-volume enclosing ellipsoid


def mvee(shapes, symmetric: bool = True, slack_tol: float = 1e-8) -> sdp.MveeResult:
    """Minimum-volume origin-symmetric ellipsoid containing the union of
    {u : S - u u^T psd} over the given shape matrices.

    The input family is symmetric about the origin by construction (each
    member is), so the flag only documents intent; off-origin centers are out
    of scope.
    """
    if not symmetric:
        raise InputError("only origin-symmetric enclosing ellipsoids are supported")
    result = sdp.min_volume_shape(shapes, slack_tol=slack_tol)
    if np.min(result.containment_margins) < -1e-9:
        raise NumericalFailure("containment check failed after optimization")
    return result


# ---------------------------------------------------------------------------
# ready-made pairs


def square_pair() -> SandwichPair:
    """Unit square against itself, ordered so the slack matrix is the
    circulant 0/1 square slack matrix."""
    verts = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
    normals = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)]
    offsets = [1.0, 1.0, 0.0, 0.0]
    return SandwichPair(PolytopeV(verts), PolyhedronH(normals, offsets))


def nested_rectangles_pair(a: float, b: float) -> SandwichPair:
    """[-a, a] x [-b, b] inside [-1, 1]^2 with the standard facet order."""
    a, b = float(a), float(b)
    if not (0.0 <= a <= 1.0 and 0.0 <= b <= 1.0):
        raise InputError("rectangle half-widths must lie in [0, 1]")
    verts = [(a, b), (-a, b), (-a, -b), (a, -b)]
    normals = [(-1.0, 0.0), (0.0, -1.0), (1.0, 0.0), (0.0, 1.0)]
    offsets = [1.0, 1.0, 1.0, 1.0]
    return SandwichPair(PolytopeV(verts), PolyhedronH(normals, offsets))


def centered_square_pair(half: float = 1.0, outer_half: float = 2.0) -> SandwichPair:
    """Square [-half, half]^2 inside [-outer, outer]^2; slack rows follow the
    vertex order (-,-), (-,+), (+,+), (+,-) and facet order +y, +x, -y, -x."""
    h, o = float(half), float(outer_half)
    verts = [(-h, -h), (-h, h), (h, h), (h, -h)]
    normals = [(0.0, 1.0), (1.0, 0.0), (0.0, -1.0), (-1.0, 0.0)]
    offsets = [o, o, o, o]
    return SandwichPair(PolytopeV(verts), PolyhedronH(normals, offsets))
