"""Shared fixtures: a catalog of classical psd factorizations with exact entries.

Every factorization below is transcribed literally and was cross-checked
against the defining inner products M_ij = <A_i, B_j> with an independent
numpy-only script before being frozen here. Tests treat these as ground
truth; nothing in the catalog is produced by the package itself.
"""

import numpy as np
import pytest

from psdrank.factors import make_factorization


class CatalogEntry:
    def __init__(self, name, matrix, factorization):
        self.name = name
        self.matrix = np.asarray(matrix, dtype=complex if np.iscomplexobj(matrix) else float)
        self.factorization = factorization

    def __repr__(self):
        return f"CatalogEntry({self.name})"


def _sym(rows):
    return np.array(rows, dtype=float)


# 3x3 zero-diagonal all-ones matrix with its classical size-2 factorization.
D3 = _sym([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
D3_ROWS = [_sym([[1, 0], [0, 0]]), _sym([[0, 0], [0, 1]]), _sym([[1, -1], [-1, 1]])]
D3_COLS = [_sym([[0, 0], [0, 1]]), _sym([[1, 0], [0, 0]]), _sym([[1, 1], [1, 1]])]

# 6x6 version through size-3 factors: basis projectors plus the three
# difference forms on the row side, their half-filled complements on the
# column side.
D6 = np.ones((6, 6)) - np.eye(6)


def _basis_proj(i, k=3):
    e = np.zeros(k)
    e[i] = 1.0
    return np.outer(e, e)


def _diff_form(i, j, k=3):
    z = np.zeros((k, k))
    z[i, i] = z[j, j] = 1.0
    z[i, j] = z[j, i] = -1.0
    return z


D6_ROWS = [_basis_proj(0), _basis_proj(1), _basis_proj(2),
           _diff_form(0, 1), _diff_form(0, 2), _diff_form(1, 2)]
D6_COLS = [
    _sym([[0, 0, 0], [0, 1, 0.5], [0, 0.5, 1]]),
    _sym([[1, 0, 0.5], [0, 0, 0], [0.5, 0, 1]]),
    _sym([[1, 0.5, 0], [0.5, 1, 0], [0, 0, 0]]),
    _sym([[1, 1, 0.5], [1, 1, 0.5], [0.5, 0.5, 1]]),
    _sym([[1, 0.5, 1], [0.5, 1, 0.5], [1, 0.5, 1]]),
    _sym([[1, 0.5, 0.5], [0.5, 1, 1], [0.5, 1, 1]]),
]

# 4x4 zero-diagonal all-ones matrix: Hermitian size-2 factors built from a
# primitive cube root of unity.
D4 = np.ones((4, 4)) - np.eye(4)
_W = np.exp(2j * np.pi / 3)
D4_ROWS = [a.astype(complex) for a in D3_ROWS] + [np.array([[1, _W], [np.conj(_W), 1]])]
D4_COLS = [b.astype(complex) for b in D3_COLS] + [np.array([[1, -_W], [-np.conj(_W), 1]])]

# Slack matrix of the unit square against itself, rank-one size-3 factors.
MSQUARE = _sym([[1, 1, 0, 0], [0, 1, 1, 0], [0, 0, 1, 1], [1, 0, 0, 1]])
SQUARE_US = [np.array(v, dtype=float) for v in [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]]
SQUARE_VS = [np.array(v, dtype=float) for v in [(1, 0, 0), (1, -1, 0), (0, 1, -1), (0, 0, 1)]]

# Slack matrix of a square nested in its doubled copy; two genuinely
# different size-2 factorizations, one from the inscribed circle (row factors
# all rank one) and one from a 4x3-axis ellipse (column factors 2 and 4 rank
# one).
MDIFF = _sym([[3, 3, 1, 1], [1, 3, 3, 1], [1, 1, 3, 3], [3, 1, 1, 3]])
_AL = 1.0 / np.sqrt(2.0)
DIFF_CIRCLE_ROWS = [
    _sym([[1 + _AL, _AL], [_AL, 1 - _AL]]),
    _sym([[1 - _AL, _AL], [_AL, 1 + _AL]]),
    _sym([[1 - _AL, -_AL], [-_AL, 1 + _AL]]),
    _sym([[1 + _AL, -_AL], [-_AL, 1 - _AL]]),
]
DIFF_CIRCLE_COLS = [
    _sym([[1 + _AL, 0], [0, 1 - _AL]]),
    _sym([[1, _AL], [_AL, 1]]),
    _sym([[1 - _AL, 0], [0, 1 + _AL]]),
    _sym([[1, -_AL], [-_AL, 1]]),
]
DIFF_AXIS_ROWS = [
    _sym([[5 / 3, 1 / 2], [1 / 2, 1 / 3]]),
    _sym([[1 / 3, 1 / 2], [1 / 2, 5 / 3]]),
    _sym([[1 / 3, -1 / 2], [-1 / 2, 5 / 3]]),
    _sym([[5 / 3, -1 / 2], [-1 / 2, 1 / 3]]),
]
DIFF_AXIS_COLS = [
    _sym([[7 / 4, 0], [0, 1 / 4]]),
    _sym([[1, 1], [1, 1]]),
    _sym([[1 / 4, 0], [0, 7 / 4]]),
    _sym([[1, -1], [-1, 1]]),
]

# Augmented 4x4 matrix whose every size-2 factorization needs a rank-two row
# factor and a rank-two column factor; the explicit factors extend the 3x3
# ones above.
MAUG = _sym([[0, 1, 1, 2], [1, 0, 1, 2], [1, 1, 0, 6], [1, 1, 3, 3]])
AUG_ROWS = D3_ROWS + [_sym([[1, 0.5], [0.5, 1]])]
AUG_COLS = D3_COLS + [_sym([[2, -1], [-1, 2]])]

# Partition-style matrix for the weights (5, 12, 13): no rank-3 Hadamard
# square root exists, yet this size-3 factorization does.
MPART = _sym([[1, 0, 0, 25], [0, 1, 0, 144], [0, 0, 1, 169], [1, 1, 1, 0]])
PART_ROWS = [_basis_proj(0), _basis_proj(1), _basis_proj(2),
             _sym([[1, 0, -5 / 13], [0, 1, -12 / 13], [-5 / 13, -12 / 13, 1]])]
PART_COLS = [_basis_proj(0), _basis_proj(1), _basis_proj(2),
             np.outer([5.0, 12.0, 13.0], [5.0, 12.0, 13.0])]


def build_catalog():
    return [
        CatalogEntry("derangement3", D3, make_factorization(D3_ROWS, D3_COLS)),
        CatalogEntry("derangement6", D6, make_factorization(D6_ROWS, D6_COLS)),
        CatalogEntry("hermitian-derangement4", D4,
                     make_factorization(D4_ROWS, D4_COLS, "hermitian")),
        CatalogEntry("square-slack", MSQUARE,
                     make_factorization([np.outer(u, u) for u in SQUARE_US],
                                        [np.outer(v, v) for v in SQUARE_VS])),
        CatalogEntry("nested-squares-circle", MDIFF,
                     make_factorization(DIFF_CIRCLE_ROWS, DIFF_CIRCLE_COLS)),
        CatalogEntry("nested-squares-axis-ellipse", MDIFF,
                     make_factorization(DIFF_AXIS_ROWS, DIFF_AXIS_COLS)),
        CatalogEntry("augmented-fullrank", MAUG, make_factorization(AUG_ROWS, AUG_COLS)),
        CatalogEntry("partition-5-12-13", MPART, make_factorization(PART_ROWS, PART_COLS)),
    ]


@pytest.fixture(scope="session")
def catalog():
    return build_catalog()


@pytest.fixture(params=[e.name for e in build_catalog()])
def catalog_entry(request, catalog):
    return next(e for e in catalog if e.name == request.param)


def random_psd(rng, k, rank=None):
    """Random psd matrix, optionally rank-limited."""
    r = k if rank is None else rank
    g = rng.standard_normal((k, r))
    return g @ g.T


def random_factorization(rng, p, q, k):
    """Random factorization together with the matrix it factors."""
    rows = [random_psd(rng, k) for _ in range(p)]
    cols = [random_psd(rng, k) for _ in range(q)]
    f = make_factorization(rows, cols)
    return f.matrix(), f
