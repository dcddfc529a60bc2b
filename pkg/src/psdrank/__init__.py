"""Tools for the positive semidefinite rank of nonnegative matrices.

Factorizations and their verification, certified rank intervals, the exact
psd-rank-2 decision through ellipse containment, trace and John-ellipsoid
rescalings, quantum correlation protocols, and completely psd checks.
"""
from .bounds import (
    BoundOptions,
    RankInterval,
    SqrtRankResult,
    psd_rank_interval,
    psd_rank_lower,
    psd_rank_upper,
    rank_to_min_size,
    sqrt_rank_exact,
)
from .cpsd import SymmetricGram, dnn_check, horn_certificate, verify_cpsd
from .errors import (
    DomainError,
    InputError,
    NumericalFailure,
    PsdRankError,
    ResourceError,
)
from .factors import (
    PsdFactorization,
    VerificationReport,
    add,
    compose_right,
    derangement_factorization,
    direct_sum,
    from_hadamard_sqrt,
    from_nonneg_factorization,
    hermitian_derangement4,
    hermitian_embed,
    kron_factorization,
    make_factorization,
    rank1_expand,
    rescale_john,
    rescale_trace,
    verify,
)
from .families import FAMILIES, generate, known_facts
from .geometry import (
    Ellipse,
    PolyhedronH,
    PolytopeV,
    SandwichPair,
    certify,
    decide_psd_rank_le_2,
    ellipse_path,
    ellipse_program,
    factorization_from_ellipse,
    mvee,
    polytopes_from_matrix,
    slack_matrix,
)
from .quantum import (
    CorrelationProtocol,
    Povm,
    from_protocol,
    sample,
    to_protocol,
    verify_protocol,
)
from .sdp import SdpParams, SdpProblem, SdpSolution, min_volume_shape, solve

__version__ = "0.1.0"

__all__ = [
    "BoundOptions",
    "CorrelationProtocol",
    "DomainError",
    "Ellipse",
    "FAMILIES",
    "InputError",
    "NumericalFailure",
    "PolyhedronH",
    "PolytopeV",
    "Povm",
    "PsdFactorization",
    "PsdRankError",
    "RankInterval",
    "ResourceError",
    "SandwichPair",
    "SdpParams",
    "SdpProblem",
    "SdpSolution",
    "SqrtRankResult",
    "SymmetricGram",
    "VerificationReport",
    "add",
    "certify",
    "compose_right",
    "decide_psd_rank_le_2",
    "derangement_factorization",
    "direct_sum",
    "dnn_check",
    "ellipse_path",
    "ellipse_program",
    "factorization_from_ellipse",
    "from_hadamard_sqrt",
    "from_nonneg_factorization",
    "from_protocol",
    "generate",
    "hermitian_derangement4",
    "hermitian_embed",
    "horn_certificate",
    "known_facts",
    "kron_factorization",
    "make_factorization",
    "min_volume_shape",
    "mvee",
    "polytopes_from_matrix",
    "psd_rank_interval",
    "psd_rank_lower",
    "psd_rank_upper",
    "rank1_expand",
    "rank_to_min_size",
    "rescale_john",
    "rescale_trace",
    "sample",
    "slack_matrix",
    "solve",
    "sqrt_rank_exact",
    "to_protocol",
    "verify",
    "verify_cpsd",
    "verify_protocol",
]
