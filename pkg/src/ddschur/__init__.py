"""Double-double Schur decomposition by mixed-precision refinement.

A binary64 Schur factorization is sharpened to roughly 32 significant
digits by a Newton-type iteration: a triangular matrix-equation solve in
binary64 supplies the correction, and a Newton-Schulz step restores
orthonormality in double-double arithmetic.
"""

from .backend import BACKEND
from .dd import (
    DDComplex,
    DDReal,
    U_HP,
    dd_add,
    dd_div,
    dd_mul,
    dd_sqrt,
    dd_sub,
    hp_to_lp,
    lp_to_hp,
)
from .ddmatrix import DDMatrix, frobenius_norm, precision_convert, stril_extract
from .matmul import counters, matmul_hp, matmul_lp, reset_counters
from .orthogonal import (
    NormTooLarge,
    OrthoStrategy,
    RankDeficient,
    merged_update,
    newton_schulz_step,
    qr_retract,
)
from .refine import (
    NotSymmetric,
    RefineConfig,
    RefineReport,
    RefineStatus,
    VerifyResiduals,
    refine_mixed,
    refine_symmetric,
    refine_template,
    verify_pair,
)
from .schur import NoConvergence, SchurPair, qr_schur_lp
from .trisolve import (
    NonFiniteError,
    SeparationError,
    TriEqProblem,
    TriEqSolution,
    phi_estimate,
    solve_block,
    solve_scalar,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DDComplex",
    "DDMatrix",
    "DDReal",
    "NoConvergence",
    "NonFiniteError",
    "NormTooLarge",
    "NotSymmetric",
    "OrthoStrategy",
    "RankDeficient",
    "RefineConfig",
    "RefineReport",
    "RefineStatus",
    "SchurPair",
    "SeparationError",
    "TriEqProblem",
    "TriEqSolution",
    "U_HP",
    "VerifyResiduals",
    "counters",
    "dd_add",
    "dd_div",
    "dd_mul",
    "dd_sqrt",
    "dd_sub",
    "frobenius_norm",
    "hp_to_lp",
    "lp_to_hp",
    "matmul_hp",
    "matmul_lp",
    "merged_update",
    "newton_schulz_step",
    "phi_estimate",
    "precision_convert",
    "qr_retract",
    "qr_schur_lp",
    "refine_mixed",
    "refine_symmetric",
    "refine_template",
    "reset_counters",
    "solve_block",
    "solve_scalar",
    "stril_extract",
    "verify_pair",
    "__version__",
]
