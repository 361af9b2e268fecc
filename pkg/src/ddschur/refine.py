"""Iterative refinement of Schur decompositions across two precisions.

The drivers here wrap one loop: measure the triangularization defect of the
current unitary candidate in double-double, solve a strictly-lower commutator
equation for a correction in plain binary64, and fold the correction back
into Q with one of the orthogonalization strategies.  Per full iteration the
loop spends exactly four double-double matrix products (two for T = Q^H A Q,
one for Q^H Q, one for the update), plus two up front for the entry
Newton-Schulz step; a skip heuristic can save the update product in the
final iteration once the correction is provably negligible.

`refine_template` refines a user-supplied candidate, `refine_mixed` builds
the candidate from a binary64 Schur factorization, and `refine_symmetric`
specializes the correction solve to Hermitian input, where it collapses to
an entrywise division.  `verify_pair` recomputes the three quality residuals
of a finished pair independently of any report bookkeeping.
"""

import dataclasses
import enum
import math
import time
from typing import NamedTuple

import numpy as np

from .dd import DDComplex, U_HP
from .ddmatrix import DDMatrix, TriangleKind, _masks, frobenius_norm, stril_extract
from .matmul import counters, matmul_hp, matmul_lp
from .orthogonal import OrthoStrategy, merged_update, newton_schulz_step, qr_retract
from .schur import SchurPair, order_by_random_line, qr_schur_lp, reorder_schur
from .trisolve import NonFiniteError, SeparationError, TriEqProblem, solve_block


class NotSymmetric(Exception):
    """Input to the Hermitian driver is not Hermitian within tolerance."""


class RefineStatus(enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxIters"
    DIVERGED = "Diverged"
    NON_FINITE = "NonFinite"


# consecutive residual increases before a run is declared divergent
DIVERGENCE_STREAK = 3

_CLIP_HINT = ("clipping is disabled; retrying with clip_threshold=1e-5 may "
              "contain the blowup")


@dataclasses.dataclass
class RefineConfig:
    """Knobs for one refinement run.

    tol_factor scales the stopping bound tol_factor * n * u_hp * ||A||_F.
    clip_threshold of None disables correction clipping.  seed feeds the
    eigenvalue-ordering line in refine_mixed / refine_symmetric and nothing
    else; two runs with equal seeds replay the same ordering bit for bit.
    """

    tol_factor: float = 10.0
    max_iters: int = 20
    n_min: int = 4
    clip_threshold: float | None = None
    ortho: OrthoStrategy = OrthoStrategy.NEWTON_SCHULZ
    skip_final_ortho: bool = True
    seed: int = 0
    restore_full_sigma: bool = False

    def __post_init__(self):
        if not self.tol_factor > 0.0:
            raise ValueError("tol_factor must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if self.n_min < 2:
            raise ValueError("n_min must be at least 2")
        if self.clip_threshold is not None and not self.clip_threshold > 0.0:
            raise ValueError("clip_threshold must be positive when set")
        if not isinstance(self.ortho, OrthoStrategy):
            raise ValueError("ortho must be an OrthoStrategy")


@dataclasses.dataclass
class RefineReport:
    """Outcome bookkeeping for one refinement run.

    residual_history holds (||E||_F, ||Q^H Q - I||_F) pairs; entry [0] is
    the state measured in binary64 right after the entry orthogonalization,
    entries [1:] are double-double measurements, one per loop iteration, so
    the list always has iterations + 1 rows.
    """

    iterations: int
    residual_history: list
    hp_matmul_count: int
    clipped_total: int
    status: RefineStatus
    wall_time: float
    skip_fired: bool = False
    detail: str = ""


class VerifyResiduals(NamedTuple):
    ortho_residual: float
    tri_residual: float
    similarity_residual: float


# ---------------------------------------------------------------------------
# split helpers


def _split_offdiag(m):
    """Split square m into (E, T): E the full off-diagonal part, T = diag(m).

    Pure masking like stril_extract, so E + T reassembles m bit for bit.
    """
    mask = _masks(m.rows, m.cols, TriangleKind.DIAGONAL)
    e = DDMatrix(*(np.where(mask, 0.0, c) for c in m.cells()))
    t = DDMatrix(*(np.where(mask, c, 0.0) for c in m.cells()))
    return e, t


def _entry_residuals(a_lp, q_lp, symmetric):
    """Binary64 entry-state measurement: (||E||_F, ||Q^H Q - I||_F)."""
    n = a_lp.shape[0]
    that = matmul_lp(matmul_lp(q_lp, a_lp, trans_a=True), q_lp)
    if symmetric:
        e = np.where(np.eye(n, dtype=bool), 0.0, that)
    else:
        e = np.tril(that, -1)
    y = matmul_lp(q_lp, q_lp, trans_a=True) - np.eye(n)
    return float(np.linalg.norm(e, "fro")), float(np.linalg.norm(y, "fro"))


def _solve_diagonal_correction(t_lp_diag, e_lp, clip_threshold):
    """L for diagonal T: l_ij = -e_ij / (t_ii - t_jj) on the strict lower part.

    Entrywise closed form of the commutator equation; never touches the
    triangular-solver module.  Raises SeparationError on exactly repeated
    diagonal entries and NonFiniteError if a quotient overflows.
    """
    n = e_lp.shape[0]
    low = np.tril(np.ones((n, n), dtype=bool), -1)
    denom = t_lp_diag[:, None] - t_lp_diag[None, :]
    if np.any(denom[low] == 0.0):
        raise SeparationError("repeated Ritz values: zero diagonal separation")
    with np.errstate(over="ignore", invalid="ignore"):
        l = np.where(low, -e_lp / np.where(low, denom, 1.0), 0.0)
    clipped = 0
    if clip_threshold is not None:
        big = low & (np.abs(l) > clip_threshold)
        clipped = int(np.count_nonzero(big))
        l[big] = 0.0
    if not np.isfinite(l.view(np.float64)).all():
        raise NonFiniteError("diagonal correction solve overflowed")
    return np.asfortranarray(l), clipped


# ---------------------------------------------------------------------------
# the shared refinement loop


def _entry_orthogonalize(qhat, cfg):
    if cfg.ortho is OrthoStrategy.NEWTON_SCHULZ:
        return newton_schulz_step(qhat)
    return qr_retract(qhat)


def _phase_permutation(q):
    """Permutation p with q[p[j], j] the only nonzero of column j, or None.

    Accepts exactly one nonzero per row and column, each of exactly unit
    modulus, so Q^H Q = I holds exactly and similarity transforms by Q
    only permute and rephase entries.
    """
    nz = ((q.re_hi != 0.0) | (q.re_lo != 0.0)
          | (q.im_hi != 0.0) | (q.im_lo != 0.0))
    if not ((nz.sum(axis=0) == 1).all() and (nz.sum(axis=1) == 1).all()):
        return None
    perm = nz.argmax(axis=0)
    for j in range(q.cols):
        z = q[perm[j], j]
        mag = z.re * z.re + z.im * z.im
        if not (mag.hi == 1.0 and mag.lo == 0.0):
            return None
    return perm


def _permuted_part_is_zero(a, perm, symmetric):
    """True when Q^H A Q is exactly triangular (diagonal when symmetric)."""
    n = a.rows
    sub = np.ix_(perm, perm)
    nz = np.zeros((n, n), dtype=bool)
    for c in a.cells():
        nz |= c[sub] != 0.0
    if symmetric:
        return not np.any(nz & ~np.eye(n, dtype=bool))
    return not np.any(np.tril(nz, -1))


def _exact_similarity_triangle(a, q, perm, symmetric):
    """T = Q^H A Q entrywise for a phase-permutation Q; no matrix products.

    t_ij = conj(q[p_i, i]) * a[p_i, p_j] * q[p_j, j]; only the upper
    triangle (just the real diagonal when symmetric) is populated, the
    remainder being exactly zero by _permuted_part_is_zero.
    """
    n = a.rows
    t = DDMatrix.zeros(n, n)
    for j in range(n):
        start = j if symmetric else 0
        for i in range(start, j + 1):
            val = q[perm[i], i].conj() * a[perm[i], perm[j]] * q[perm[j], j]
            if symmetric:
                val = DDComplex(val.re)
            t[i, j] = val
    return t


def _run(a, q, cfg, symmetric):
    """Shared loop behind the three drivers; q is already orthogonalized.

    Returns (SchurPair, RefineReport) with hp_matmul_count and wall_time
    left at zero for the caller to fill in.
    """
    n = a.rows
    norm_a = float(frobenius_norm(a))
    tol = cfg.tol_factor * n * U_HP * norm_a
    history = []
    clipped_total = 0
    skip_fired = False
    detail = ""

    norm_e, norm_y = _entry_residuals(a.to_lp(), q.to_lp(), symmetric)
    history.append((norm_e, norm_y))
    perm = _phase_permutation(q)
    if perm is not None and _permuted_part_is_zero(a, perm, symmetric):
        # Q is exactly unitary and Q^H A Q is exactly triangular, so the
        # defect is exactly zero: zero iterations beyond the entry check.
        # A binary64 measurement alone could never certify this (it can
        # round to zero while the true defect sits at 1e-16), hence the
        # structural test.
        t_dd = _exact_similarity_triangle(a, q, perm, symmetric)
        pair = SchurPair(q=q, t=t_dd, ortho_residual=norm_y,
                         tri_residual=norm_e)
        report = RefineReport(iterations=0, residual_history=history,
                              hp_matmul_count=0, clipped_total=0,
                              status=RefineStatus.CONVERGED, wall_time=0.0)
        return pair, report

    status = RefineStatus.MAX_ITERS
    iterations = cfg.max_iters
    t_dd = None
    streak = 0
    for it in range(1, cfg.max_iters + 1):
        that = matmul_hp(matmul_hp(q, a, trans_a=True), q)
        if symmetric:
            e_dd, t_dd = _split_offdiag(that)
        else:
            e_dd, t_dd = stril_extract(that)
        norm_e = float(frobenius_norm(e_dd))
        y = matmul_hp(q, q, trans_a=True) - DDMatrix.eye(n)
        norm_y = float(frobenius_norm(y))
        history.append((norm_e, norm_y))

        if not (math.isfinite(norm_e) and math.isfinite(norm_y)):
            status = RefineStatus.NON_FINITE
            iterations = it
            detail = "iteration %d: residuals became non-finite" % it
            if cfg.clip_threshold is None:
                detail += "; " + _CLIP_HINT
            break
        converged = norm_e <= tol

        try:
            if symmetric:
                l, nclip = _solve_diagonal_correction(
                    np.diag(t_dd.to_lp()), e_dd.to_lp(), cfg.clip_threshold)
            else:
                sol = solve_block(
                    TriEqProblem(t=t_dd.to_lp(), e=e_dd.to_lp(),
                                 clip_threshold=cfg.clip_threshold),
                    n_min=cfg.n_min)
                l, nclip = sol.l, sol.clipped_count
        except NonFiniteError as exc:
            status = RefineStatus.NON_FINITE
            iterations = it
            detail = "iteration %d: %s" % (it, exc)
            if cfg.clip_threshold is None:
                detail += "; " + _CLIP_HINT
            break
        clipped_total += nclip
        w = l - l.conj().T
        norm_w = float(np.linalg.norm(w, "fro"))

        skip = (converged and cfg.skip_final_ortho
                and norm_y <= 10.0 * n * U_HP
                and norm_w <= math.sqrt(U_HP))
        if not skip:
            if cfg.ortho is OrthoStrategy.NEWTON_SCHULZ:
                q = merged_update(q, w, y,
                                  restore_full_sigma=cfg.restore_full_sigma)
            else:
                q = qr_retract(q + matmul_hp(q, DDMatrix.from_lp(w)))
        if converged:
            status = RefineStatus.CONVERGED
            iterations = it
            skip_fired = skip
            break

        if len(history) >= 2 and norm_e > history[-2][0]:
            streak += 1
        else:
            streak = 0
        if streak >= DIVERGENCE_STREAK:
            status = RefineStatus.DIVERGED
            iterations = it
            break

    last_e, last_y = history[-1]
    pair = SchurPair(q=q, t=t_dd, ortho_residual=last_y, tri_residual=last_e)
    report = RefineReport(iterations=iterations, residual_history=history,
                          hp_matmul_count=0, clipped_total=clipped_total,
                          status=status, wall_time=0.0,
                          skip_fired=skip_fired, detail=detail)
    return pair, report


def _finish(pair, report, hp_before, t_before, detail_prefix=""):
    report.hp_matmul_count = counters()["hp_calls"] - hp_before
    report.wall_time = time.perf_counter() - t_before
    if detail_prefix:
        report.detail = (detail_prefix + "; " + report.detail
                         if report.detail else detail_prefix)
    return pair, report


def _coerce_hp(a):
    if isinstance(a, DDMatrix):
        m = a
    else:
        m = DDMatrix.from_lp(np.asarray(a))
    if m.rows != m.cols:
        raise ValueError("refinement needs a square matrix")
    if not m.is_finite():
        raise ValueError("input matrix has non-finite entries")
    return m


# ---------------------------------------------------------------------------
# drivers


def refine_template(a, qhat, cfg=None):
    """Refine a user-supplied candidate Q toward a Schur pair of A.

    Both arguments are double-double matrices (binary64 input is embedded
    exactly).  The candidate is orthogonalized once with cfg.ortho, then the
    loop runs: T = Q^H A Q, split off the strictly lower defect E, solve the
    commutator equation for L in binary64, update Q with W = L - L^H.  Stops
    when ||E||_F <= tol_factor * n * u_hp * ||A||_F.

    Returns (pair, report).  A run whose defect norm grows for three
    consecutive iterations stops as Diverged; a non-finite correction stops
    as NonFinite with the iteration index in report.detail.  SeparationError
    from the solver propagates to the caller.
    """
    cfg = RefineConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    hp0 = counters()["hp_calls"]
    a = _coerce_hp(a)
    qhat = _coerce_hp(qhat)
    if a.shape != qhat.shape:
        raise ValueError("matrix and candidate shapes differ")
    q = _entry_orthogonalize(qhat, cfg)
    pair, report = _run(a, q, cfg, symmetric=False)
    return _finish(pair, report, hp0, t0)


def refine_mixed(a, cfg=None):
    """Compute a double-double Schur pair of A from scratch.

    Pipeline: round A to binary64, QR-iterate to a Schur pair there, order
    the eigenvalues along a random line (seeded by cfg.seed) so that
    clustered values end up adjacent, embed Q exactly, take one entry
    Newton-Schulz step in double-double, then run the refinement loop.

    The entry step spends 2 double-double matrix products and each full
    iteration exactly 4, so the instrumented count is 2 + 4k, or 2 + 4k - 1
    when the final update is skipped.
    """
    cfg = RefineConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    hp0 = counters()["hp_calls"]
    a = _coerce_hp(a)
    pair_lp = qr_schur_lp(a.to_lp())
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    order = order_by_random_line(np.diag(pair_lp.t), rng=rng)
    pair_lp = reorder_schur(pair_lp, order)
    probe = _probe_gaps(np.diag(pair_lp.t), float(frobenius_norm(a)))
    q = newton_schulz_step(DDMatrix.from_lp(pair_lp.q))
    pair, report = _run(a, q, cfg, symmetric=False)
    return _finish(pair, report, hp0, t0, detail_prefix=probe)


def refine_symmetric(a, cfg=None):
    """Variant of refine_mixed for Hermitian A.

    With Hermitian input the converged T is diagonal, so the solve collapses
    to the entrywise division l_ij = -e_ij / (t_ii - t_jj); the triangular
    solver is never touched.  The defect E is the full off-diagonal part of
    Q^H A Q.  Raises NotSymmetric unless ||A - A^H||_F <= 10 u_hp ||A||_F.
    The returned T has exactly real diagonal entries (the discarded
    imaginary parts are rounding noise bounded by the reported residuals).
    """
    cfg = RefineConfig() if cfg is None else cfg
    t0 = time.perf_counter()
    hp0 = counters()["hp_calls"]
    a = _coerce_hp(a)
    norm_a = float(frobenius_norm(a))
    defect = float(frobenius_norm(a - a.conj_t()))
    if defect > 10.0 * U_HP * norm_a:
        raise NotSymmetric(
            "||A - A^H||_F = %.3e exceeds 10 u_hp ||A||_F = %.3e"
            % (defect, 10.0 * U_HP * norm_a))
    pair_lp = qr_schur_lp(a.to_lp())
    rng = np.random.Generator(np.random.Philox(cfg.seed))
    order = order_by_random_line(np.diag(pair_lp.t), rng=rng)
    pair_lp = reorder_schur(pair_lp, order)
    probe = _probe_gaps(np.diag(pair_lp.t), norm_a)
    q = newton_schulz_step(DDMatrix.from_lp(pair_lp.q))
    pair, report = _run(a, q, cfg, symmetric=True)
    pair.t = DDMatrix(pair.t.re_hi, pair.t.re_lo,
                      np.zeros_like(pair.t.im_hi), np.zeros_like(pair.t.im_lo))
    return _finish(pair, report, hp0, t0, detail_prefix=probe)


def _probe_gaps(ritz, norm_a):
    """Entry diagnostic: flag repeated or tightly spaced Ritz values."""
    ritz = np.asarray(ritz)
    if ritz.size < 2:
        return ""
    diff = np.abs(ritz[:, None] - ritz[None, :])
    np.fill_diagonal(diff, np.inf)
    gap = float(diff.min())
    if gap == 0.0:
        return "entry probe: exactly repeated Ritz values"
    if gap < 1e-10 * max(norm_a, 1.0):
        return "entry probe: min Ritz gap %.3e" % gap
    return ""


def verify_pair(a, pair):
    """Recompute the three quality residuals of a Schur pair in double-double.

    Returns VerifyResiduals(ortho_residual, tri_residual,
    similarity_residual) = (||Q^H Q - I||_F, ||stril(Q^H A Q)||_F,
    ||T - Q^H A Q||_F), all measured from scratch.
    """
    a = _coerce_hp(a)
    q = pair.q if isinstance(pair.q, DDMatrix) else DDMatrix.from_lp(pair.q)
    t = pair.t if isinstance(pair.t, DDMatrix) else DDMatrix.from_lp(pair.t)
    if q.shape != a.shape or t.shape != a.shape:
        raise ValueError("pair dimensions do not match the matrix")
    n = a.rows
    g = matmul_hp(q, q, trans_a=True) - DDMatrix.eye(n)
    that = matmul_hp(matmul_hp(q, a, trans_a=True), q)
    e, _ = stril_extract(that)
    return VerifyResiduals(
        ortho_residual=float(frobenius_norm(g)),
        tri_residual=float(frobenius_norm(e)),
        similarity_residual=float(frobenius_norm(t - that)),
    )
