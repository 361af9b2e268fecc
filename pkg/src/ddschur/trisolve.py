"""Triangular matrix-equation solvers for strictly lower unknowns.

Given an upper-triangular T and a strictly lower-triangular E, solve

    stril(T L - L T) = -E

for a strictly lower-triangular L.  The equation decouples columnwise
into shifted triangular systems; a unique solution exists exactly when
the diagonal of T has pairwise distinct entries.  Two solvers are
provided: a scalar substitution (`solve_scalar`) and a blocked
divide-and-conquer variant (`solve_block`) that reduces off-diagonal
blocks to small Sylvester equations and recurses on the halves.

All arithmetic here is binary64: the conditioning of the map is
governed by the diagonal separation, not the working precision, so a
low-precision solve is enough for the corrector role this plays.

Entries whose magnitude would exceed an optional clip threshold are set
to zero at the moment they are computed, and the number of clipped
entries is reported.  `phi_estimate` measures the smallest singular
value of the underlying linear operator, which bounds the solution
norm: ||L||_F <= ||E||_F / phi(T).
"""

import dataclasses
import math

import numpy as np

from .matmul import matmul_lp

DEFAULT_NMIN = 4
DEFAULT_CLIP_THRESHOLD = 1e-5
PHI_DIMENSION_CAP = 64

_stats = {"scalar_solves": 0, "block_solves": 0, "sylvester_solves": 0}


def reset_stats():
    """Zero the solver invocation counters."""
    for key in _stats:
        _stats[key] = 0


def stats():
    """Return a copy of the solver invocation counters."""
    return dict(_stats)


class SeparationError(Exception):
    """Diagonal entries of T coincide exactly; the equation is singular."""


class NonFiniteError(Exception):
    """An overflow or NaN appeared in the solution."""


@dataclasses.dataclass
class TriEqProblem:
    """One instance of stril(T L - L T) = -E.

    t: square complex upper-triangular matrix (exact zeros below the
       diagonal).
    e: strictly lower-triangular right-hand side (exact zeros on and
       above the diagonal).
    clip_threshold: if not None, computed entries with magnitude above
       this are zeroed immediately and counted.
    """

    t: np.ndarray
    e: np.ndarray
    clip_threshold: float | None = None


@dataclasses.dataclass
class TriEqSolution:
    """Solution of a TriEqProblem.

    l: strictly lower-triangular solution matrix.
    clipped_count: number of entries zeroed by the clip threshold.
    """

    l: np.ndarray
    clipped_count: int


def _validate_problem(problem):
    t = np.asarray(problem.t, dtype=np.complex128)
    e = np.asarray(problem.e, dtype=np.complex128)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError("t must be square")
    if e.shape != t.shape:
        raise ValueError("e must match the shape of t")
    if np.any(np.tril(t, -1) != 0):
        raise ValueError("t must be upper triangular with exact zeros below")
    if np.any(np.triu(e) != 0):
        raise ValueError("e must be strictly lower triangular")
    clip = problem.clip_threshold
    if clip is not None and not clip > 0:
        raise ValueError("clip_threshold must be positive")
    return t, e, clip


def _check_separation(diag):
    # exact-zero separation only; near-zero gaps are the caller's risk
    n = diag.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if diag[i] == diag[j]:
                raise SeparationError(
                    f"t[{i},{i}] == t[{j},{j}] == {diag[i]}: "
                    "diagonal separation is exactly zero"
                )


def _check_finite(l):
    if not np.all(np.isfinite(l.view(np.float64))):
        raise NonFiniteError("solution contains non-finite entries")


def _scalar_solve_inplace(t, e, l, clip):
    """Columnwise substitution on views; returns the clip count.

    Column j of L is resolved bottom-up: by the time entry (i, j) is
    reached, every L entry its accumulation touches is already final.
    e is modified in place and holds the accumulated right-hand side.
    """
    n = t.shape[0]
    clipped = 0
    # overflow is legal here; the caller turns non-finite L into an error
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(n - 1):
            for i in range(n - 1, j, -1):
                acc = e[i, j]
                if i + 1 < n:
                    acc = acc + np.dot(t[i, i + 1:], l[i + 1:, j])
                if j > 0:
                    acc = acc - np.dot(l[i, :j], t[:j, j])
                e[i, j] = acc
                val = -acc / (t[i, i] - t[j, j])
                if clip is not None and abs(val) > clip:
                    val = 0.0
                    clipped += 1
                l[i, j] = val
    return clipped


def solve_scalar(problem):
    """Solve stril(T L - L T) = -E by entrywise substitution.

    Raises SeparationError if two diagonal entries of T are exactly
    equal, and NonFiniteError if the solution overflows.
    """
    t, e, clip = _validate_problem(problem)
    _check_separation(np.diag(t))
    _stats["scalar_solves"] += 1
    n = t.shape[0]
    l = np.zeros((n, n), dtype=np.complex128)
    clipped = _scalar_solve_inplace(t, e.copy(), l, clip)
    _check_finite(l)
    return TriEqSolution(l=l, clipped_count=clipped)


def _sylvester_tri(t22, t11, c, clip):
    """Solve T22 X - X T11 = C columnwise; returns (X, clip count).

    Column j reduces to the shifted upper-triangular system
    (T22 - t11[j,j] I) x_j = c_j + X[:, :j] @ T11[:j, j], solved by
    back substitution.  A zero shifted pivot raises SeparationError.
    """
    m = t22.shape[0]
    p = t11.shape[0]
    x = np.zeros((m, p), dtype=np.complex128)
    clipped = 0
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(p):
            rhs = c[:, j].copy()
            if j > 0:
                rhs += x[:, :j] @ t11[:j, j]
            mu = t11[j, j]
            for i in range(m - 1, -1, -1):
                acc = rhs[i]
                if i + 1 < m:
                    acc = acc - np.dot(t22[i, i + 1:], x[i + 1:, j])
                piv = t22[i, i] - mu
                if piv == 0:
                    raise SeparationError(
                        "zero pivot in shifted triangular solve: "
                        f"t22[{i},{i}] == t11[{j},{j}] == {mu}"
                    )
                val = acc / piv
                if clip is not None and abs(val) > clip:
                    val = 0.0
                    clipped += 1
                x[i, j] = val
    return x, clipped


def solve_sylvester_tri(t22, t11, c, clip_threshold=None):
    """Solve the triangular Sylvester equation T22 X - X T11 = C.

    Both coefficient matrices must be upper triangular.  Returns X.
    """
    t22 = np.asarray(t22, dtype=np.complex128)
    t11 = np.asarray(t11, dtype=np.complex128)
    c = np.asarray(c, dtype=np.complex128)
    if np.any(np.tril(t22, -1) != 0) or np.any(np.tril(t11, -1) != 0):
        raise ValueError("coefficient matrices must be upper triangular")
    if c.shape != (t22.shape[0], t11.shape[0]):
        raise ValueError("c has shape incompatible with t22, t11")
    _stats["sylvester_solves"] += 1
    x, _ = _sylvester_tri(t22, t11, c, clip_threshold)
    _check_finite(x)
    return x


def _stril_inplace_add(dst, prod, sign):
    m, p = dst.shape
    for j in range(min(p, m - 1)):
        dst[j + 1:, j] += sign * prod[j + 1:, j]


def _block_solve(t, e, l, n_min, clip):
    """Recursive halving on views; returns the clip count."""
    n = t.shape[0]
    if n <= n_min:
        return _scalar_solve_inplace(t, e, l, clip)
    n1 = n // 2
    t11 = t[:n1, :n1]
    t12 = t[:n1, n1:]
    t22 = t[n1:, n1:]
    _stats["sylvester_solves"] += 1
    x, clipped = _sylvester_tri(t22, t11, -e[n1:, :n1], clip)
    l[n1:, :n1] = x
    # fold the now-known off-diagonal block into both half problems
    _stril_inplace_add(e[:n1, :n1], matmul_lp(t12, x), 1.0)
    _stril_inplace_add(e[n1:, n1:], matmul_lp(x, t12), -1.0)
    clipped += _block_solve(t11, e[:n1, :n1], l[:n1, :n1], n_min, clip)
    clipped += _block_solve(t22, e[n1:, n1:], l[n1:, n1:], n_min, clip)
    return clipped


def solve_block(problem, n_min=DEFAULT_NMIN):
    """Solve stril(T L - L T) = -E by recursive block halving.

    Problems of size at most n_min are delegated to the scalar
    substitution, bit-identically to solve_scalar on the same block.
    Larger problems split at n1 = n // 2: the off-diagonal block of L
    solves a triangular Sylvester equation, its contribution is folded
    into the two diagonal-block right-hand sides, and the halves are
    solved recursively.
    """
    if n_min < 2:
        raise ValueError("n_min must be at least 2")
    t, e, clip = _validate_problem(problem)
    _check_separation(np.diag(t))
    _stats["block_solves"] += 1
    n = t.shape[0]
    l = np.zeros((n, n), dtype=np.complex128)
    clipped = _block_solve(t, e.copy(), l, n_min, clip)
    _check_finite(l)
    return TriEqSolution(l=l, clipped_count=clipped)


def _lower_pairs(n):
    """Strictly lower index pairs in column-major order."""
    return [(i, j) for j in range(n - 1) for i in range(j + 1, n)]


def _jacobi_min_singular(a, rel_tol=1e-12, max_sweeps=60):
    """Smallest singular value of a real matrix by one-sided Jacobi.

    Cyclic sweeps orthogonalize column pairs; on convergence the
    singular values are the column norms.  One-sided Jacobi reaches
    high relative accuracy even for small singular values, which is
    the point: the result feeds a reciprocal bound.
    """
    g = np.array(a, dtype=np.float64, order="F")
    n = g.shape[1]
    for _ in range(max_sweeps):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                gp = g[:, p]
                gq = g[:, q]
                app = np.dot(gp, gp)
                aqq = np.dot(gq, gq)
                apq = np.dot(gp, gq)
                if abs(apq) <= rel_tol * math.sqrt(app * aqq):
                    continue
                rotated = True
                tau = (aqq - app) / (2.0 * apq)
                tn = math.copysign(1.0, tau) / (
                    abs(tau) + math.sqrt(1.0 + tau * tau)
                )
                cs = 1.0 / math.sqrt(1.0 + tn * tn)
                sn = cs * tn
                tmp = cs * gp - sn * gq
                g[:, q] = sn * gp + cs * gq
                g[:, p] = tmp
        if not rotated:
            break
    norms = np.sqrt(np.sum(g * g, axis=0))
    return float(np.min(norms))


def phi_estimate(t):
    """Smallest singular value of L -> stril(T L - L T).

    The operator acts on the n(n-1)/2 strictly lower entries.  Its
    matrix is assembled column by column from basis images, expanded
    to the real representation [[Re, -Im], [Im, Re]], and its smallest
    singular value extracted by one-sided Jacobi.  Cost grows as the
    sixth power of n, so the dimension is capped; this is a diagnostic,
    not a production kernel.
    """
    t = np.asarray(t, dtype=np.complex128)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError("t must be square")
    n = t.shape[0]
    if n < 2:
        raise ValueError("need n >= 2: the strictly lower part is empty")
    if n > PHI_DIMENSION_CAP:
        raise ValueError(f"phi_estimate is capped at n <= {PHI_DIMENSION_CAP}")
    if np.any(np.tril(t, -1) != 0):
        raise ValueError("t must be upper triangular with exact zeros below")
    pairs = _lower_pairs(n)
    index = {pq: k for k, pq in enumerate(pairs)}
    big = len(pairs)
    op = np.zeros((big, big), dtype=np.complex128)
    for col, (p, q) in enumerate(pairs):
        image = np.zeros((n, n), dtype=np.complex128)
        # image of the basis matrix e_p e_q^T under L -> T L - L T
        image[:, q] += t[:, p]
        image[p, :] -= t[q, :]
        for row, (i, j) in enumerate(pairs):
            op[row, col] = image[i, j]
    real_rep = np.block(
        [[op.real, -op.imag], [op.imag, op.real]]
    )
    return _jacobi_min_singular(real_rep, rel_tol=1e-12)
