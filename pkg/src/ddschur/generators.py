"""Seeded construction of the benchmark matrix families.

Every generator maps (parameters, seed) to a double-double matrix
deterministically; randomness comes from a counter-based Philox stream so
the same seed gives the same matrix in any process.  The Wilkinson
companion is built from exact integer coefficients, the clustered family
as X D X^{-1} with a prescribed condition number on X, computed to pair
precision by iterative refinement of the defining linear system.
"""

import enum
import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .ddmatrix import DDMatrix
from .matmul import matmul_hp, matmul_lp
from .mmio import read_matrix_market


class MatrixKind(enum.Enum):
    RANDN_COMPLEX = "randn"
    RANDN_REAL = "randn-real"
    WILKINSON = "wilkinson"
    CLUSTERED = "clustered"
    FROM_FILE = "file"


@dataclass
class MatrixSpec:
    """Everything needed to rebuild one input matrix.

    kind-specific fields are ignored by the other kinds; path is required
    exactly for file input, where n is taken from the file.
    """

    kind: MatrixKind
    n: int = 0
    seed: int = 0
    cluster_count: int = 0
    cluster_size: int = 0
    cluster_radius: float = 0.0
    cond_x: float = 1.0
    path: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.kind, MatrixKind):
            self.kind = MatrixKind(self.kind)
        if self.kind is MatrixKind.FROM_FILE:
            if not self.path:
                raise ValueError("file input needs a path")
            return
        if self.path is not None:
            raise ValueError("path is only valid for file input")
        if self.n < 1:
            raise ValueError("n must be at least 1")
        if self.kind is MatrixKind.CLUSTERED:
            if self.cluster_count < 0:
                raise ValueError("cluster_count must be nonnegative")
            if self.cluster_count > 0 and self.cluster_size < 1:
                raise ValueError("cluster_size must be positive")
            if self.cluster_count > 0 and not self.cluster_radius > 0.0:
                raise ValueError("cluster_radius must be positive")
            if self.cluster_count * self.cluster_size > self.n:
                raise ValueError(
                    "clusters need %d slots but n = %d"
                    % (self.cluster_count * self.cluster_size, self.n)
                )
            if not self.cond_x >= 1.0:
                raise ValueError("cond_x must be at least 1")

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


def _rng(seed):
    return np.random.Generator(np.random.Philox(int(seed)))


def gen_randn(n, seed, real=False):
    """Standard-normal test matrix, complex by default."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = _rng(seed)
    g = rng.standard_normal((n, n))
    if not real:
        g = g + 1j * rng.standard_normal((n, n))
    return DDMatrix.from_lp(np.asfortranarray(g))


def wilkinson_coefficients(n):
    """Exact integer coefficients of prod_{k=1}^{n} (x - k), ascending.

    Plain bigint convolution; the result has coefficients[n] == 1.
    """
    coeffs = [1]
    for k in range(1, n + 1):
        nxt = [0] * (len(coeffs) + 1)
        for i, c in enumerate(coeffs):
            nxt[i] += -k * c
            nxt[i + 1] += c
        coeffs = nxt
    return coeffs


def _int_to_pair(c):
    """Exact double-double pair for an integer below 2**106 in magnitude."""
    hi = float(c)
    lo = float(c - int(hi))
    return hi, lo


def gen_wilkinson(n):
    """Companion matrix of prod_{k=1}^{n} (x - k), exact at pair precision.

    Monic layout: ones on the subdiagonal, the negated ascending
    coefficients down the last column.  n is capped where coefficients
    still split exactly into two binary64 halves.
    """
    if not 1 <= n <= 25:
        raise ValueError("n must be between 1 and 25")
    coeffs = wilkinson_coefficients(n)
    if any(abs(c) >= 2 ** 106 for c in coeffs):
        raise ValueError("coefficients exceed exact pair range")
    re_hi = np.zeros((n, n), order="F")
    re_lo = np.zeros((n, n), order="F")
    for i in range(n - 1):
        re_hi[i + 1, i] = 1.0
    for i in range(n):
        hi, lo = _int_to_pair(-coeffs[i])
        re_hi[i, n - 1] = hi
        re_lo[i, n - 1] = lo

    z = np.zeros((n, n), order="F")
    return DDMatrix(re_hi, re_lo, z, z.copy())


def _haar_orthogonal(rng, n):
    """Haar-distributed real orthogonal factor: Gaussian QR with sign fix."""
    g = rng.standard_normal((n, n))
    q, r = np.linalg.qr(g)
    sign = np.sign(np.diag(r))
    sign[sign == 0.0] = 1.0
    return q * sign[None, :]


def gen_clustered(n, cluster_count, cluster_size, cluster_radius, cond_x, seed):
    """Similarity X D X^{-1} with clustered real eigenvalues.

    D is diagonal: background entries uniform in [-10, 10]; each cluster
    overwrites the next cluster_size slots with one uniform center plus
    perturbations of at most cluster_radius.  X = U diag(s) V^T with Haar
    orthogonal U, V and a logarithmic singular-value ramp from 1 to cond_x.
    A solves A X = X D: binary64 solve first, then three refinement sweeps
    with pair-precision residuals, enough to reach pair accuracy for the
    condition numbers used here.
    """
    spec = MatrixSpec(kind=MatrixKind.CLUSTERED, n=n, seed=seed,
                      cluster_count=cluster_count, cluster_size=cluster_size,
                      cluster_radius=cluster_radius, cond_x=cond_x)
    n = spec.n
    rng = _rng(seed)
    d = rng.uniform(-10.0, 10.0, size=n)
    pos = 0
    for _ in range(cluster_count):
        center = rng.uniform(-10.0, 10.0)
        offsets = rng.uniform(-cluster_radius, cluster_radius, size=cluster_size)
        d[pos:pos + cluster_size] = center + offsets
        pos += cluster_size
    sv = np.logspace(0.0, math.log10(cond_x), n)
    u = _haar_orthogonal(rng, n)
    v = _haar_orthogonal(rng, n)
    x_lp = np.ascontiguousarray(matmul_lp(u * sv[None, :], v, trans_b=True).real)
    x_hp = DDMatrix.from_lp(x_lp)
    xd = matmul_hp(x_hp, DDMatrix.from_lp(np.diag(d)))
    a_lp = np.linalg.solve(x_lp.T, np.ascontiguousarray(xd.to_lp().real.T)).T
    a = DDMatrix.from_lp(np.asfortranarray(a_lp))
    for _ in range(3):
        r = xd - matmul_hp(a, x_hp)
        delta = np.linalg.solve(x_lp.T, np.ascontiguousarray(r.to_lp().real.T)).T
        a = a + DDMatrix.from_lp(np.asfortranarray(delta))
    return a


def generate(spec):
    """Build the double-double matrix a MatrixSpec describes."""
    if not isinstance(spec, MatrixSpec):
        raise TypeError("expected a MatrixSpec")
    if spec.kind is MatrixKind.RANDN_COMPLEX:
        return gen_randn(spec.n, spec.seed)
    if spec.kind is MatrixKind.RANDN_REAL:
        return gen_randn(spec.n, spec.seed, real=True)
    if spec.kind is MatrixKind.WILKINSON:
        return gen_wilkinson(spec.n)
    if spec.kind is MatrixKind.CLUSTERED:
        return gen_clustered(spec.n, spec.cluster_count, spec.cluster_size,
                             spec.cluster_radius, spec.cond_x, spec.seed)
    return read_matrix_market(spec.path)
