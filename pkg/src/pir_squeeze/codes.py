"""Storage codes and the structured matrices used to build queries.

Covers GRS generators, systematic form, Schur-product dimensions, the H
matrices that pair with a storage code, and exterior-power subspaces used
for three or more colluders.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import comb

import numpy as np

from . import linalg as la
from .errors import DimensionMismatch, FieldTooSmall, RetriesExhausted, ValidationError
from .gf import check_modulus


@dataclass(frozen=True)
class GrsSpec:
    q: int
    k: int
    alpha: tuple
    v: tuple

    def __post_init__(self):
        check_modulus(self.q)
        alpha = tuple(int(a) % self.q for a in self.alpha)
        v = tuple(int(x) % self.q for x in self.v)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "v", v)
        if len(set(alpha)) != len(alpha):
            raise ValidationError("GRS evaluation points must be distinct")
        if len(v) != len(alpha):
            raise ValidationError("need one multiplier per evaluation point")
        if any(x == 0 for x in v):
            raise ValidationError("GRS multipliers must be nonzero")
        if not 1 <= self.k <= len(alpha) <= self.q:
            raise ValidationError(f"need 1 <= k <= N <= q, got k={self.k}, N={len(alpha)}, q={self.q}")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @classmethod
    def standard(cls, n: int, k: int, q: int) -> "GrsSpec":
        """Points 0..n-1 with all-ones multipliers."""
        return cls(q, k, tuple(range(n)), (1,) * n)


def grs_generator(spec: GrsSpec) -> np.ndarray:
    """k x N matrix with entry (i, j) = v_j * alpha_j**i."""
    g = la.vandermonde(spec.alpha, spec.k, spec.q)
    return g * np.array(spec.v, dtype=np.int64) % spec.q


@dataclass(frozen=True, eq=False)
class StorageCode:
    """An (N, K) MDS code applied column-wise to every file."""

    generator: np.ndarray
    q: int
    grs: GrsSpec | None = None

    def __post_init__(self):
        g = np.asarray(self.generator, dtype=np.int64) % self.q
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)
        if not la.is_col_mds(g, self.q):
            raise ValidationError("storage generator is not MDS")

    @property
    def k(self) -> int:
        return self.generator.shape[0]

    @property
    def n(self) -> int:
        return self.generator.shape[1]

    @property
    def flavor(self) -> str:
        return "grs" if self.grs is not None else "generic"

    @classmethod
    def from_grs(cls, spec: GrsSpec) -> "StorageCode":
        return cls(grs_generator(spec), spec.q, spec)

    @classmethod
    def random_systematic(cls, n: int, k: int, q: int, rng: np.random.Generator,
                          max_retries: int = 1000) -> "StorageCode":
        """Seeded random [I | A] code, kept only once it is verified MDS."""
        for _ in range(max_retries):
            a = rng.integers(1, q, size=(k, n - k), dtype=np.int64)
            g = np.hstack([la.identity(k), a])
            if la.is_col_mds(g, q):
                return cls(g, q)
        raise RetriesExhausted(f"no random ({n},{k}) MDS code found over F_{q}")


def to_systematic(g: np.ndarray, q: int) -> np.ndarray:
    """Row-equivalent [I_K | A] form of an MDS generator."""
    m, piv = la.rref(g, q)
    k = g.shape[0]
    if piv != list(range(k)):
        raise ValidationError("first K columns are dependent; generator is not MDS")
    return m


def schur_product_dim(g1: np.ndarray, g2: np.ndarray, q: int) -> int:
    """Dimension of the span of all row-by-row componentwise products."""
    if g1.shape[1] != g2.shape[1]:
        raise DimensionMismatch("codes have different lengths")
    prods = (g1[:, None, :] * g2[None, :, :]).reshape(-1, g1.shape[1]) % q
    return la.rank(prods, q)


def build_h_generic(g_sys: np.ndarray, t: int, q: int, rng: np.random.Generator | None = None,
                    max_retries: int = 1000, h_tail: np.ndarray | None = None,
                    accept=None) -> np.ndarray:
    """N x t matrix (H'; I_t; H'') matched to a systematic generator [I_K | A].

    H'' holds rows for servers K+t+1..N and is sampled until the whole matrix
    is row-MDS (and ``accept(h)`` holds, when given).  H' is then forced by
    the redundancy relation, H' = A[:, :t] + A[:, t:] @ H''.  Passing
    ``h_tail`` pins H'' instead of sampling it.
    """
    k, n = g_sys.shape
    if not la.is_systematic(g_sys % q):
        raise ValidationError("build_h_generic needs a systematic generator")
    if n < k + t:
        raise ValidationError(f"need N >= K + T, got N={n}, K={k}, T={t}")
    a = g_sys[:, k:] % q
    extra = n - k - t

    def assemble(tail):
        head = (a[:, :t] + la.matmul(a[:, t:], tail, q)) % q
        return np.vstack([head, la.identity(t), tail])

    def ok(h):
        return la.is_row_mds(h, t, q) and (accept is None or accept(h))

    if h_tail is not None or extra == 0:
        tail = np.zeros((0, t), dtype=np.int64) if h_tail is None else la.as_matrix(h_tail, q)
        if tail.shape != (extra, t):
            raise DimensionMismatch(f"H'' must be {extra}x{t}")
        h = assemble(tail)
        if not ok(h):
            raise RetriesExhausted("the given H'' does not yield a usable H")
        return h
    if rng is None:
        raise ValidationError("rng required to sample H''")
    for _ in range(max_retries):
        h = assemble(la.random_matrix(extra, t, q, rng))
        if ok(h):
            return h
    raise RetriesExhausted(f"no row-MDS H after {max_retries} draws over F_{q}; raise q")


def build_h_grs(spec: GrsSpec, t: int) -> np.ndarray:
    """N x t matrix with H[n, i] = alpha_n**i, the transpose of a GRS_t generator."""
    if not 1 <= t <= spec.n:
        raise ValidationError(f"need 1 <= t <= N, got t={t}")
    return la.vandermonde(spec.alpha, t, spec.q).T.copy()


def exterior_basis_coords(vectors, q: int) -> np.ndarray:
    """Coordinates of u_1 ^ ... ^ u_s in the lexicographic basis e_I, |I| = s.

    The coefficient on e_I is the s x s minor on columns I.
    """
    vs = la.as_matrix(vectors, q)
    s, t = vs.shape
    if s > t:
        raise DimensionMismatch(f"cannot wedge {s} vectors in dimension {t}")
    cols = combinations(range(t), s)
    return np.array([la.det(vs[:, list(c)], q) for c in cols], dtype=np.int64)


def moment_curve_points(big_t: int, q: int, count: int) -> np.ndarray:
    """count points: (1, x, ..., x^(T-1)) for x = 0..count-2, then (0, ..., 0, 1)."""
    if count > q + 1:
        raise FieldTooSmall(f"only q+1 = {q + 1} points available, need {count}")
    pts = np.zeros((count, big_t), dtype=np.int64)
    for i in range(count - 1):
        pts[i] = [pow(i, e, q) for e in range(big_t)]
    if count:
        pts[count - 1, big_t - 1] = 1
    return pts


def wedge_subspace(u: np.ndarray, small_t: int, q: int) -> la.Subspace:
    """{u ^ w : w in the (small_t - 1)-th exterior power}, as a subspace."""
    big_t = len(u)
    rows = []
    for idx in combinations(range(big_t), small_t - 1):
        vecs = np.zeros((small_t, big_t), dtype=np.int64)
        vecs[0] = u
        for r, i in enumerate(idx, start=1):
            vecs[r, i] = 1
        rows.append(exterior_basis_coords(vecs, q))
    return la.Subspace.span(np.array(rows), q, comb(big_t, small_t))


def exterior_subspaces(big_t: int, small_t: int, q: int, count: int) -> list[la.Subspace]:
    """count subspaces of dimension C(T-1, T'-1) inside the T'-th exterior power of F_q^T."""
    if not 2 <= small_t < big_t:
        raise ValidationError(f"need 2 <= T' < T, got T'={small_t}, T={big_t}")
    q = check_modulus(q)
    pts = moment_curve_points(big_t, q, count)
    return [wedge_subspace(p, small_t, q) for p in pts]


def build_h_star(n_servers: int, big_t: int, small_t: int, q: int) -> np.ndarray:
    """Stack of the per-server exterior-subspace bases.

    Shape: C(T-1, T'-1) * N rows by C(T, T') columns; rows
    [n*d, (n+1)*d) belong to server n.
    """
    spaces = exterior_subspaces(big_t, small_t, q, n_servers)
    d = comb(big_t - 1, small_t - 1)
    for s in spaces:
        # a point u != 0 always gives the full dimension; guard anyway
        if s.dim != d:
            raise FieldTooSmall("degenerate exterior subspace")
    return np.vstack([s.basis for s in spaces])


__all__ = [
    "GrsSpec", "StorageCode", "build_h_generic", "build_h_grs", "build_h_star",
    "exterior_basis_coords", "exterior_subspaces", "grs_generator", "moment_curve_points",
    "schur_product_dim", "to_systematic", "wedge_subspace",
]
