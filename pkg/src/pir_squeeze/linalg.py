"""Dense exact linear algebra over a prime field F_q.

Matrices are plain 2-D ``numpy.int64`` arrays with entries in [0, q); the
modulus travels alongside as an explicit argument.  Nothing here uses floats.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, DuplicateNodes, ModulusMismatch, NoSolution, SingularMatrix
from .gf import check_modulus


def as_matrix(a, q: int) -> np.ndarray:
    """Copy ``a`` into a canonical int64 matrix mod q (1-D input becomes one row)."""
    # object dtype so that negative or oversized Python ints reduce exactly
    m = np.array(a, dtype=object)
    if m.ndim == 1:
        m = m.reshape(1, -1)
    if m.ndim != 2:
        raise DimensionMismatch(f"expected a 2-D array, got shape {m.shape}")
    return (m % q).astype(np.int64)


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def matmul(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return _kernels.matmul_mod(np.ascontiguousarray(a, dtype=np.int64),
                               np.ascontiguousarray(b, dtype=np.int64), q)


def rref(a: np.ndarray, q: int) -> tuple[np.ndarray, list[int]]:
    """Canonical reduced row echelon form. Zero rows are kept at the bottom."""
    m = np.array(a, dtype=np.int64, copy=True) % q
    if m.size == 0:
        return m.reshape(a.shape), []
    _, piv = _kernels.rref_inplace(m, q)
    return m, [int(c) for c in piv]


def rank(a: np.ndarray, q: int) -> int:
    a = np.asarray(a)
    if a.size == 0:
        return 0
    m = np.array(a, dtype=np.int64, copy=True) % q
    r, _ = _kernels.rref_inplace(m, q)
    return int(r)


def row_basis(a: np.ndarray, q: int) -> np.ndarray:
    """Nonzero rows of the RREF: the canonical basis of the row space."""
    m, piv = rref(a, q)
    return m[: len(piv)]


def det(a: np.ndarray, q: int) -> int:
    """Determinant by Gaussian elimination (exact, no divisions left pending)."""
    n, c = a.shape
    if n != c:
        raise DimensionMismatch("determinant of a non-square matrix")
    m = np.array(a, dtype=np.int64, copy=True) % q
    d = 1
    for col in range(n):
        nz = np.flatnonzero(m[col:, col])
        if nz.size == 0:
            return 0
        piv = col + nz[0]
        if piv != col:
            m[[col, piv]] = m[[piv, col]]
            d = -d
        pv = int(m[col, col])
        d = d * pv % q
        inv = pow(pv, q - 2, q)
        below = m[col + 1 :, col] * inv % q
        m[col + 1 :] = (m[col + 1 :] - np.outer(below, m[col]) % q) % q
    return d % q


def inv(a: np.ndarray, q: int) -> np.ndarray:
    n, c = a.shape
    if n != c:
        raise DimensionMismatch("inverse of a non-square matrix")
    aug, piv = rref(np.hstack([a % q, identity(n)]), q)
    if piv[:n] != list(range(n)) or len(piv) < n:
        raise SingularMatrix("matrix is not invertible")
    return aug[:, n:].copy()


def solve(a: np.ndarray, b: np.ndarray, q: int) -> np.ndarray:
    """Some x with a @ x == b (mod q); free variables are set to zero.

    Raises NoSolution when the system is inconsistent.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    vec = b.ndim == 1
    if vec:
        b = b.reshape(-1, 1)
    if a.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"a has {a.shape[0]} rows, b has {b.shape[0]}")
    n = a.shape[1]
    aug, piv = rref(np.hstack([a % q, b % q]), q)
    if piv and piv[-1] >= n:
        raise NoSolution("inconsistent linear system")
    x = np.zeros((n, b.shape[1]), dtype=np.int64)
    for i, c in enumerate(piv):
        x[c] = aug[i, n:]
    return x[:, 0] if vec else x


def null_space(a: np.ndarray, q: int) -> np.ndarray:
    """Basis (as rows) of the right kernel {x : a @ x = 0}."""
    a = np.asarray(a, dtype=np.int64)
    n = a.shape[1]
    m, piv = rref(a, q)
    free = [c for c in range(n) if c not in set(piv)]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for r, c in enumerate(piv):
            basis[i, c] = (-m[r, f]) % q
    return basis


def left_null_space(a: np.ndarray, q: int) -> np.ndarray:
    """Basis (as rows) of {y : y @ a = 0}."""
    return null_space(np.asarray(a).T, q)


def vandermonde(nodes, order: int, q: int) -> np.ndarray:
    """order x len(nodes) matrix with entry (i, j) = nodes[j]**i."""
    xs = [int(x) % q for x in nodes]
    if len(set(xs)) != len(xs):
        raise DuplicateNodes(f"nodes {list(nodes)} are not distinct mod {q}")
    if len(xs) < order:
        raise DimensionMismatch(f"need at least {order} nodes, got {len(xs)}")
    out = np.zeros((order, len(xs)), dtype=np.int64)
    for j, x in enumerate(xs):
        v = 1
        for i in range(order):
            out[i, j] = v
            v = v * x % q
    return out


def random_matrix(rows: int, cols: int, q: int, rng: np.random.Generator) -> np.ndarray:
    return rng.integers(0, q, size=(rows, cols), dtype=np.int64)


def random_full_rank(n: int, q: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform invertible n x n matrix by rejection sampling."""
    while True:
        m = random_matrix(n, n, q, rng)
        if rank(m, q) == n:
            return m


def is_col_mds_bruteforce(g: np.ndarray, q: int) -> bool:
    k, n = g.shape
    return all(rank(g[:, list(cols)], q) == k for cols in combinations(range(n), k))


def is_systematic(g: np.ndarray) -> bool:
    k = g.shape[0]
    return g.shape[1] >= k and np.array_equal(g[:, :k], identity(k))


def all_subsquares_full_rank(a: np.ndarray, q: int) -> bool:
    rows, cols = a.shape
    for s in range(1, min(rows, cols) + 1):
        for rs in combinations(range(rows), s):
            for cs in combinations(range(cols), s):
                if det(a[np.ix_(rs, cs)], q) == 0:
                    return False
    return True


def is_col_mds(g: np.ndarray, q: int, method: str = "auto") -> bool:
    """True iff every k-column subset of the k x n matrix g is invertible.

    For g = [I | A] the check reduces to all square submatrices of A being
    nonsingular; ``method`` picks "subsquare", "brute" or "auto".
    """
    g = np.asarray(g, dtype=np.int64) % q
    k, n = g.shape
    if k > n:
        return False
    if method == "brute":
        return is_col_mds_bruteforce(g, q)
    if method == "subsquare" or (method == "auto" and is_systematic(g)):
        if not is_systematic(g):
            raise ValueError("subsquare criterion needs a systematic [I | A] matrix")
        return all_subsquares_full_rank(g[:, k:], q)
    return is_col_mds_bruteforce(g, q)


def is_row_mds(h: np.ndarray, t: int, q: int) -> bool:
    """True iff every t rows of h are linearly independent."""
    h = np.asarray(h, dtype=np.int64) % q
    if h.shape[1] != t or h.shape[0] < t:
        return False
    return all(rank(h[list(rows)], q) == t for rows in combinations(range(h.shape[0]), t))


@dataclass(frozen=True, eq=False)
class Subspace:
    """A subspace of F_q^d stored by its canonical RREF basis (nonzero rows only)."""

    basis: np.ndarray
    ambient_dim: int
    q: int
    pivots: tuple = field(default=(), repr=False)

    @classmethod
    def span(cls, rows, q: int, ambient_dim: int | None = None) -> "Subspace":
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim == 1:
            rows = rows.reshape(1, -1)
        d = rows.shape[1] if ambient_dim is None else ambient_dim
        if rows.shape[0] == 0:
            return cls(np.zeros((0, d), dtype=np.int64), d, q, ())
        m, piv = rref(rows, q)
        basis = m[: len(piv)].copy()
        basis.setflags(write=False)
        return cls(basis, d, q, tuple(piv))

    @classmethod
    def zero(cls, ambient_dim: int, q: int) -> "Subspace":
        return cls(np.zeros((0, ambient_dim), dtype=np.int64), ambient_dim, q, ())

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def _check(self, other: "Subspace"):
        if other.q != self.q:
            raise ModulusMismatch(f"F_{self.q} vs F_{other.q}")
        if other.ambient_dim != self.ambient_dim:
            raise DimensionMismatch(f"ambient {self.ambient_dim} vs {other.ambient_dim}")

    def sum(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace.span(np.vstack([self.basis, other.basis]), self.q, self.ambient_dim)

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check(other)
        if self.dim == 0 or other.dim == 0:
            return Subspace.zero(self.ambient_dim, self.q)
        # x A = y B  <=>  (x, -y) lies in the left kernel of [A; B]
        ker = left_null_space(np.vstack([self.basis, other.basis]), self.q)
        if ker.shape[0] == 0:
            return Subspace.zero(self.ambient_dim, self.q)
        vecs = matmul(ker[:, : self.dim], self.basis, self.q)
        return Subspace.span(vecs, self.q, self.ambient_dim)

    def contains(self, vectors) -> bool:
        v = np.asarray(vectors, dtype=np.int64)
        if v.ndim == 1:
            v = v.reshape(1, -1)
        return rank(np.vstack([self.basis, v]), self.q) == self.dim

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return (self.q == other.q and self.ambient_dim == other.ambient_dim
                and np.array_equal(self.basis, other.basis))

    def __hash__(self):
        return hash((self.q, self.ambient_dim, self.basis.tobytes()))


def subspace_ops(a: Subspace, b: Subspace, op: str) -> Subspace:
    if op == "intersect":
        return a.intersect(b)
    if op == "sum":
        return a.sum(b)
    raise ValueError(f"unknown op {op!r}")


__all__ = [
    "Subspace", "as_matrix", "check_modulus", "det", "identity", "inv", "is_col_mds",
    "is_col_mds_bruteforce", "is_row_mds", "left_null_space", "matmul", "null_space",
    "random_full_rank", "random_matrix", "rank", "row_basis", "rref", "solve",
    "subspace_ops", "vandermonde",
]
