"""Hot loops: modular row reduction and matrix products.

Each kernel has a numba version and a pure-numpy version with the same
contract.  The numba path is used when numba imports and the environment
variable PIR_SQUEEZE_NO_NUMBA is unset (or "0").  Arrays are int64 with
entries already reduced into [0, p); p < 2**31 so one product fits.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

_flag = os.environ.get("PIR_SQUEEZE_NO_NUMBA", "").strip().lower()
USE_NUMBA = numba is not None and _flag in ("", "0", "false", "no")


def _rref_numpy(a, p):
    """Reduce ``a`` in place to RREF mod p. Returns (rank, pivot array)."""
    rows, cols = a.shape
    pivots = np.empty(min(rows, cols), dtype=np.int64)
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(a[r:, c])
        if nz.size == 0:
            continue
        piv = r + nz[0]
        if piv != r:
            a[[r, piv]] = a[[piv, r]]
        inv = pow(int(a[r, c]), p - 2, p)
        a[r] = a[r] * inv % p
        col = a[:, c].copy()
        col[r] = 0
        hit = np.flatnonzero(col)
        if hit.size:
            a[hit] = (a[hit] - np.outer(col[hit], a[r]) % p) % p
        pivots[r] = c
        r += 1
    return r, pivots[:r]


def _matmul_numpy(a, b, p):
    inner = a.shape[1]
    # exact int64 accumulation is safe while inner*(p-1)^2 < 2^63
    if inner == 0:
        return np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    if inner * (p - 1) ** 2 < 2**63:
        return (a @ b) % p
    out = np.zeros((a.shape[0], b.shape[1]), dtype=np.int64)
    for k in range(inner):
        out = (out + np.outer(a[:, k], b[k]) % p) % p
    return out


if numba is not None:

    @numba.njit(cache=True)
    def _inv_nb(x, p):
        # extended Euclid on nonnegative residues
        t, new_t = 0, 1
        r, new_r = p, x
        while new_r != 0:
            qt = r // new_r
            t, new_t = new_t, t - qt * new_t
            r, new_r = new_r, r - qt * new_r
        if t < 0:
            t += p
        return t

    @numba.njit(cache=True)
    def _rref_numba(a, p):
        rows, cols = a.shape
        pivots = np.empty(min(rows, cols), dtype=np.int64)
        r = 0
        for c in range(cols):
            if r == rows:
                break
            piv = -1
            for i in range(r, rows):
                if a[i, c] != 0:
                    piv = i
                    break
            if piv < 0:
                continue
            if piv != r:
                for j in range(cols):
                    tmp = a[r, j]
                    a[r, j] = a[piv, j]
                    a[piv, j] = tmp
            inv = _inv_nb(a[r, c], p)
            for j in range(c, cols):
                a[r, j] = a[r, j] * inv % p
            for i in range(rows):
                if i == r:
                    continue
                f = a[i, c]
                if f == 0:
                    continue
                for j in range(c, cols):
                    v = (a[i, j] - f * a[r, j]) % p
                    a[i, j] = v
            pivots[r] = c
            r += 1
        return r, pivots[:r]

    @numba.njit(cache=True)
    def _matmul_numba(a, b, p):
        n, inner = a.shape
        m = b.shape[1]
        out = np.zeros((n, m), dtype=np.int64)
        # reduce lazily: the accumulator may hold `room` products at once
        room = (2**62) // ((p - 1) * (p - 1) + 1)
        for i in range(n):
            pending = 0
            for k in range(inner):
                x = a[i, k]
                if x == 0:
                    continue
                for j in range(m):
                    out[i, j] += x * b[k, j]
                pending += 1
                if pending >= room:
                    for j in range(m):
                        out[i, j] %= p
                    pending = 0
            for j in range(m):
                out[i, j] %= p
        return out

else:  # pragma: no cover
    _rref_numba = None
    _matmul_numba = None


def rref_inplace(a: np.ndarray, p: int):
    if USE_NUMBA:
        return _rref_numba(a, np.int64(p))
    return _rref_numpy(a, p)


def matmul_mod(a: np.ndarray, b: np.ndarray, p: int) -> np.ndarray:
    if USE_NUMBA:
        return _matmul_numba(a, b, np.int64(p))
    return _matmul_numpy(a, b, p)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
