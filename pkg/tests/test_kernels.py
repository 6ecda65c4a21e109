import os
import subprocess
import sys

import numpy as np
import pytest
from conftest import field_matrix
from hypothesis import given

from pir_squeeze import _kernels as K
from pir_squeeze import linalg as la
from pir_squeeze.scheme import SystemParams, simulate

needs_numba = pytest.mark.skipif(K._rref_numba is None, reason="numba not installed")


@needs_numba
@given(field_matrix(max_rows=8, max_cols=8, primes=(2, 3, 7, 65537, 2_147_483_647)))
def test_rref_backends_agree(mq):
    a, q = mq
    x, y = a.copy(), a.copy()
    r1, p1 = K._rref_numba(x, np.int64(q))
    r2, p2 = K._rref_numpy(y, q)
    assert r1 == r2 and np.array_equal(p1, p2) and np.array_equal(x, y)


@needs_numba
@given(field_matrix(max_rows=8, max_cols=8, primes=(2, 3, 7, 65537, 2_147_483_647)))
def test_matmul_backends_agree(mq):
    a, q = mq
    b = np.random.default_rng(a.size).integers(0, q, size=(a.shape[1], 5), dtype=np.int64)
    expect = (a.astype(object) @ b.astype(object)) % q
    assert np.array_equal(K._matmul_numba(a, b, np.int64(q)), expect.astype(np.int64))
    assert np.array_equal(K._matmul_numpy(a, b, q), expect.astype(np.int64))


def test_numpy_fallback_end_to_end(monkeypatch):
    monkeypatch.setattr(K, "USE_NUMBA", False)
    assert K.backend() == "numpy"
    tr, runs = simulate(SystemParams(2, 4, 2, 2, q=3))
    assert tr.success and tr.achieved_rate == tr.closed_form_rate
    assert la.rank(np.eye(3, dtype=np.int64), 5) == 3


def test_env_flag_selects_numpy():
    env = dict(os.environ, PIR_SQUEEZE_NO_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", "from pir_squeeze import _kernels; print(_kernels.backend())"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
