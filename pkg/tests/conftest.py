import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

SMALL_PRIMES = [2, 3, 5, 7, 11, 13, 17, 31, 101, 65537, 2_147_483_647]


@st.composite
def field_matrix(draw, max_rows=6, max_cols=6, primes=(2, 3, 5, 7, 11, 13, 101)):
    q = draw(st.sampled_from(primes))
    r = draw(st.integers(1, max_rows))
    c = draw(st.integers(1, max_cols))
    seed = draw(st.integers(0, 2**32 - 1))
    a = np.random.default_rng(seed).integers(0, q, size=(r, c), dtype=np.int64)
    return a, q


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
