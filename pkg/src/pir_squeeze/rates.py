"""Closed-form retrieval rates and capacity references as exact fractions."""
from __future__ import annotations

from fractions import Fraction
from math import comb

from .errors import NotApplicable

GENERIC = "generic"
GRS = "grs"


def binom(n: int, k: int) -> int:
    """Binomial coefficient that is 0 outside 0 <= k <= n."""
    if n < 0 or k < 0 or k > n:
        return 0
    return comb(n, k)


def _need(cond: bool, what: str):
    if not cond:
        raise NotApplicable(what)


def _flavor(flavor: str) -> str:
    if flavor not in (GENERIC, GRS):
        raise ValueError(f"flavor must be {GENERIC!r} or {GRS!r}, got {flavor!r}")
    return flavor


def fghk_rate(m: int, n: int, t: int, k: int) -> Fraction:
    """(1 + rho + ... + rho^(M-1))^-1 with rho = (K+T-1)/N."""
    _need(min(m, n, t, k) >= 1 and k + t - 1 <= n, f"fghk undefined at M={m} N={n} T={t} K={k}")
    rho = Fraction(k + t - 1, n)
    return 1 / sum(rho**i for i in range(m))


def generic_extra(n: int, k: int) -> int:
    """Undesired download per file, scaled by (N^2 - N)/L, for a generic code."""
    if n <= 2 * k:
        return n * n - n + k * k - n * k
    return 2 * n * k - k * k - k


def grs_extra(n: int, k: int) -> int:
    return n * k + n - 2 * k


def rate_generic_t2(n: int, k: int) -> Fraction:
    """Two colluders, generic MDS storage."""
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    base = n * n - n
    return Fraction(base, base + generic_extra(n, k))



def rate_grs_t2(n: int, k: int) -> Fraction:
    """Two colluders, GRS storage."""
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    return Fraction(n * n - n, n * n + k * n - 2 * k)


def rate_multi(m: int, n: int, k: int, p: int, flavor: str = GRS) -> Fraction:
    """P-out-of-M rate; P = 1 gives the arbitrary-M single-file rate."""
    _need(m >= 2 and 1 <= p <= m, f"needs 1 <= P <= M, M >= 2, got M={m} P={p}")
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    extra = grs_extra(n, k) if _flavor(flavor) == GRS else generic_extra(n, k)
    base = p * (n * n - n)
    return Fraction(base, base + (m - p) * extra)


def rate_cyclic(n: int, k: int, flavor: str = GRS) -> Fraction:
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    if _flavor(flavor) == GRS:
        return Fraction(k * n, k * n + k * k + 1)
    if n <= 2 * k:
        return Fraction(k * n, k * n + k * k - k + n - 1)
    return Fraction(n, n + k + 1)


def general_t_terms(n: int, t: int, k: int) -> tuple[dict[int, int], dict[int, int]]:
    """(delta, lambda) keyed by T' in 1..T."""
    delta = {tp: binom(n - t, k - tp) for tp in range(1, t + 1)}
    lam = {1: min(k + t - 1, n)}
    for tp in range(2, t + 1):
        lam[tp] = min(n * binom(t - 1, tp - 1), k * binom(t, tp))
    return delta, lam


def general_t_dimension(n: int, t: int, k: int) -> int:
    delta, lam = general_t_terms(n, t, k)
    return sum(lam[tp] * delta[tp] for tp in delta)


def rate_general_t(n: int, t: int, k: int) -> Fraction:
    _need(t >= 3 and k >= 1 and n >= k + t, f"needs T >= 3 and N >= K+T, got N={n} T={t} K={k}")
    ell = binom(n, k) * k
    return Fraction(ell, ell + general_t_dimension(n, t, k))


def rate_t3(n: int, k: int) -> Fraction:
    """The specialised three-colluder formulas, split on 2N vs 3K."""
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    num = n * (n - 1) * (n - 2)
    if 2 * n > 3 * k:
        den = n**3 - n**2 + n * k**2 + k * n**2 - k**3 + 3 * k**2 - 8 * n * k + 4 * k
    else:
        den = n**3 - 3 * n**2 + 3 * n**2 * k - 4 * n * k**2 - 3 * n * k + 2 * k**3 + 4 * k
    return Fraction(num, den)


def t2_dimension(n: int, k: int, flavor: str) -> int:
    """Undesired dimension L - sigma(N-K) - mu*zeta for two colluders."""
    sigma, mu = binom(n - 2, k - 2), binom(n - 2, k - 1)
    zeta = n - k - 1 if _flavor(flavor) == GRS else max(1, n - 2 * k)
    return binom(n, k) * k - sigma * (n - k) - mu * zeta


def cyclic_dimension(n: int, k: int, flavor: str) -> int:
    zeta = n - k - 1 if _flavor(flavor) == GRS else max(1, n - 2 * k)
    return k * n - (k - 1) * (n - k) - zeta


def sun_jafar_capacity(n: int, t: int) -> Fraction:
    """Two files, K = N - 1."""
    _need(n >= 2 and t >= 1, f"bad point N={n} T={t}")
    return Fraction(n * n - n, 2 * n * n - 3 * n + t)


def linear_capacity_k2(n: int) -> Fraction:
    _need(n >= 4, f"needs N >= 4, got N={n}")
    return Fraction(n * n - n, n * n + 2 * n - 4)


def cyclic_capacity(n: int, k: int) -> Fraction:
    _need(k >= 1 and n >= k + 2, f"needs N >= K+2, got N={n} K={k}")
    return Fraction(n * k, n * k + k * k + 1)


def capacity_refs(n: int, t: int, k: int, m: int = 2) -> dict[str, Fraction]:
    """Every reference value that applies at (M, N, T, K), keyed by source."""
    out: dict[str, Fraction] = {}
    try:
        out["fghk_conjecture"] = fghk_rate(m, n, t, k)
    except NotApplicable:
        pass
    if m == 2 and k == n - 1:
        out["sun_jafar_capacity"] = sun_jafar_capacity(n, t)
    if m == 2 and t == 2 and k == 2 and n >= 4:
        out["linear_capacity"] = linear_capacity_k2(n)
    if m == 2 and t == 2 and n >= k + 2:
        out["cyclic_capacity"] = cyclic_capacity(n, k)
        # the full-collusion capacity is bracketed by these two
        out["collusion_lower_bound"] = rate_grs_t2(n, k)
        out["collusion_upper_bound"] = cyclic_capacity(n, k)
    return out


def closed_form_rate(params) -> Fraction:
    """The rate the scheme should achieve for a validated SystemParams."""
    v, flavor = params.variant, params.code
    if v in ("general", "grs"):
        if params.m == 2:
            return rate_grs_t2(params.n, params.k) if flavor == GRS else rate_generic_t2(params.n, params.k)
        return rate_multi(params.m, params.n, params.k, 1, flavor)
    if v == "multifile":
        return rate_multi(params.m, params.n, params.k, params.p, flavor)
    if v == "cyclic":
        if params.m != 2:
            raise NotApplicable("cyclic closed form is stated for two files only")
        return rate_cyclic(params.n, params.k, flavor)
    if v == "generalT":
        if params.m != 2:
            raise NotApplicable("general-T closed form is stated for two files only")
        return rate_general_t(params.n, params.t, params.k)
    raise NotApplicable(f"unknown variant {v!r}")


def rate_table_row(m: int, n: int, t: int, k: int) -> dict[str, Fraction]:
    """All scheme rates and references that apply at one parameter point."""
    row: dict[str, Fraction] = {}
    candidates = {
        "fghk": lambda: fghk_rate(m, n, t, k),
        "generic": lambda: rate_multi(m, n, k, 1, GENERIC) if t == 2 else _na(),
        "grs": lambda: rate_multi(m, n, k, 1, GRS) if t == 2 else _na(),
        "cyclic_generic": lambda: rate_cyclic(n, k, GENERIC) if m == 2 and t == 2 else _na(),
        "cyclic_grs": lambda: rate_cyclic(n, k, GRS) if m == 2 and t == 2 else _na(),
        "general_t": lambda: rate_general_t(n, t, k) if m == 2 else _na(),
    }
    for name, fn in candidates.items():
        try:
            row[name] = fn()
        except NotApplicable:
            pass
    for name, val in capacity_refs(n, t, k, m).items():
        row.setdefault(name, val)
    row.pop("fghk_conjecture", None)
    return row


def _na():
    raise NotApplicable("not defined here")
