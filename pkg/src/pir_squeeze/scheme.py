"""Query construction, server answers and reconstruction.

A retrieval runs in three steps.

1. ``build_query_plan``: the user draws one invertible matrix per file
   (rows V_i for desired files, rows Z/U for undesired ones) and builds the
   per-server query sets.  Desired and undesired sets have the same
   intersection pattern, so T colluders cannot tell them apart.
2. ``server_answer``: server n mixes its queried symbols with C_n, then sends
   the first I_n of them raw for every file and the rest as D-combinations.
3. ``reconstruct``: the raw undesired symbols span every queried undesired
   symbol, so the interference is cancelled and the desired files are
   decoded.

Files are B x K matrices over F_q with B = C(N, K) (B = N for cyclic
collusion), so L = B*K symbols.  Server n stores W @ g_n.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from math import comb

import numpy as np

from . import codes
from . import linalg as la
from . import rates
from .errors import (DimensionMismatch, FieldTooSmall, NoSolution, NotApplicable,
                     SpanFailure, ValidationError)
from .gf import MAX_MODULUS, check_modulus, smallest_prime_geq

VARIANTS = ("general", "grs", "multifile", "cyclic", "generalT")
DEFAULT_FLAVOR = {"general": "generic", "grs": "grs", "multifile": "grs",
                  "cyclic": "grs", "generalT": "grs"}
RANDOM_FIELD_FLOOR = 2**16
# empirical failure budget for the randomized (T >= 3) strategy
EPSILON_THRESHOLD = Fraction(1, 100)

# independent random streams derived from the seed
STREAM_CODE, STREAM_H, STREAM_FILES, STREAM_PLAN, STREAM_STRATEGY, STREAM_CHOICE = range(1, 7)


def stream(seed: int, kind: int, *extra: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), kind, *extra])


@dataclass(frozen=True)
class SystemParams:
    m: int
    n: int
    t: int
    k: int
    p: int = 1
    variant: str = "general"
    q: int = 0
    seed: int = 0
    code: str | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        flavor = self.code or DEFAULT_FLAVOR[self.variant]
        if flavor not in ("generic", "grs"):
            raise ValidationError(f"code flavor must be 'generic' or 'grs', got {flavor!r}")
        object.__setattr__(self, "code", flavor)
        m, n, t, k, p = self.m, self.n, self.t, self.k, self.p
        if m < 2:
            raise ValidationError("need at least two files")
        if k < 1:
            raise ValidationError("need K >= 1")
        if self.variant == "multifile":
            if not 1 <= p <= m:
                raise ValidationError(f"need 1 <= P <= M, got P={p}, M={m}")
        elif p != 1:
            raise ValidationError(f"variant {self.variant} retrieves one file; P must be 1")
        if self.variant == "generalT":
            if t < 3:
                raise ValidationError("generalT needs T >= 3; use general/grs for T = 2")
            if flavor != "grs":
                raise ValidationError("the T >= 3 scheme is defined for GRS storage only")
        elif t != 2:
            raise ValidationError(f"variant {self.variant} is defined for T = 2")
        if t >= n:
            raise ValidationError(f"need T < N, got T={t}, N={n}")
        if n < k + t:
            raise ValidationError(f"need N >= K + T, got N={n}, K={k}, T={t}")
        if self.q == 0:
            object.__setattr__(self, "q", self.auto_q())
        check_modulus(self.q)
        need = self.min_q()
        if self.q < need:
            raise FieldTooSmall(f"q = {self.q} is too small for these parameters; need q >= {need}")

    # derived sizes -------------------------------------------------------

    @property
    def cyclic(self) -> bool:
        return self.variant == "cyclic"

    @property
    def b(self) -> int:
        """Rows per file: the number of V vectors."""
        return self.n if self.cyclic else comb(self.n, self.k)

    @property
    def r(self) -> int:
        """Query rows per server per file, L/N."""
        return self.k if self.cyclic else comb(self.n - 1, self.k - 1)

    @property
    def l(self) -> int:
        return self.b * self.k

    def deltas(self) -> dict[int, int]:
        """Number of query blocks of each intersection order T'."""
        if self.cyclic:
            return {2: self.k - 1, 1: 1}
        return {tp: rates.binom(self.n - self.t, self.k - tp) for tp in range(1, self.t + 1)}

    def zeta(self) -> int:
        if self.code == "grs":
            return self.n - self.k - 1
        return max(1, self.n - 2 * self.k)

    def intermediate_servers(self) -> int:
        if self.variant == "generalT":
            return 0
        return self.n - self.zeta() - self.k

    # field size ----------------------------------------------------------

    def min_q(self) -> int:
        need = 2
        if self.code == "grs":
            need = max(need, self.n)
        if self.variant == "generalT":
            need = max(need, self.n - 1)
        elif self.intermediate_servers() > 0:
            need = max(need, self.r)  # distinct Vandermonde nodes for C_n
        if self.p >= 2:
            need = max(need, self.m)  # nodes for D
        return need

    def auto_q(self) -> int:
        if self.variant == "generalT":
            return smallest_prime_geq(max(RANDOM_FIELD_FLOOR, self.n))
        if self.cyclic:
            base = max(self.n, self.k)
        else:
            base = max(self.n, comb(self.n - 1, self.k - 1))
        if self.p >= 2:
            base = max(base, self.m)
        q = smallest_prime_geq(max(base, 2))
        if q > MAX_MODULUS:
            raise FieldTooSmall("parameters need a field beyond the supported range")
        return q

    def public_dict(self) -> dict:
        return {"m": self.m, "n": self.n, "t": self.t, "k": self.k, "p": self.p,
                "variant": self.variant, "q": self.q, "seed": self.seed}


# ---------------------------------------------------------------------------
# public design: storage code and H matrices


def default_code(params: SystemParams) -> codes.StorageCode:
    """GRS on points 0..N-1, or a seeded random systematic MDS code."""
    if params.code == "grs":
        return codes.StorageCode.from_grs(codes.GrsSpec.standard(params.n, params.k, params.q))
    return codes.StorageCode.random_systematic(params.n, params.k, params.q,
                                               stream(params.seed, STREAM_CODE))


def tilde_functionals(h: np.ndarray, g: np.ndarray, q: int) -> np.ndarray:
    """Row n is the functional of U~_{n,j} in (U_t, x_k) coordinates: H[n] (x) g_n."""
    rows = h[:, :, None] * g.T[:, None, :]
    return rows.reshape(h.shape[0], -1) % q


def _prefix_spans(params: SystemParams, g: np.ndarray):
    """Acceptance test for H: servers before the redundant tail span the rest."""
    keep = params.n - params.zeta()

    def accept(h):
        f = tilde_functionals(h, g, params.q)
        return la.rank(f[:keep], params.q) == la.rank(f, params.q)

    return accept


def default_h(params: SystemParams, code: codes.StorageCode, max_retries: int = 1000) -> np.ndarray:
    if code.grs is not None:
        return codes.build_h_grs(code.grs, params.t)
    g_sys = codes.to_systematic(code.generator, params.q)
    return codes.build_h_generic(g_sys, params.t, params.q, stream(params.seed, STREAM_H),
                                 max_retries=max_retries,
                                 accept=_prefix_spans(params, code.generator))


def default_h_star(params: SystemParams) -> dict[int, np.ndarray]:
    return {tp: codes.build_h_star(params.n, params.t, tp, params.q) for tp in range(2, params.t)}


# ---------------------------------------------------------------------------
# query structure


def design_v_sets(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Vector j goes to the j-th K-subset of servers in lexicographic order."""
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    return tuple(combinations(range(n), k))


def design_v_sets_cyclic(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Vector i goes to servers i, i+1, ..., i+K-1 (mod N)."""
    if not 1 <= k <= n:
        raise ValidationError(f"need 1 <= k <= n, got k={k}, n={n}")
    return tuple(tuple(sorted((i + s) % n for s in range(k))) for i in range(n))


def server_vectors(assignment, n: int) -> tuple[tuple[int, ...], ...]:
    per = [[] for _ in range(n)]
    for j, servers in enumerate(assignment):
        for s in servers:
            per[s].append(j)
    return tuple(tuple(v) for v in per)


@dataclass(frozen=True, eq=False)
class QueryStructure:
    """Public shape of the queries, as coefficients on the rows of S (or S').

    v_coeffs[n] and u_coeffs[n] are r x B matrices: the set sent to server n
    for a desired (resp. undesired) file is coeffs[n] @ S_file.
    """

    v_assignment: tuple
    server_vectors: tuple
    v_coeffs: tuple
    u_coeffs: tuple
    u_labels: tuple
    h: np.ndarray
    h_star: dict


def build_structure(params: SystemParams, h: np.ndarray, h_star: dict) -> QueryStructure:
    n, t, q, b, r = params.n, params.t, params.q, params.b, params.r
    assignment = design_v_sets_cyclic(n, params.k) if params.cyclic else design_v_sets(n, params.k)
    per_server = server_vectors(assignment, n)
    eye_b = la.identity(b)
    v_coeffs = tuple(eye_b[list(vs)] for vs in per_server)

    deltas = params.deltas()
    top = 2 if params.cyclic else t
    nxt = 0
    z_rows = list(range(nxt, nxt + deltas[top]))
    nxt += deltas[top]
    # star blocks: base rows U^{(T')}_{j, c}, c over C(T, T') wedge coordinates
    star_base = {}
    for tp in range(t - 1, 1, -1):
        width = comb(t, tp)
        star_base[tp] = [list(range(nxt + j * width, nxt + (j + 1) * width)) for j in range(deltas[tp])]
        nxt += deltas[tp] * width
    width = 2 if params.cyclic else t
    mu = deltas[1]
    tilde_base = [[nxt + s * mu + j for s in range(width)] for j in range(mu)]
    nxt += width * mu
    if nxt > b:
        raise ValidationError("query structure needs more rows than S' provides")

    u_coeffs, u_labels = [], []
    for srv in range(n):
        rows, labels = [], []
        for i, z in enumerate(z_rows):
            rows.append(eye_b[z])
            labels.append(f"Z{i + 1}")
        for tp in range(t - 1, 1, -1):
            d = comb(t - 1, tp - 1)
            block = h_star[tp][srv * d:(srv + 1) * d]
            for j, base in enumerate(star_base[tp]):
                for e in range(d):
                    vec = np.zeros(b, dtype=np.int64)
                    vec[base] = block[e]
                    rows.append(vec)
                    labels.append(f"U*{tp}.{j + 1}.{e + 1}")
        for j, base in enumerate(tilde_base):
            vec = np.zeros(b, dtype=np.int64)
            vec[base] = h[srv, :width]
            rows.append(vec)
            labels.append(f"U~{j + 1}")
        mat = np.array(rows, dtype=np.int64).reshape(len(rows), b) % q
        if mat.shape[0] != r:
            raise ValidationError(f"server {srv} got {mat.shape[0]} undesired rows, expected {r}")
        u_coeffs.append(mat)
        u_labels.append(tuple(labels))
    return QueryStructure(assignment, per_server, v_coeffs, tuple(u_coeffs), tuple(u_labels), h, h_star)


@dataclass(frozen=True, eq=False)
class QueryPlan:
    """Everything the user knows: public design plus private randomness.

    ``s[f]`` is the invertible matrix of file f (S for desired files, S' for
    the others); ``sets[f][n]`` the unpermuted query set; ``queries[f][n]``
    what server n receives; ``recover[f][n]`` satisfies
    sets[f][n] = recover[f][n] @ queries[f][n].
    """

    params: SystemParams
    code: codes.StorageCode
    structure: QueryStructure
    desired: tuple
    s: tuple
    sets: tuple
    perms: tuple | None
    queries: tuple
    recover: tuple

    @property
    def undesired(self) -> tuple:
        return tuple(f for f in range(self.params.m) if f not in self.desired)

    def role(self, f: int) -> str:
        return "desired" if f in self.desired else "undesired"

    def labels(self, f: int, n: int) -> tuple:
        if f in self.desired:
            return tuple(f"V{j + 1}" for j in self.structure.server_vectors[n])
        return self.structure.u_labels[n]


def _transmit(params: SystemParams, set_rows: np.ndarray, perm):
    """Query matrix actually sent, and the private map back to the set."""
    q, r = params.q, params.r
    if perm is not None:
        query = set_rows[list(perm)]
        back = np.zeros((r, r), dtype=np.int64)
        back[list(perm), np.arange(r)] = 1
        return query, back
    query = la.row_basis(set_rows, q)
    if query.shape[0] != r:
        raise ValidationError("query set is rank deficient")
    back = la.solve(query.T, set_rows.T, q).T
    return query, back


def choose_desired(params: SystemParams, rng: np.random.Generator) -> tuple[int, ...]:
    picks = rng.choice(params.m, size=params.p, replace=False)
    return tuple(sorted(int(x) for x in picks))


def build_query_plan(params: SystemParams, code: codes.StorageCode, desired, rng: np.random.Generator,
                     h: np.ndarray | None = None,
                     structure: QueryStructure | None = None) -> QueryPlan:
    """Draw S/S' and permutations and assemble every server's queries."""
    desired = tuple(sorted(int(f) for f in desired))
    if len(desired) != params.p or len(set(desired)) != params.p or not all(0 <= f < params.m for f in desired):
        raise ValidationError(f"need {params.p} distinct desired files in [0, {params.m})")
    if code.n != params.n or code.k != params.k or code.q != params.q:
        raise DimensionMismatch("storage code does not match the parameters")
    if structure is None:
        _, structure = public_design(params, code, h)
    rref_queries = params.variant == "generalT"
    s, sets, perms, queries, recover = [], [], [], [], []
    for f in range(params.m):
        s.append(la.random_full_rank(params.b, params.q, rng))
    for f in range(params.m):
        coeffs = structure.v_coeffs if f in desired else structure.u_coeffs
        f_sets, f_perm, f_q, f_back = [], [], [], []
        for n in range(params.n):
            rows = la.matmul(coeffs[n], s[f], params.q)
            perm = None if rref_queries else tuple(int(x) for x in rng.permutation(params.r))
            query, back = _transmit(params, rows, perm)
            f_sets.append(rows)
            f_perm.append(perm)
            f_q.append(query)
            f_back.append(back)
        sets.append(tuple(f_sets))
        perms.append(tuple(f_perm))
        queries.append(tuple(f_q))
        recover.append(tuple(f_back))
    return QueryPlan(params, code, structure, desired, tuple(s), tuple(sets),
                     None if rref_queries else tuple(perms), tuple(queries), tuple(recover))


def replace_row(plan: QueryPlan, file: int, server: int, row: int, vector) -> QueryPlan:
    """Copy of ``plan`` with one set row of (file, server) set to ``vector``, re-sent."""
    params = plan.params
    rows = plan.sets[file][server].copy()
    rows[row] = la.as_matrix(vector, params.q)[0]
    if la.rank(rows, params.q) != params.r:
        raise ValidationError("replacement makes the query set rank deficient")
    perm = None if plan.perms is None else plan.perms[file][server]
    query, back = _transmit(params, rows, perm)

    def swap(per_file, value):
        out = [list(x) for x in per_file]
        out[file][server] = value
        return tuple(map(tuple, out))

    return dataclasses.replace(plan, sets=swap(plan.sets, rows), queries=swap(plan.queries, query),
                               recover=swap(plan.recover, back))


def corrupt_plan(plan: QueryPlan, file: int, server: int, row: int, rng: np.random.Generator) -> QueryPlan:
    """Copy of ``plan`` with one set row of (file, server) replaced by a fresh random vector.

    The replacement keeps the set full rank but always changes its span, so
    the result is a genuine fault rather than a change of basis.
    """
    params = plan.params
    old = plan.sets[file][server]
    rows = old.copy()
    while True:
        rows[row] = la.random_matrix(1, params.b, params.q, rng)[0]
        if la.rank(rows, params.q) == params.r and la.rank(np.vstack([old, rows]), params.q) > params.r:
            return replace_row(plan, file, server, row, rows[row])


# ---------------------------------------------------------------------------
# storage and answers


def random_files(params: SystemParams, rng: np.random.Generator) -> np.ndarray:
    """M files, each B x K, as one (M, B, K) array."""
    return rng.integers(0, params.q, size=(params.m, params.b, params.k), dtype=np.int64)


def store_files(files: np.ndarray, code: codes.StorageCode) -> np.ndarray:
    """chunks[f, n] = W_f @ g_n, shape (M, N, B)."""
    files = np.asarray(files, dtype=np.int64)
    if files.ndim != 3 or files.shape[2] != code.k:
        raise DimensionMismatch(f"files must have shape (M, B, {code.k}), got {files.shape}")
    out = np.empty((files.shape[0], code.n, files.shape[1]), dtype=np.int64)
    for f in range(files.shape[0]):
        out[f] = la.matmul(files[f], code.generator, code.q).T
    return out


def functionals(rows: np.ndarray, g_col: np.ndarray, q: int) -> np.ndarray:
    """Linear functionals on the flattened file (index b*K + k) for rows applied at a server."""
    g_col = np.asarray(g_col)
    out = rows[:, :, None] * g_col[None, None, :]
    return out.reshape(rows.shape[0], rows.shape[1] * g_col.shape[0]) % q


@dataclass(frozen=True, eq=False)
class CombinationStrategy:
    i_n: tuple
    c_n: tuple
    d_matrix: np.ndarray
    strategy_seed: int | None = None

    def answer_size(self, params: SystemParams, n: int) -> int:
        return params.m * self.i_n[n] + params.p * (params.r - self.i_n[n])


def incremental_profile(params: SystemParams, structure: QueryStructure, code: codes.StorageCode) -> tuple:
    """dim(Q_1 + ... + Q_n) - dim(Q_1 + ... + Q_{n-1}) over undesired functionals.

    S' is taken as the identity; the dimensions do not depend on it.
    """
    q, g = params.q, code.generator
    acc = np.zeros((0, params.l), dtype=np.int64)
    prev, out = 0, []
    for n in range(params.n):
        acc = np.vstack([acc, functionals(structure.u_coeffs[n], g[:, n], q)])
        cur = la.rank(acc, q)
        out.append(cur - prev)
        prev = cur
        acc = la.row_basis(acc, q)
    return tuple(out)


def make_strategy(params: SystemParams, plan: QueryPlan | None = None,
                  strategy_seed: int | None = None) -> CombinationStrategy:
    """Raw-download counts I_n and mixing matrices C_n.

    T = 2: the first K servers download everything raw, the last zeta only
    sums, the ones in between download mu (1 for cyclic collusion) symbols
    after a Vandermonde mix.  T >= 3: C_n are random invertible matrices and
    I_n is the incremental dimension profile of the undesired queries.
    """
    n, k, r, q = params.n, params.k, params.r, params.q
    d = la.vandermonde(range(params.m), params.p, q) if params.p > 1 else np.ones((1, params.m), dtype=np.int64)
    if params.variant == "generalT":
        if plan is None:
            raise ValidationError("the randomized strategy needs the plan structure")
        seed = 0 if strategy_seed is None else int(strategy_seed)
        rng = stream(params.seed, STREAM_STRATEGY, seed)
        i_n = incremental_profile(params, plan.structure, plan.code)
        c_n = tuple(la.random_full_rank(r, q, rng) for _ in range(n))
        return CombinationStrategy(i_n, c_n, d, seed)
    zeta = params.zeta()
    mid = 1 if params.cyclic else rates.binom(n - 2, k - 1)
    i_n, c_n = [], []
    for s in range(n):
        if s < k:
            i_n.append(r)
            c_n.append(la.identity(r))
        elif s < n - zeta:
            i_n.append(mid)
            c_n.append(la.vandermonde(range(r), r, q) if mid < r else la.identity(r))
        else:
            i_n.append(0)
            c_n.append(la.identity(r))
    return CombinationStrategy(tuple(i_n), tuple(c_n), d, None)


def server_answer(plan: QueryPlan, strategy: CombinationStrategy, n: int, chunks) -> np.ndarray:
    """Answer of server n given its stored column for every file (shape (M, B)).

    Layout: the first I_n mixed symbols of every file (file-major), then for
    each remaining position the P rows of D applied across files.
    """
    params = plan.params
    q, i = params.q, strategy.i_n[n]
    chunks = np.asarray(chunks, dtype=np.int64)
    mixed = np.stack([
        la.matmul(strategy.c_n[n], la.matmul(plan.queries[f][n], chunks[f].reshape(-1, 1), q), q)[:, 0]
        for f in range(params.m)
    ])
    raw = mixed[:, :i].reshape(-1)
    sums = la.matmul(strategy.d_matrix, mixed[:, i:], q).T.reshape(-1)
    return np.concatenate([raw, sums])


def all_answers(plan: QueryPlan, strategy: CombinationStrategy, chunks: np.ndarray) -> list[np.ndarray]:
    return [server_answer(plan, strategy, n, chunks[:, n, :]) for n in range(plan.params.n)]


def undesired_values(plan: QueryPlan, strategy: CombinationStrategy, f: int, raw: list) -> list[np.ndarray]:
    """Every mixed symbol of undesired file f at every server, from the raw ones."""
    params = plan.params
    q, g = params.q, plan.code.generator
    down_rows, down_vals, need_rows = [], [], []
    for n in range(params.n):
        i = strategy.i_n[n]
        fn = functionals(la.matmul(strategy.c_n[n], plan.queries[f][n], q), g[:, n], q)
        down_rows.append(fn[:i])
        down_vals.append(raw[n][f])
        need_rows.append(fn[i:])
    a = np.vstack(down_rows)
    need = np.vstack(need_rows)
    vals = np.concatenate(down_vals)
    if need.shape[0]:
        try:
            coef = la.solve(a.T, need.T, q)
        except NoSolution as exc:
            raise SpanFailure(f"raw symbols of file {f} do not span its queried symbols") from exc
        need_vals = la.matmul(coef.T, vals.reshape(-1, 1), q)[:, 0]
    else:
        need_vals = np.zeros(0, dtype=np.int64)
    out, pos = [], 0
    for n in range(params.n):
        i = strategy.i_n[n]
        tail = need_vals[pos:pos + params.r - i]
        pos += params.r - i
        out.append(np.concatenate([raw[n][f], tail]))
    return out


def reconstruct(plan: QueryPlan, strategy: CombinationStrategy, answers) -> dict[int, np.ndarray]:
    """Recover every desired file from the N answers. Raises SpanFailure."""
    params = plan.params
    q, m, p, r = params.q, params.m, params.p, params.r
    des, und = plan.desired, plan.undesired
    raw, sums = [], []
    for n in range(params.n):
        i = strategy.i_n[n]
        ans = np.asarray(answers[n], dtype=np.int64)
        if ans.shape != (m * i + p * (r - i),):
            raise DimensionMismatch(f"server {n} answer has {ans.shape[0]} symbols")
        raw.append(ans[:m * i].reshape(m, i))
        sums.append(ans[m * i:].reshape(r - i, p).T)

    und_vals = {f: undesired_values(plan, strategy, f, raw) for f in und}
    d = strategy.d_matrix
    d_des_inv = la.inv(d[:, list(des)], q)
    g = plan.code.generator
    out = {}
    mixed = {f: [] for f in des}
    for n in range(params.n):
        i = strategy.i_n[n]
        s = sums[n].copy()
        for f in und:
            s = (s - la.matmul(d[:, [f]], und_vals[f][n][i:].reshape(1, -1), q)) % q
        solved = la.matmul(d_des_inv, s, q)
        for pos, f in enumerate(des):
            mixed[f].append(np.concatenate([raw[n][f], solved[pos]]))
    per_server = plan.structure.server_vectors
    for f in des:
        y = np.zeros((params.b, params.k), dtype=np.int64)
        known = {}
        for n in range(params.n):
            qvals = la.matmul(la.inv(strategy.c_n[n], q), mixed[f][n].reshape(-1, 1), q)
            set_vals = la.matmul(plan.recover[f][n], qvals, q)[:, 0]
            for pos, vec in enumerate(per_server[n]):
                known[(vec, n)] = int(set_vals[pos])
        for vec, servers in enumerate(plan.structure.v_assignment):
            vals = np.array([[known[(vec, n)] for n in servers]], dtype=np.int64)
            y[vec] = la.matmul(vals, la.inv(g[:, list(servers)], q), q)[0]
        out[f] = la.matmul(la.inv(plan.s[f], q), y, q)
    return out


def undesired_functional_matrix(plan: QueryPlan, file: int | None = None) -> np.ndarray:
    """N*r x L matrix of the functionals computed by one undesired file's queries."""
    f = plan.undesired[0] if file is None else file
    g = plan.code.generator
    return np.vstack([functionals(plan.queries[f][n], g[:, n], plan.params.q) for n in range(plan.params.n)])


# ---------------------------------------------------------------------------
# end-to-end runs


def _frac_obj(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


@dataclass(frozen=True)
class Transcript:
    """Serializable record of one run (or of the first of several trials)."""

    params: tuple
    per_server: tuple
    download_total: int
    l: int
    achieved_rate: Fraction
    closed_form_rate: Fraction
    success: bool
    epsilon_runs: int
    epsilon_failures: int

    def to_obj(self) -> dict:
        keys = ("m", "n", "t", "k", "p", "variant", "q", "seed")
        return {
            "params": dict(zip(keys, self.params)),
            "per_server": [{"server": s, "i_n": i, "answer_symbols": a} for s, i, a in self.per_server],
            "download_total": self.download_total,
            "l": self.l,
            "achieved_rate": _frac_obj(self.achieved_rate),
            "closed_form_rate": _frac_obj(self.closed_form_rate),
            "success": self.success,
            "epsilon_trials": {"runs": self.epsilon_runs, "failures": self.epsilon_failures},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2) + "\n"

    @classmethod
    def from_obj(cls, obj: dict) -> "Transcript":
        keys = ("m", "n", "t", "k", "p", "variant", "q", "seed")
        return cls(
            params=tuple(obj["params"][k] for k in keys),
            per_server=tuple((d["server"], d["i_n"], d["answer_symbols"]) for d in obj["per_server"]),
            download_total=obj["download_total"],
            l=obj["l"],
            achieved_rate=Fraction(obj["achieved_rate"]["num"], obj["achieved_rate"]["den"]),
            closed_form_rate=Fraction(obj["closed_form_rate"]["num"], obj["closed_form_rate"]["den"]),
            success=obj["success"],
            epsilon_runs=obj["epsilon_trials"]["runs"],
            epsilon_failures=obj["epsilon_trials"]["failures"],
        )

    @classmethod
    def from_json(cls, text: str) -> "Transcript":
        return cls.from_obj(json.loads(text))

    @property
    def rate_matches(self) -> bool:
        return self.achieved_rate == self.closed_form_rate


@dataclass(frozen=True, eq=False)
class Retrieval:
    """One full retrieval: inputs, user state and what came back."""

    plan: QueryPlan
    strategy: CombinationStrategy
    files: np.ndarray
    answers: list
    recovered: dict | None
    error: str | None

    @property
    def success(self) -> bool:
        return self.recovered is not None and all(
            np.array_equal(self.recovered[f], self.files[f]) for f in self.plan.desired)


def retrieve_once(params: SystemParams, code: codes.StorageCode, structure: QueryStructure,
                  trial: int = 0) -> Retrieval:
    files = random_files(params, stream(params.seed, STREAM_FILES, trial))
    desired = choose_desired(params, stream(params.seed, STREAM_CHOICE, trial))
    plan = build_query_plan(params, code, desired, stream(params.seed, STREAM_PLAN, trial), structure=structure)
    strategy = make_strategy(params, plan, strategy_seed=trial)
    answers = all_answers(plan, strategy, store_files(files, code))
    try:
        rec, err = reconstruct(plan, strategy, answers), None
    except SpanFailure as exc:
        rec, err = None, str(exc)
    return Retrieval(plan, strategy, files, answers, rec, err)


def public_design(params: SystemParams, code: codes.StorageCode | None = None,
                  h: np.ndarray | None = None) -> tuple[codes.StorageCode, QueryStructure]:
    code = default_code(params) if code is None else code
    if h is None:
        h = default_h(params, code)
    h_star = default_h_star(params) if params.variant == "generalT" else {}
    width = 2 if params.cyclic else params.t
    h = la.as_matrix(h, params.q)
    if h.shape != (params.n, width) or not la.is_row_mds(h, width, params.q):
        raise ValidationError(f"H must be a row-MDS {params.n}x{width} matrix")
    return code, build_structure(params, h, h_star)


def simulate(params: SystemParams, trials: int = 1, code: codes.StorageCode | None = None,
             h: np.ndarray | None = None) -> tuple[Transcript, list[Retrieval]]:
    """Run ``trials`` independent retrievals; the transcript reports trial 0."""
    if trials < 1:
        raise ValidationError("need at least one trial")
    code, structure = public_design(params, code, h)
    runs = [retrieve_once(params, code, structure, t) for t in range(trials)]
    failures = sum(not r.success for r in runs)
    first = runs[0]
    sizes = [first.strategy.answer_size(params, n) for n in range(params.n)]
    total = sum(sizes)
    achieved = Fraction(params.p * params.l, total)
    try:
        closed = rates.closed_form_rate(params)
    except NotApplicable:
        closed = Fraction(0)
    if params.variant == "generalT":
        ok = Fraction(failures, trials) <= EPSILON_THRESHOLD
    else:
        ok = failures == 0
    tr = Transcript(
        params=tuple(params.public_dict().values()),
        per_server=tuple((n + 1, first.strategy.i_n[n], sizes[n]) for n in range(params.n)),
        download_total=total,
        l=params.l,
        achieved_rate=achieved,
        closed_form_rate=closed,
        success=ok,
        epsilon_runs=trials,
        epsilon_failures=failures,
    )
    return tr, runs
