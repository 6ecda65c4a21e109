"""Auditors: privacy structure, strategy spanning and redundancy dimension."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations, permutations, product
from math import factorial

import numpy as np

from . import linalg as la
from . import rates
from .scheme import CombinationStrategy, QueryPlan, functionals, undesired_functional_matrix


# ---------------------------------------------------------------------------
# privacy


def colluding_sets(plan: QueryPlan, t: int | None = None) -> list[tuple[int, ...]]:
    n = plan.params.n
    if plan.params.cyclic:
        return [tuple(sorted((i, (i + 1) % n))) for i in range(n)]
    t = plan.params.t if t is None else t
    return list(combinations(range(n), t))


def subspace_profile(spaces: list[la.Subspace]) -> dict[str, int]:
    """Dimensions describing how a family of subspaces sits together.

    Keys: "cap" + positions for every intersection of a nonempty
    sub-collection, "span" for the joint span and "only" + positions for
    the part of an intersection not inside the span of the remaining
    spaces.  Sub-collections are listed by size, then lexicographically.
    """
    idx = range(len(spaces))
    prof: dict[str, int] = {}
    caps: dict[tuple, la.Subspace] = {}
    for size in range(1, len(spaces) + 1):
        for sub in combinations(idx, size):
            cap = spaces[sub[0]]
            for i in sub[1:]:
                cap = cap.intersect(spaces[i])
            caps[sub] = cap
            prof["cap" + "".join(map(str, sub))] = cap.dim
    joint = spaces[0]
    for s in spaces[1:]:
        joint = joint.sum(s)
    prof["span"] = joint.dim
    for sub, cap in caps.items():
        rest = [i for i in idx if i not in sub]
        if not rest:
            continue
        others = spaces[rest[0]]
        for i in rest[1:]:
            others = others.sum(spaces[i])
        prof["only" + "".join(map(str, sub))] = cap.dim - cap.intersect(others).dim
    return prof


def incidence_profile(plan: QueryPlan, subset: tuple[int, ...]) -> dict[str, int]:
    """The same profile computed by counting V vectors (the disguise target)."""
    members = [set(s) for s in plan.structure.v_assignment]
    idx = range(len(subset))
    prof = {}
    for size in range(1, len(subset) + 1):
        for sub in combinations(idx, size):
            want = {subset[i] for i in sub}
            prof["cap" + "".join(map(str, sub))] = sum(want <= m for m in members)
    every = set(subset)
    prof["span"] = sum(bool(every & m) for m in members)
    for size in range(1, len(subset)):
        for sub in combinations(idx, size):
            want = {subset[i] for i in sub}
            avoid = every - want
            prof["only" + "".join(map(str, sub))] = sum(want <= m and not (avoid & m) for m in members)
    return prof


@dataclass
class PrivacyReport:
    subsets: list = field(default_factory=list)
    verdict: bool = True
    witness: dict | None = None

    def to_obj(self) -> dict:
        return {"verdict": self.verdict, "subsets_checked": len(self.subsets), "witness": self.witness}


def structural_privacy_audit(plan: QueryPlan, t: int | None = None) -> PrivacyReport:
    """Compare, for every colluding set, the profiles of every file's query spaces.

    All files must share one profile, and it must equal the incidence target
    of the desired-file design.
    """
    params = plan.params
    report = PrivacyReport()
    for subset in colluding_sets(plan, t):
        target = incidence_profile(plan, subset)
        entry = {"servers": [s + 1 for s in subset], "target": target, "files": {}}
        for f in range(params.m):
            spaces = [la.Subspace.span(plan.queries[f][n], params.q, params.b) for n in subset]
            prof = subspace_profile(spaces)
            entry["files"][f] = prof
            if report.verdict and prof != target:
                bad = next(key for key in target if prof.get(key) != target[key])
                report.verdict = False
                report.witness = {"servers": [s + 1 for s in subset], "file": f, "role": plan.role(f),
                                  "quantity": bad, "expected": target[bad], "found": prof.get(bad)}
        report.subsets.append(entry)
    return report


# ---------------------------------------------------------------------------
# strategy spanning


@dataclass
class SpanReport:
    mode: str
    trials: int
    failures: int
    verdict: bool
    witness: list | None = None

    def to_obj(self) -> dict:
        return {"mode": self.mode, "trials": self.trials, "failures": self.failures,
                "verdict": self.verdict, "witness": self.witness}


def permutation_tuple_count(plan: QueryPlan) -> int:
    return factorial(plan.params.r) ** plan.params.n


def _span_ok(blocks: list[np.ndarray], full_rank: int, q: int) -> bool:
    return la.rank(np.vstack(blocks), q) == full_rank


def strategy_completeness_check(plan: QueryPlan, strategy: CombinationStrategy, mode: str = "auto",
                                budget: int = 10_000, rng: np.random.Generator | None = None,
                                file: int | None = None) -> SpanReport:
    """Do the raw undesired symbols span all queried ones, whatever the permutations?

    Every server's query order is varied over all r!^N tuples when that count
    fits in ``budget`` (or ``mode="exhaustive"``), otherwise over ``budget``
    uniform samples.  Plans sent in echelon form have no permutation; their
    one fixed query tuple is checked.
    """
    params = plan.params
    q, r, n = params.q, params.r, params.n
    f = plan.undesired[0] if file is None else file
    g = plan.code.generator
    sets = plan.sets[f]
    queried = np.vstack([functionals(sets[s], g[:, s], q) for s in range(n)])
    full = la.rank(queried, q)

    def block(s, perm):
        rows = la.matmul(strategy.c_n[s], sets[s][list(perm)], q)[: strategy.i_n[s]]
        return functionals(rows, g[:, s], q)

    if plan.perms is None:
        blocks = [functionals(la.matmul(strategy.c_n[s], plan.queries[f][s], q)[: strategy.i_n[s]], g[:, s], q)
                  for s in range(n)]
        ok = _span_ok(blocks, full, q)
        return SpanReport("fixed", 1, int(not ok), ok, None if ok else [])

    count = permutation_tuple_count(plan)
    if mode == "auto":
        mode = "exhaustive" if count <= budget else "sampled"
    if mode not in ("exhaustive", "sampled"):
        raise ValueError(f"mode must be auto, exhaustive or sampled, got {mode!r}")
    failures, trials, witness = 0, 0, None
    if mode == "exhaustive":
        perms = list(permutations(range(r)))
        cache = [[block(s, p) for p in perms] for s in range(n)]
        for choice in product(range(len(perms)), repeat=n):
            trials += 1
            if not _span_ok([cache[s][c] for s, c in enumerate(choice)], full, q):
                failures += 1
                if witness is None:
                    witness = [list(perms[c]) for c in choice]
    else:
        rng = np.random.default_rng(0) if rng is None else rng
        for _ in range(budget):
            trials += 1
            tup = [tuple(int(x) for x in rng.permutation(r)) for _ in range(n)]
            if not _span_ok([block(s, p) for s, p in enumerate(tup)], full, q):
                failures += 1
                if witness is None:
                    witness = [list(p) for p in tup]
    return SpanReport(mode, trials, failures, failures == 0, witness)


# ---------------------------------------------------------------------------
# redundancy


def expected_dimension(params) -> int:
    """Queried undesired dimension the scheme accounts for."""
    if params.variant == "generalT":
        return rates.general_t_dimension(params.n, params.t, params.k)
    if params.cyclic:
        return rates.cyclic_dimension(params.n, params.k, params.code)
    return rates.t2_dimension(params.n, params.k, params.code)


def measured_dimension(plan: QueryPlan, file: int | None = None) -> int:
    return la.rank(undesired_functional_matrix(plan, file), plan.params.q)


def redundancy_audit(plan: QueryPlan, expected_i: int | None = None) -> bool:
    """rank <= expected for every undesired file, with equality for GRS storage."""
    exp = expected_dimension(plan.params) if expected_i is None else expected_i
    for f in plan.undesired:
        got = measured_dimension(plan, f)
        if got > exp or (plan.code.grs is not None and got != exp):
            return False
    return True


@dataclass
class AuditBundle:
    privacy: PrivacyReport
    span: SpanReport
    redundancy_ok: bool
    redundancy_expected: int
    redundancy_measured: dict

    @property
    def verdict(self) -> bool:
        return self.privacy.verdict and self.span.verdict and self.redundancy_ok

    def to_obj(self) -> dict:
        return {
            "verdict": self.verdict,
            "privacy": self.privacy.to_obj(),
            "span": self.span.to_obj(),
            "redundancy": {"verdict": self.redundancy_ok, "expected": self.redundancy_expected,
                           "measured": {str(f): v for f, v in self.redundancy_measured.items()}},
        }


def run_audits(plan: QueryPlan, strategy: CombinationStrategy, budget: int = 10_000,
               rng: np.random.Generator | None = None) -> AuditBundle:
    exp = expected_dimension(plan.params)
    measured = {f: measured_dimension(plan, f) for f in plan.undesired}
    return AuditBundle(
        privacy=structural_privacy_audit(plan),
        span=strategy_completeness_check(plan, strategy, budget=budget, rng=rng),
        redundancy_ok=redundancy_audit(plan, exp),
        redundancy_expected=exp,
        redundancy_measured=measured,
    )
