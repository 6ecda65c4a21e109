import dataclasses

import numpy as np
import pytest

from pir_squeeze import audit
from pir_squeeze import linalg as la
from pir_squeeze import scheme as S
from pir_squeeze.errors import ValidationError


def fresh(trial=0, **kw):
    params = S.SystemParams(**kw)
    code, structure = S.public_design(params)
    run = S.retrieve_once(params, code, structure, trial)
    return run.plan, run.strategy


@pytest.fixture(scope="module")
def sj():
    return fresh(m=2, n=4, t=2, k=2, q=3)


def test_exhaustive_span_sun_jafar(sj):
    plan, strat = sj
    assert audit.permutation_tuple_count(plan) == 1296
    rep = audit.strategy_completeness_check(plan, strat, budget=2000)
    assert (rep.mode, rep.trials, rep.failures, rep.verdict) == ("exhaustive", 1296, 0, True)


def test_sampled_mode_when_over_budget(sj):
    plan, strat = sj
    rep = audit.strategy_completeness_check(plan, strat, budget=50, rng=np.random.default_rng(1))
    assert rep.mode == "sampled" and rep.trials == 50 and rep.verdict
    with pytest.raises(ValueError):
        audit.strategy_completeness_check(plan, strat, mode="guess")


def test_identity_mixing_fails_the_span_check():
    plan, strat = fresh(m=2, n=5, t=2, k=3)
    eye = tuple(la.identity(plan.params.r) for _ in range(plan.params.n))
    bad = dataclasses.replace(strat, c_n=eye)
    rep = audit.strategy_completeness_check(plan, bad, budget=300, rng=np.random.default_rng(0))
    assert rep.failures > 0 and not rep.verdict
    assert len(rep.witness) == plan.params.n
    good = audit.strategy_completeness_check(plan, strat, budget=300, rng=np.random.default_rng(0))
    assert good.verdict


def test_privacy_profiles_sun_jafar(sj):
    plan, _ = sj
    rep = audit.structural_privacy_audit(plan)
    assert rep.verdict and len(rep.subsets) == 6
    target = rep.subsets[0]["target"]
    assert target == {"cap0": 3, "cap1": 3, "cap01": 1, "span": 5, "only0": 2, "only1": 2}


def test_privacy_profiles_n5_k3():
    plan, _ = fresh(m=2, n=5, t=2, k=3)
    rep = audit.structural_privacy_audit(plan)
    assert rep.verdict
    for entry in rep.subsets:
        for prof in entry["files"].values():
            assert prof["cap01"] == 3 and prof["span"] == 9


def test_privacy_profiles_t3():
    plan, _ = fresh(m=2, n=6, t=3, k=3, variant="generalT")
    rep = audit.structural_privacy_audit(plan)
    assert rep.verdict and len(rep.subsets) == 20
    prof = rep.subsets[0]["files"][0]
    assert prof["cap012"] == 1
    assert prof["cap01"] == prof["cap02"] == prof["cap12"] == 4
    assert prof["only01"] == 3 and prof["span"] == 19


def test_cyclic_privacy_uses_adjacent_pairs():
    plan, _ = fresh(m=2, n=5, t=2, k=3, variant="cyclic")
    assert audit.colluding_sets(plan) == [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]
    rep = audit.structural_privacy_audit(plan)
    assert rep.verdict and rep.subsets[0]["target"]["cap01"] == 2


def test_profile_matches_incidence_for_desired(sj):
    plan, _ = sj
    f = plan.desired[0]
    for subset in audit.colluding_sets(plan):
        spaces = [la.Subspace.span(plan.queries[f][n], plan.params.q, plan.params.b) for n in subset]
        assert audit.subspace_profile(spaces) == audit.incidence_profile(plan, subset)


def corrupted(plan, strat, file, label_prefix, server=0, seed=0):
    labels = plan.labels(file, server)
    row = next(i for i, lab in enumerate(labels) if lab.startswith(label_prefix))
    bad = S.corrupt_plan(plan, file, server, row, np.random.default_rng(seed))
    return audit.run_audits(bad, strat, budget=2000)


@pytest.mark.parametrize("prefix", ["U~", "Z"])
def test_undesired_row_corruptions_are_detected(sj, prefix):
    plan, strat = sj
    f = plan.undesired[0]
    for server in range(4):
        for seed in range(5):
            assert not corrupted(plan, strat, f, prefix, server=server, seed=seed).verdict


def test_replace_row_rejects_rank_loss(sj):
    plan, _ = sj
    f = plan.undesired[0]
    with pytest.raises(ValidationError):
        S.replace_row(plan, f, 0, 0, plan.sets[f][0][1])


def test_corruption_always_changes_the_span(sj):
    plan, _ = sj
    f = plan.undesired[0]
    for seed in range(20):
        bad = S.corrupt_plan(plan, f, 0, 0, np.random.default_rng(seed))
        old = la.Subspace.span(plan.sets[f][0], 3)
        assert la.Subspace.span(bad.sets[f][0], 3) != old
        assert la.rank(bad.sets[f][0], 3) == 3


def test_desired_row_corruption_can_preserve_privacy(sj):
    """A V-row fault that keeps every intersection profile is invisible to the audits.

    Replacing V1 at server 2 by V1 + V2 + 2 V3 + 2 V4 + 2 V5 (S-coordinates)
    breaks decoding, but every pair still shares one vector.
    """
    plan, strat = sj
    f = plan.desired[0]
    coeffs = np.array([1, 1, 2, 2, 2, 0])
    x = la.matmul(coeffs.reshape(1, -1), plan.s[f], 3)[0]
    bad = S.replace_row(plan, f, 1, 0, x)
    assert audit.run_audits(bad, strat, budget=2000).verdict
    # ...yet the file no longer decodes
    files = np.random.default_rng(0).integers(0, 3, size=(2, 6, 2))
    answers = S.all_answers(bad, strat, S.store_files(files, bad.code))
    assert not np.array_equal(S.reconstruct(bad, strat, answers)[f], files[f])


def test_z_corruption_caught_by_privacy(sj):
    plan, strat = sj
    bundle = corrupted(plan, strat, plan.undesired[0], "Z")
    assert not bundle.privacy.verdict
    w = bundle.privacy.witness
    assert w["role"] == "undesired" and 1 in w["servers"]


def test_redundancy(sj):
    plan, strat = sj
    assert audit.expected_dimension(plan.params) == 8
    assert audit.measured_dimension(plan) == 8
    assert audit.redundancy_audit(plan)
    assert not audit.redundancy_audit(plan, expected_i=7)


def test_grs_redundancy_exact():
    plan, _ = fresh(m=2, n=5, t=2, k=2, variant="grs")
    assert audit.measured_dimension(plan) == 11
    assert not audit.redundancy_audit(plan, expected_i=12)  # GRS needs equality


def test_fixed_mode_for_echelon_queries():
    plan, strat = fresh(m=2, n=6, t=3, k=3, variant="generalT")
    rep = audit.strategy_completeness_check(plan, strat)
    assert rep.mode == "fixed" and rep.verdict


def test_bundle_serializes(sj):
    plan, strat = sj
    obj = audit.run_audits(plan, strat, budget=2000).to_obj()
    assert obj["verdict"] and obj["span"]["trials"] == 1296
    assert obj["redundancy"]["verdict"] and list(obj["redundancy"]["measured"].values()) == [8]
