import math

import numpy as np
import pytest

from hybridinv import expr as ex
from hybridinv.catalog import list_ids, load_example
from hybridinv.checker import (CheckConfig, LyapunovSpec, Verdict, check_assumption_data, check_completeness,
                               check_forward_invariance, check_weak_forward_invariance, combine,
                               lipschitz_estimate, run_theorem)
from hybridinv.checker.report import Entry, witness
from hybridinv.geometry import tangent_cone_contains
from hybridinv.sets import ball, box, halfspace, intersection
from hybridinv.systems import HybridSystem, single_valued

CERT, SAMP, VIOL, NA, INDET = (Verdict.CERTIFIED, Verdict.SAMPLED, Verdict.VIOLATED,
                               Verdict.NOT_APPLICABLE, Verdict.INDETERMINATE)


@pytest.mark.parametrize("vs, expected", [
    ([CERT, CERT], CERT),
    ([CERT, SAMP], SAMP),
    ([SAMP, INDET, CERT], INDET),
    ([INDET, VIOL, SAMP], VIOL),
    ([NA, CERT], CERT),
    ([NA, NA], NA),
    ([], NA),
])
def test_combine_precedence(vs, expected):
    assert combine(vs) is expected


def test_violated_entry_needs_witness():
    with pytest.raises(ValueError):
        Entry("x", Verdict.VIOLATED)
    Entry("x", Verdict.VIOLATED, [witness([0.0, 0.0])])


def _expected_cases():
    for i in list_ids():
        for k, exp in enumerate(load_example(i).expected):
            yield pytest.param(i, k, id=f"{i}-{exp.theorem}-{exp.set_name}-{exp.mode}-{exp.variant}")


def _run_expected(entry, exp, cfg=None):
    H = entry.system if exp.variant == "main" else entry.variant(exp.variant)
    K = entry.candidate_sets.get(exp.set_name) if exp.set_name else None
    return run_theorem(exp.theorem, H, K, cfg or CheckConfig(), window=entry.window, mode=exp.mode,
                       lyapunov=entry.lyapunov, set_name=exp.set_name or "M_r")


@pytest.mark.parametrize("eid, k", list(_expected_cases()))
def test_catalog_expected_verdicts(eid, k):
    entry = load_example(eid)
    exp = entry.expected[k]
    rep = _run_expected(entry, exp)
    got = {cid: str(v) for cid, v in rep.verdicts().items()}
    got["overall"] = str(rep.overall)
    assert {cid: got.get(cid) for cid in exp.verdicts} == exp.verdicts


def test_gamma_witness_replays():
    entry = load_example("ex_gamma_corner")
    H, K = entry.system, entry.candidate_sets["K"]
    rep = check_forward_invariance(H, K, mode="alt", window=entry.window)
    w = rep["fi.2''s"].witnesses[0]
    np.testing.assert_allclose(w.point, [0.0, 0.0], atol=1e-12)
    np.testing.assert_allclose(w.direction, [0.0, -1.0])
    # the direction is a flow value and is tangent to C but not to K n C
    np.testing.assert_allclose(H.F.values(np.array(w.point))[0], w.direction)
    assert tangent_cone_contains(H.C, w.point, w.direction).in_cone
    assert not tangent_cone_contains(intersection(K, H.C), w.point, w.direction).in_cone


def test_standard_mode_gamma_fails_at_origin():
    entry = load_example("ex_gamma_corner")
    rep = check_forward_invariance(entry.system, entry.candidate_sets["K"], window=entry.window)
    assert rep["fi.2"].verdict is VIOL
    assert any(np.allclose(w.point, 0.0, atol=1e-9) for w in rep["fi.2"].witnesses)


def test_violation_witnesses_lie_in_k():
    entry = load_example("ex_oscillator_disturbed")
    rep = run_theorem("rfi", entry.system, entry.candidate_sets["K1"], window=entry.window)
    K1 = entry.candidate_sets["K1"]
    for cid, v in rep.verdicts().items():
        if v is VIOL:
            for w in rep[cid].witnesses:
                assert K1.contains(np.array(w.point), 1e-6)


def test_more_samples_keep_a_pass():
    entry = load_example("ex_oscillator_nominal")
    for n in (200, 4000):
        cfg = CheckConfig(boundary_samples=n, member_samples=n // 2)
        rep = check_forward_invariance(entry.system, entry.candidate_sets["K1"], cfg)
        assert rep.overall.passed
        assert rep["fi.2"].n_samples >= min(n, 100)


def test_seeds_give_reproducible_reports():
    entry = load_example("ex_wfi_circle")
    a = check_weak_forward_invariance(entry.system, entry.candidate_sets["K1"], CheckConfig(seed=3))
    b = check_weak_forward_invariance(entry.system, entry.candidate_sets["K1"], CheckConfig(seed=3))
    assert a.to_json() == b.to_json()


def test_data_check_flags_k_outside_data():
    disk = ball([0.0, 0.0], 1.0)
    far = halfspace([-1.0, 0.0], -5.0)  # x1 >= 5
    H = HybridSystem(2, far, single_valued(["0", "0"], 2), far, single_valued(["(var 0)", "(var 1)"], 2))
    rep = check_assumption_data(H, disk, window=((-6.0, -6.0), (6.0, 6.0)))
    assert rep.overall is VIOL
    (w, *_) = rep["data.K_in_CD"].witnesses
    assert disk.contains(np.array(w.point)) and not H.C_or_D.contains(np.array(w.point))


def test_equilibrium_is_weakly_invariant():
    # x' = -x on the unit disk, no jumps; K = {0}
    H = HybridSystem(2, ball([0.0, 0.0], 1.0), single_valued(["(neg (var 0))", "(neg (var 1))"], 2),
                     box([5.0, 5.0], [5.0, 5.0]), single_valued(["(var 0)", "(var 1)"], 2))
    rep = check_weak_forward_invariance(H, box([0.0, 0.0], [0.0, 0.0]))
    assert rep.overall.passed


def test_lipschitz_estimates():
    F = single_valued(["(+ 1 (pow (var 0) 2))", "0"], 2)
    est = lipschitz_estimate(F, box([0.0, -1.0], [1.0, 1.0]), CheckConfig())
    # sup |2 x1| over the box is 2
    assert 1.8 <= est.value <= 2.0 + 1e-3
    assert not est.flagged
    est0 = lipschitz_estimate(single_valued(["3", "-1"], 2), box([0.0, 0.0], [1.0, 1.0]), CheckConfig())
    assert est0.value == 0.0


def test_completeness_through_linear_growth():
    H = HybridSystem(2, box([0.0, 0.0], [math.inf, math.inf]), single_valued(["1", "(sin (var 0))"], 2),
                     box([-5.0, -5.0], [-5.0, -5.0]), single_valued(["(var 0)", "(var 1)"], 2))
    rep = check_completeness(H, box([0.0, 0.0], [math.inf, math.inf]), window=((0.0, 0.0), (50.0, 50.0)))
    assert rep["Nstar.compact"].verdict is VIOL
    assert rep["Nstar.growth"].verdict is SAMP
    assert rep.overall is SAMP


def test_completeness_on_bounded_set_is_certified():
    entry = load_example("ex_oscillator_nominal")
    rep = check_completeness(entry.system, entry.candidate_sets["K1"])
    assert rep.overall is CERT


def test_finite_escape_fails_completeness():
    entry = load_example("ex_finite_escape")
    rep = check_completeness(entry.system, entry.candidate_sets["K"], window=entry.window)
    assert rep.overall is VIOL


def test_ly_requires_spec():
    entry = load_example("ex_ly_failure")
    with pytest.raises(ValueError):
        run_theorem("ly", entry.system)
    with pytest.raises(ValueError):
        LyapunovSpec(ex.parse("(pow (var 0) 2)"), 2.0, 1.0)


def test_unknown_theorem_rejected():
    with pytest.raises(ValueError):
        run_theorem("strong", load_example("ex_finite_escape").system, box([0.0], [1.0]))


def test_report_serialisations():
    entry = load_example("ex_gamma_corner")
    rep = check_forward_invariance(entry.system, entry.candidate_sets["K"], mode="alt", window=entry.window)
    import json

    d = json.loads(rep.to_json())
    assert d["overall"] == "Violated"
    assert any(e["id"] == "fi.2''s" for e in d["entries"])
    assert "fi.2''s" in rep.text()
