import json

import numpy as np
import pytest

from hybridinv import scenario
from hybridinv.catalog import load_example
from hybridinv.systems import DisturbedHybridSystem


def _systems(sc):
    yield "main", sc.system
    yield from sc.variants.items()


def test_round_trip_is_exact(entry):
    sc = scenario.from_entry(entry)
    text = scenario.dumps(sc)
    back = scenario.loads(text)
    assert scenario.dumps(back) == text
    assert set(back.candidate_sets) == set(entry.candidate_sets)
    rng = np.random.default_rng(0)
    n = entry.system.dim
    X = rng.uniform(-3, 3, size=(n, 200))
    for name, K in entry.candidate_sets.items():
        np.testing.assert_array_equal(K.violation(X), back.candidate_sets[name].violation(X))
    for (name, H), (_, H2) in zip(_systems(sc), _systems(back)):
        if isinstance(H, DisturbedHybridSystem):
            C, C2 = H.C_w, H2.C_w
            Z = rng.uniform(-3, 3, size=(C.dim, 200))
            np.testing.assert_array_equal(C.violation(Z), C2.violation(Z))
            continue
        for S, S2 in ((H.C, H2.C), (H.D, H2.D)):
            np.testing.assert_array_equal(S.violation(X), S2.violation(X))
        for M, M2 in ((H.F, H2.F), (H.G, H2.G)):
            v, a = M.batch(X)
            v2, a2 = M2.batch(X)
            np.testing.assert_array_equal(v, v2)
            np.testing.assert_array_equal(a, a2)


def test_dumps_is_sorted_json_with_trailing_newline():
    text = scenario.dumps(scenario.from_entry(load_example("ex_gamma_corner")))
    assert text.endswith("}\n")
    d = json.loads(text)
    assert d["format"] == scenario.FORMAT
    assert list(d) == sorted(d)


def test_json_syntax_error_position():
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.loads('{\n  "dim": 2,\n  "C": {"box": }\n}')
    assert (info.value.line, info.value.column) == (3, 16)


def test_expression_error_points_at_expression():
    d = json.loads(scenario.dumps(scenario.from_entry(load_example("ex_gamma_corner"))))
    d["F"]["selections"][0]["components"][0] = "(+ (var 0) (bogus 1))"
    text = json.dumps(d, indent=2, sort_keys=True)
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.loads(text)
    line = text.splitlines()[info.value.line - 1]
    assert "bogus" in line
    assert info.value.column >= line.index('"(+ (var 0) (bogus 1))"') + 1


def test_missing_dimension_is_reported():
    with pytest.raises(scenario.ScenarioError) as info:
        scenario.loads('{"C": {"box": {"lo": [0], "hi": [1]}}}')
    assert "dim" in info.value.message


def test_unsupported_format():
    with pytest.raises(scenario.ScenarioError):
        scenario.loads('{"format": "other/2", "dim": 1}')


def test_lyapunov_data_round_trips():
    entry = load_example("ex_ly_failure")
    sc = scenario.loads(scenario.dumps(scenario.from_entry(entry)))
    assert (sc.lyapunov.r, sc.lyapunov.r_star) == (entry.lyapunov.r, entry.lyapunov.r_star)
    assert sc.lyapunov.V == entry.lyapunov.V
