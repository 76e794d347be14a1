import math

import numpy as np
import pytest

from hybridinv import expr as ex
from hybridinv.catalog import UnknownExampleError, inverter_constants, list_ids, load_example
from hybridinv.sampling import rng_for, sample_members
from hybridinv.systems import DisturbedHybridSystem, HybridSystem

IDS = ["ex_finite_escape", "ex_wfi_circle", "ex_oscillator_nominal", "ex_oscillator_disturbed",
       "ex_gamma_corner", "ex_marchaud_1d", "ex_ly_failure", "ex_inverter"]


def test_ids():
    assert list_ids() == IDS


def test_unknown_id_lists_known_ones():
    with pytest.raises(UnknownExampleError) as info:
        load_example("nope")
    msg = str(info.value)
    assert all(i in msg for i in IDS)


def test_entries_are_cached():
    assert load_example("ex_gamma_corner") is load_example("ex_gamma_corner")


def test_entry_shapes(entry):
    H = entry.system
    assert isinstance(H, (HybridSystem, DisturbedHybridSystem))
    assert entry.provenance
    for name, K in entry.candidate_sets.items():
        assert K.dim == H.dim, name
    if entry.x0 is not None:
        assert len(entry.x0) == H.dim
    for exp in entry.expected:
        assert exp.source in ("stated", "derived")
        if exp.theorem != "ly":
            assert exp.set_name in entry.candidate_sets
        if exp.variant != "main":
            assert exp.variant in entry.variants


def test_inverter_parameters():
    entry = load_example("ex_inverter")
    p = entry.params
    assert (p["R"], p["L"], p["C_a"], p["V_DC"], p["b"]) == (1.0, 0.1, 66.6e-6, 220.0, 120.0)
    assert p["omega"] == pytest.approx(2 * math.pi * 60)
    assert (p["c_i"], p["c_o"]) == (0.9, 1.1)
    assert p["a"] == pytest.approx(p["C_a"] * p["omega"] * p["b"])
    assert p["a"] == pytest.approx(3.013, abs=1e-3)
    k = inverter_constants(**{n: p[n] for n in ("R", "L", "C_a", "V_DC", "b", "omega")})
    assert k["LC_omega2"] == pytest.approx(0.1 * 66.6e-6 * (120 * math.pi) ** 2)
    V = ex.parse(p["V"])
    assert ex.evaluate(V, [0.0, p["a"], 0.0]) == pytest.approx(1.0)
    assert ex.evaluate(V, [0.0, 0.0, p["b"]]) == pytest.approx(1.0)


def test_inverter_band_set():
    entry = load_example("ex_inverter")
    T, a, b = entry.candidate_sets["T"], entry.params["a"], entry.params["b"]
    for q in (-1.0, 0.0, 1.0):
        assert T.contains([q, a, 0.0])
        assert T.contains([q, 0.0, math.sqrt(1.05) * b])
        assert not T.contains([q, 0.5 * a, 0.0])
        assert not T.contains([q, 1.2 * a, 0.0])
    assert not T.contains([0.5, a, 0.0])


def test_inverter_jump_map_is_total_on_d():
    entry = load_example("ex_inverter")
    H = entry.system
    X = sample_members(H.D, 10_000, rng_for(0, "G total"), entry.window)
    assert X.shape[1] >= 5000
    _, avail = H.G.batch(X)
    assert np.all(np.any(avail, axis=0))


def test_gamma_corner_parameters():
    entry = load_example("ex_gamma_corner")
    assert entry.params["gamma"] == 1.0
    np.testing.assert_allclose(entry.system.F.values(np.array([0.0, 0.0]))[0], [0.0, -1.0])


def test_ly_failure_spec():
    entry = load_example("ex_ly_failure")
    spec = entry.lyapunov
    assert (spec.r, ex.evaluate(spec.V, [1.0, 2.0])) == (1.0, 5.0)
    assert not entry.system.C.contains([0.0, 0.0])
    assert entry.system.C.contains([-1.0, 3.0])


def test_disturbed_oscillator_boxes():
    Hw = load_example("ex_oscillator_disturbed").system
    assert Hw.dc >= 1 and Hw.dd >= 1
    H0 = Hw.nominal_restriction()
    assert H0.dim == Hw.dim
