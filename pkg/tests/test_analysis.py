import numpy as np
import pytest

from hybridinv.analysis import arc_signal, dominant_frequency, uniform_resample
from hybridinv.catalog import load_example
from hybridinv.solver import SolverConfig, simulate


@pytest.mark.parametrize("f", [50.0, 60.0, 61.3])
def test_dominant_frequency_of_sine(f):
    t = np.linspace(0.0, 0.1, 2001)
    assert dominant_frequency(t, np.sin(2 * np.pi * f * t + 0.3)) == pytest.approx(f, abs=0.2)


def test_nonuniform_samples_with_repeated_times():
    rng = np.random.default_rng(0)
    t = np.sort(np.concatenate([rng.uniform(0, 0.2, 3000), [0.05, 0.05, 0.1]]))
    assert dominant_frequency(t, np.cos(2 * np.pi * 60 * t)) == pytest.approx(60.0, abs=0.5)


def test_resample_grid():
    grid, y = uniform_resample([0.0, 1.0, 1.0, 2.0], [0.0, 1.0, 5.0, 6.0], rate=2.0)
    np.testing.assert_allclose(grid, [0.0, 0.5, 1.0, 1.5, 2.0])
    np.testing.assert_allclose(y, [0.0, 2.5, 5.0, 5.5, 6.0])


def test_resample_needs_two_times():
    with pytest.raises(ValueError):
        uniform_resample([1.0, 1.0], [0.0, 1.0])


def test_arc_signal_concatenates_intervals():
    H = load_example("ex_wfi_circle").system
    arc = simulate(H, [0.0, 1.0], SolverConfig(horizon=(10.0, 3)))
    t, x = arc_signal(arc, 0)
    assert t.shape == x.shape == (sum(len(ti) for ti in arc.times),)
    assert np.all(np.diff(t) >= 0)
