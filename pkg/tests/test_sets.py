import math

import numpy as np
import pytest

from hybridinv import expr as ex
from hybridinv.sets import (EMPTY, EPS_ACT, EPS_MEM, Region, ball, box, find_member, halfspace, intersection,
                            set_from_dict, sublevel, union, whole_space)

INF = math.inf

BUILTIN = {
    "box": box([0.0, -1.0], [INF, 1.0]),
    "ball": ball([0.5, -0.25], 1.5),
    "halfspace": halfspace([1.0, 2.0], 0.5),
    "sublevel": sublevel("(+ (pow (var 0) 2) (* 4 (pow (var 1) 2)))", 1.0, convex=True),
    "disk_upper": intersection(ball([0.0, 0.0], 1.0), halfspace([0.0, -1.0], 0.0), prune=False),
    "quadrants": union(box([0.0, 0.0], [INF, INF]), box([-INF, -INF], [0.0, 0.0])),
}


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_membership_agrees_with_sign_pattern(name, rng):
    S = BUILTIN[name]
    X = rng.uniform(-3, 3, size=(2, 1000))
    member = np.asarray(S.contains(X))
    by_regions = np.zeros(1000, dtype=bool)
    for reg in S.regions():
        by_regions |= np.all(reg.values(X) <= EPS_MEM, axis=0)
    np.testing.assert_array_equal(member, by_regions)


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_boundary_means_member_with_active_constraint(name, rng):
    S = BUILTIN[name]
    from hybridinv.geometry import project_batch

    X = rng.uniform(-3, 3, size=(2, 300))
    X = X[:, ~np.asarray(S.contains(X))]
    P, ok = project_batch(S, X, raise_on_fail=False)
    P = P[:, ok]
    bd = np.asarray(S.is_boundary(P))
    assert bd.all()  # projections of outside points land on the boundary
    inside = P
    assert np.all(S.contains(inside))
    active = np.zeros(inside.shape[1], dtype=bool)
    for reg in S.regions():
        v = reg.values(inside)
        active |= np.all(v <= EPS_MEM, axis=0) & np.any(np.abs(v) <= EPS_ACT, axis=0)
    assert active.all()


def test_union_is_any_child():
    U = BUILTIN["quadrants"]
    assert U.contains([1.0, 2.0]) and U.contains([-1.0, -2.0])
    assert not U.contains([1.0, -2.0])


def test_empty_set():
    E = EMPTY(2)
    assert E.is_empty
    assert not E.contains([0.0, 0.0])


def test_whole_space_contains_everything(rng):
    assert np.all(whole_space(3).contains(rng.normal(size=(3, 50))))


def test_bounds_and_boundedness():
    assert BUILTIN["ball"].bounded
    assert not BUILTIN["box"].bounded
    lo, hi = BUILTIN["disk_upper"].bounds()
    np.testing.assert_allclose(lo, [-1.0, 0.0])
    np.testing.assert_allclose(hi, [1.0, 1.0])


def test_slice_freezes_coordinates():
    S = intersection(box([0.0, 0.0, 0.0], [1.0, 1.0, 1.0]),
                     sublevel("(+ (var 2) (neg (var 0)))", 0.0, 3), prune=False)
    s = S.slice({2: 0.5})
    assert s.dim == 2
    assert s.contains([0.6, 0.2]) and not s.contains([0.4, 0.2])


def test_find_member_on_nonconvex_region():
    arc = intersection(ball([0.0, 0.0], 1.0), sublevel("(+ 1 (neg (pow (var 0) 2)) (neg (pow (var 1) 2)))", 0.0, 2),
                       halfspace([0.0, -1.0], 0.0), prune=False)
    x = find_member(arc)
    assert x is not None
    assert abs(np.hypot(*x) - 1.0) < 1e-8 and x[1] >= -1e-9


@pytest.mark.parametrize("name", sorted(BUILTIN))
def test_dict_round_trip(name, rng):
    S = BUILTIN[name]
    T = set_from_dict(S.to_dict(), S.dim)
    X = rng.uniform(-3, 3, size=(2, 500))
    np.testing.assert_array_equal(S.violation(X), T.violation(X))


def test_sublevel_dimension_check():
    S = sublevel(ex.parse("(pow (var 1) 2)"), 1.0, 2)
    with pytest.raises(Exception):
        S.contains(np.zeros(1))


def test_region_rejects_mixed_dimensions():
    with pytest.raises(ValueError):
        Region(2, box([0.0], [1.0]).pieces)
