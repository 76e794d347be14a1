import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridinv import expr as ex
from hybridinv.geometry import (DELTA_CONE, ConeStatus, ProjectionError, distance_batch, distance_to_set,
                                inner_product_certificate, numerical_ratios, project_batch, project_onto_set,
                                tangent_cone_batch, tangent_cone_contains)
from hybridinv.sets import EMPTY, EPS_ACT, ball, box, halfspace, intersection, sublevel

INF = math.inf
STRIP = box([0.0, -1.0], [INF, 1.0])
DISK = ball([0.0, 0.0], 1.0)
UPPER_DISK = intersection(DISK, halfspace([0.0, -1.0], 0.0), prune=False)

CONVEX = {
    "strip": STRIP,
    "disk": DISK,
    "halfspace": halfspace([1.0, 2.0], 0.5),
    "ellipse": sublevel("(+ (pow (var 0) 2) (* 4 (pow (var 1) 2)))", 1.0, convex=True),
    "upper_disk": UPPER_DISK,
}


def test_distance_examples():
    assert distance_to_set(DISK, [2.0, 0.0]) == pytest.approx(1.0)
    assert distance_to_set(STRIP, [0.0, 2.0]) == pytest.approx(1.0)
    assert distance_to_set(UPPER_DISK, [0.0, -0.5]) == pytest.approx(0.5, abs=1e-6)


def test_intersection_distance_against_grid():
    g = np.linspace(-1.0, 1.0, 1001)
    P = np.stack(np.meshgrid(g, np.linspace(0.0, 1.0, 1001))).reshape(2, -1)
    P = P[:, np.hypot(P[0], P[1]) <= 1.0]
    brute = np.min(np.hypot(P[0], P[1] + 0.5))
    assert abs(distance_to_set(UPPER_DISK, [0.0, -0.5]) - brute) <= 1e-3


def test_projection_examples():
    np.testing.assert_allclose(project_onto_set(STRIP, [2.0, 2.0]), [2.0, 1.0])
    np.testing.assert_array_equal(project_onto_set(DISK, [0.0, 0.0]), [0.0, 0.0])
    np.testing.assert_allclose(project_onto_set(halfspace([1.0, 0.0], 0.0), [3.0, 4.0]), [0.0, 4.0])


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_projection_realises_distance(name, rng):
    S = CONVEX[name]
    X = rng.uniform(-3, 3, size=(2, 400))
    P, ok = project_batch(S, X)
    assert ok.all() and np.all(S.contains(P))
    d = distance_batch(S, X)
    np.testing.assert_allclose(np.linalg.norm(P - X, axis=0), d, atol=1e-12)
    # no sampled member is closer than the projection
    M = rng.uniform(-3, 3, size=(2, 4000))
    M = M[:, S.contains(M)]
    nearest = np.min(np.linalg.norm(X[:, :, None] - M[:, None, :], axis=0), axis=1)
    assert np.all(d <= nearest + 1e-6)


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_distance_zero_iff_member(name, rng):
    S = CONVEX[name]
    X = rng.uniform(-3, 3, size=(2, 1000))
    d = distance_batch(S, X)
    np.testing.assert_array_equal(d == 0.0, S.contains(X))


def test_projection_onto_empty_set_raises():
    with pytest.raises(ProjectionError):
        project_onto_set(EMPTY(2), [0.0, 0.0])


def test_cone_examples():
    assert tangent_cone_contains(STRIP, [0.0, 1.0], [1.0, -1.0]).in_cone
    assert tangent_cone_contains(STRIP, [0.0, 1.0], [1.0, -1.0]).certified
    assert tangent_cone_contains(STRIP, [0.5, 0.0], [-7.0, 3.0]).in_cone
    assert tangent_cone_contains(DISK, [1.0, 0.0], [0.0, 1.0]).in_cone
    v = tangent_cone_contains(DISK, [1.0, 0.0], [1.0, 0.0])
    assert v.status is ConeStatus.NOT_IN_CONE


def test_liminf_ratios_on_disk():
    r_in = numerical_ratios(DISK, np.array([[1.0], [0.0]]), np.array([[0.0], [1.0]]))[:, 0]
    r_out = numerical_ratios(DISK, np.array([[1.0], [0.0]]), np.array([[1.0], [0.0]]))[:, 0]
    assert r_in[-1] < 1e-5 and np.all(np.diff(r_in) <= 0)
    np.testing.assert_allclose(r_out, 1.0)


def test_cone_needs_member():
    with pytest.raises(ValueError):
        tangent_cone_contains(DISK, [2.0, 0.0], [1.0, 0.0])


def test_inner_product_certificate_examples():
    h = ex.parse("(+ (pow (var 0) 2) (pow (var 1) 2) -1)")
    v = inner_product_certificate(h, [0.0, 1.0], [1.0, 0.0])
    assert v.certified and v.margin == 0.0 and not v.strict
    v = inner_product_certificate(ex.var(0), [0.0, 7.0], [-1.0, 5.0])
    assert v.certified and v.margin == -1.0 and v.strict
    v = inner_product_certificate(h, [1.0, 0.0], [1.0, 0.0])
    assert v.status is ConeStatus.NOT_IN_CONE


def test_inner_product_certificate_on_oscillator_arc():
    h = ex.parse("(+ (pow (var 0) 2) (pow (var 1) 2) -1)")
    x0, x1 = ex.var(0), ex.var(1)
    F = [-abs(x0) * x1, ex.const(0.0)]
    for th in np.linspace(0.0, math.pi / 2, 50):
        x = [math.cos(th), math.sin(th)]
        y = [ex.evaluate(f, x) for f in F]
        v = inner_product_certificate(h, x, y)
        assert v.in_cone
        assert v.margin == pytest.approx(-2 * abs(x[0]) * x[0] * x[1], abs=1e-12)


def test_certificate_rejects_inactive_constraint():
    with pytest.raises(ValueError):
        inner_product_certificate(ex.var(0), [1.0, 0.0], [1.0, 0.0])


def _boundary_points(S, rng, m):
    X = rng.uniform(-3, 3, size=(2, 4 * m))
    X = X[:, ~np.asarray(S.contains(X))]
    P, _ = project_batch(S, X)
    return P[:, :m]


def _oracle(S, X, D):
    """Linearised cone of a convex set from the active gradients; None where not margin-separated."""
    (reg,) = S.regions()
    vals = reg.values(X)
    grads, _ = reg.grads(X)
    active = np.abs(vals) <= EPS_ACT
    ip = np.einsum("knm,nm->km", grads, D)
    gn = np.linalg.norm(grads, axis=1)
    dn = np.linalg.norm(D, axis=0)
    separated = np.all(~active | (np.abs(ip) > 1e-3 * gn * dn), axis=0)
    inside = np.all(~active | (ip <= 0), axis=0)
    return inside, separated


@pytest.mark.parametrize("name", sorted(CONVEX))
def test_cone_oracle_agreement(name, rng):
    S = CONVEX[name]
    X, D = np.empty((2, 0)), np.empty((2, 0))
    while X.shape[1] < 1000:
        Xb = np.hstack([_boundary_points(S, rng, 400), rng.uniform(-1, 1, size=(2, 100))])
        Xb = Xb[:, S.contains(Xb)]
        Db = rng.normal(size=Xb.shape)
        _, sep = _oracle(S, Xb, Db)
        X, D = np.hstack([X, Xb[:, sep]]), np.hstack([D, Db[:, sep]])
    X, D = X[:, :1000], D[:, :1000]
    truth, _ = _oracle(S, X, D)
    status, _ = tangent_cone_batch(S, X, D)
    got = np.isin(status, [ConeStatus.IN_CERTIFIED, ConeStatus.IN_NUMERICAL])
    assert np.mean(got == truth) >= 0.99
    # the numerical path alone, with the certificate bypassed
    ratios = numerical_ratios(S, X, D)
    num = np.min(ratios, axis=0) <= DELTA_CONE
    decided = (np.min(ratios, axis=0) <= DELTA_CONE) | (np.min(ratios, axis=0) >= 10 * DELTA_CONE)
    assert np.mean((num == truth) & decided) >= 0.99


@given(st.floats(0.0, 2 * math.pi), st.floats(0.0, 2 * math.pi), st.floats(1e-3, 1e3))
def test_cone_is_closed_under_positive_scaling(theta, phi, lam):
    x = [math.cos(theta), math.sin(theta)]
    d = np.array([math.cos(phi), math.sin(phi)])
    v = tangent_cone_contains(DISK, x, d)
    if v.certified:
        assert tangent_cone_contains(DISK, x, lam * d).certified


def test_zero_direction_is_tangent():
    assert tangent_cone_contains(UPPER_DISK, [1.0, 0.0], [0.0, 0.0]).certified


def test_corner_needs_every_active_constraint():
    # (1, 0) is a corner of the upper half disk
    assert tangent_cone_contains(UPPER_DISK, [1.0, 0.0], [-1.0, 1.0]).certified
    assert not tangent_cone_contains(UPPER_DISK, [1.0, 0.0], [-1.0, -1.0]).in_cone
