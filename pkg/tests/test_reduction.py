import numpy as np
import pytest

from scl.induction import CoordConnectionP, InducedSpace, RicciFlatParameters, induced_connection, sample_points
from scl.reduction import (
    NotTangentError,
    ReducedConnection,
    horizontal_lift_jets,
    locate_sigma,
    reduce,
    reduced_connection,
    reduced_form,
    roundtrip_report,
    sigma_connection,
)
from scl.geometry import VectorField

T, S = 4, 5


@pytest.fixture(scope="module")
def level(quartic_space):
    return locate_sigma(quartic_space)


@pytest.fixture(scope="module")
def ccp(quartic_space):
    return CoordConnectionP(induced_connection(quartic_space))


def test_sigma_level_location(level):
    assert level.s0 == pytest.approx(-0.5 * np.log(2), abs=1e-15)
    assert level.mu_SE() == pytest.approx(1.0, abs=1e-14)
    assert level.mu_SE(level.s0 + 0.1) == pytest.approx(np.exp(0.2), rel=1e-14)
    # mu(S, E) does not depend on x or t
    assert level.mu_SE(x=np.array([0.3, 0.1, -0.4, 0.9]), t=2.0) == pytest.approx(1.0, abs=1e-14)


def test_horizontal_lift_by_hand(flat_space):
    y = np.array([0.3, -0.2, 0.5, 0.1, 0.7, -0.3])
    H = horizontal_lift_jets(flat_space, y, 0).value
    expected = np.zeros((6, 4))
    expected[:4] = np.eye(4)
    expected[T] = [-0.5, -0.1, 0, 0]
    np.testing.assert_allclose(H, expected, atol=1e-15)


def test_reduced_form_is_half_omega(flat_space):
    lv = locate_sigma(flat_space)
    x = np.array([0.3, -0.2, 0.5, 0.1])
    e = np.eye(4)
    for t in (0.0, 1.7):
        assert reduced_form(lv, x, e[0], e[2], t) == pytest.approx(-0.5, abs=1e-14)
        assert reduced_form(lv, x, e[3], e[1], t) == pytest.approx(0.5, abs=1e-14)
        assert reduced_form(lv, x, e[0], e[1], t) == pytest.approx(0.0, abs=1e-14)


def test_sigma_connection_is_tangent(level, ccp):
    y = level.point([0.2, 0.1, -0.3, 0.4], 0.5)
    A = VectorField(["1", "x3", "0", "x1", "-x3 - x1*x4", "0"])
    B = VectorField(["x2", "0", "1", "0", "x5", "0"])
    v = sigma_connection(level, ccp, A, B, y)
    assert abs(v[S]) < 1e-14
    with pytest.raises(NotTangentError):
        sigma_connection(level, ccp, VectorField.coordinate(S, 6), B, y)
    with pytest.raises(NotTangentError):
        sigma_connection(level, ccp, A, B, y + np.eye(6)[S] * 0.1)


def test_christoffel_roundtrip(level, ccp, quartic, M_points):
    nabla = ReducedConnection(level, ccp)
    for x in M_points[:5]:
        np.testing.assert_allclose(nabla(x), quartic.connection(x), atol=1e-12)
    x = M_points[0]
    Y1, Y2 = np.array([1.0, 0, 2, 0]), np.array([0, 1.0, 0, -1])
    np.testing.assert_allclose(reduced_connection(level, ccp, x, Y1, Y2),
                               np.einsum("kij,i,j->k", quartic.connection(x), Y1, Y2), atol=1e-12)


def test_fiber_independence(level, ccp):
    x = np.array([0.5, -0.4, 0.2, 0.1])
    base = ReducedConnection(level, ccp, 0.0)(x)
    for t in (-2.0, 1.3):
        np.testing.assert_allclose(ReducedConnection(level, ccp, t)(x), base, atol=1e-13)


def test_roundtrip_holds_for_arbitrary_parameters(quartic, M_points):
    space = InducedSpace(quartic)
    params = RicciFlatParameters.user(quartic, shat={(0, 1): "x3"}, U=["x2", "0", "1", "0"], f="x1")
    red = reduce(space, params)
    for x in M_points[:3]:
        np.testing.assert_allclose(red.connection(x), quartic.connection(x), atol=1e-12)
    assert red.scale_ledger == {"reduced_form_factor": pytest.approx(0.5, abs=1e-15)}


def test_roundtrip_report(spec):
    pts = sample_points(2, 4, seed=2)
    rep = roundtrip_report(spec, pts)
    assert rep.overall, rep.to_text()
    assert rep.scale_ledger["reduced_form_factor"] == pytest.approx(0.5)


def test_disabling_scale_ledger_exposes_factor(flat):
    rep = roundtrip_report(flat, sample_points(2, 3, seed=2), scale_ledger=False)
    assert not rep.overall
    assert rep.record("omega_red").residual == pytest.approx(0.5, abs=1e-12)
    assert rep.scale_ledger == {}
