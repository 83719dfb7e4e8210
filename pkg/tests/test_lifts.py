import numpy as np
import pytest

from scl.fixtures import default_conformal, default_hamiltonians
from scl.geometry import VectorField
from scl.induction import InducedSpace, sample_points
from scl.lifts import (
    ConformalData,
    HamiltonianPair,
    LiftError,
    bracket_residual,
    conformal_lift_1,
    conformal_lift_2,
    hamiltonian_lift,
    lifts_report,
    poisson_bracket_pair,
    verify_conformal_lift_1,
    verify_conformal_lift_2,
    verify_hamiltonian_lift,
)

EULER = VectorField(["x1/2", "x2/2", "x3/2", "x4/2"])
EULER_POTENTIAL = "t + (x1*x3 + x2*x4)/2"


@pytest.fixture(scope="module")
def pts():
    return sample_points(2, 6, seed=11)


def hamiltonian_vector_by_hand(omega, df):
    # i(X) omega = df  <=>  X^a omega_ab = d_b f
    return np.linalg.solve(omega.T, df)


def test_hamiltonian_vector_from_potential(flat):
    hp = HamiltonianPair(flat, "x1*x3")
    x = np.array([0.3, -0.2, 0.5, 0.1])
    np.testing.assert_allclose(hp.X(x), [-0.3, 0, 0.5, 0], atol=1e-15)
    np.testing.assert_allclose(hp.X(x), hamiltonian_vector_by_hand(flat.omega(x), [0.5, 0, 0.3, 0]))
    hp2 = HamiltonianPair(flat, "sin(x2)*x4")
    df = [0, np.cos(-0.2) * 0.1, 0, np.sin(-0.2)]
    np.testing.assert_allclose(hp2.X(x), hamiltonian_vector_by_hand(flat.omega(x), df), atol=1e-15)


def test_hamiltonian_lift_by_hand(flat_space):
    lift = hamiltonian_lift(HamiltonianPair(flat_space.spec, "x1*x3"), flat_space)
    y = np.array([0.3, -0.2, 0.5, 0.1, 0.7, -0.2])
    # Xbar - f E with lambda(X) = -x1 x3 cancelling f
    np.testing.assert_allclose(lift(y), [-0.3, 0, 0.5, 0, 0, 0], atol=1e-15)
    lift2 = hamiltonian_lift(HamiltonianPair(flat_space.spec, "x1^2/2"), flat_space)
    np.testing.assert_allclose(lift2(y), [0, 0, 0.3, 0, -0.045, 0], atol=1e-15)


@pytest.mark.parametrize("f", ["x1*x3", "x1^2/2", "x3^2/2", "x2*x4 + sin(x1)", "exp(x3)*x2"])
def test_hamiltonian_lifts_on_both_fixtures(spec, f, pts):
    space_res = verify_hamiltonian_lift(HamiltonianPair(spec, f), _space(spec), pts)
    assert max(space_res.values()) < 1e-12


def _space(spec):
    return InducedSpace(spec)


def test_mismatched_pair_is_detected(flat, pts):
    wrong = HamiltonianPair(flat, "x1*x3 + x2", VectorField(["-x1", "0", "x3", "0"]))
    assert wrong.residual(pts) == pytest.approx(1.0)
    res = verify_hamiltonian_lift(wrong, _space(flat), pts)
    assert res["hamiltonian_pair"] > 0.5 and res["interior"] > 0.5
    with pytest.raises(ValueError):
        HamiltonianPair(flat, "x1", VectorField(["1", "0"]))


def test_poisson_bracket_by_hand(flat):
    p = poisson_bracket_pair(HamiltonianPair(flat, "x1*x3"), HamiltonianPair(flat, "x1^2/2"))
    x = np.array([0.4, 0.2, -0.1, 0.3])
    assert p.f_jets(x, 0).value == pytest.approx(-0.16)
    # [X, Y] is the Hamiltonian field of {f, g}
    np.testing.assert_allclose(p.vector_jets(x, 0).value,
                               HamiltonianPair(flat, "-x1^2").X(x), atol=1e-15)


def test_lift_is_a_bracket_homomorphism(spec, pts):
    h = default_hamiltonians(spec)
    assert bracket_residual(h[0], h[1], _space(spec), pts) < 1e-12
    assert bracket_residual(h[2], HamiltonianPair(spec, "x2*x4*x1"), _space(spec), pts) < 1e-12


def test_conformal_lifts_by_hand(flat_space, pts):
    cd = default_conformal(flat_space.spec)
    y = np.array([0.3, -0.2, 0.5, 0.1, 0.7, -0.2])
    np.testing.assert_allclose(conformal_lift_1(cd, flat_space)(y), [0, 0, 0.5, 0.1, 0.7, 0])
    np.testing.assert_allclose(conformal_lift_2(cd, flat_space)(y), [0, 0, 0.5, 0.1, 0.7, -0.5])
    assert max(verify_conformal_lift_1(cd, flat_space, pts).values()) < 1e-12
    assert max(verify_conformal_lift_2(cd, flat_space, pts).values()) < 1e-12


def test_euler_field_potential(flat_space, pts):
    cd = ConformalData(flat_space.spec, EULER, b=EULER_POTENTIAL, a=EULER_POTENTIAL)
    assert max(cd.residuals(pts).values()) < 1e-14
    assert max(verify_conformal_lift_1(cd, flat_space, pts).values()) < 1e-12
    res = verify_conformal_lift_2(cd, flat_space, pts)
    assert max(res.values()) < 1e-12


def test_wrong_potential_sign_is_flagged(flat_space, pts):
    cd = ConformalData(flat_space.spec, EULER, b="t - (x1*x3 + x2*x4)/2")
    assert cd.residuals(pts)["b_exact"] > 0.1
    assert verify_conformal_lift_1(cd, flat_space, pts)["lie_mu_minus_mu"] > 0.1


def test_missing_potentials_raise(flat_space):
    cd = ConformalData(flat_space.spec, EULER)
    with pytest.raises(LiftError):
        conformal_lift_1(cd, flat_space)
    with pytest.raises(LiftError):
        conformal_lift_2(cd, flat_space)
    with pytest.raises(ValueError):
        ConformalData(flat_space.spec, VectorField(["x1", "x2"]))


def test_lifts_report_records(flat, pts):
    rep = lifts_report(flat, default_hamiltonians(flat), default_conformal(flat), pts)
    assert rep.overall
    names = [r.identity for r in rep.records]
    assert names == ["hamiltonian_lift[x1x3]", "hamiltonian_lift[x1sq]", "hamiltonian_lift[x3sq]",
                     "bracket_homomorphism", "conformal_lift_1", "conformal_lift_2"]
    bad = lifts_report(flat, [HamiltonianPair(flat, "x1", VectorField(["1", "0", "0", "0"]))], None, pts)
    assert not bad.overall
