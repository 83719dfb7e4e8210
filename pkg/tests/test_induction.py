import numpy as np
import pytest

from scl import geometry as geo
from scl.induction import (
    CoordConnectionP,
    InducedSpace,
    RicciFlatParameters,
    D_sigma_U,
    block_masks,
    closed_form_curvature,
    curvature_formula,
    frame_curvature_direct,
    frame_roundtrip_residual,
    induced_connection,
    mu_at,
    ricci_flat_params,
    ricci_frame,
    ricci_table,
    sample_points,
    verify_theorem,
)

T, S = 4, 5


def flat_mu_by_hand(y):
    x1, x2, x3, x4, t, s = y
    alpha = np.array([x3, x4, 0, 0, 1, 0])
    dalpha = np.zeros((6, 6))
    dalpha[2, 0], dalpha[0, 2] = 1, -1
    dalpha[3, 1], dalpha[1, 3] = 1, -1
    ds = np.eye(6)[S]
    return np.exp(2 * s) * (dalpha + 2 * (np.outer(ds, alpha) - np.outer(alpha, ds)))


@pytest.fixture(scope="module")
def quartic_fc(quartic_space):
    return induced_connection(quartic_space)


@pytest.fixture(scope="module")
def quartic_ccp(quartic_fc):
    return CoordConnectionP(quartic_fc)


def test_sample_points_are_deterministic_and_bounded():
    a, b = sample_points(2, 20, 7), sample_points(2, 20, 7)
    assert a.shape == (20, 6) and np.array_equal(a, b)
    assert np.abs(a[:, :5]).max() <= 1 and np.abs(a[:, 5]).max() <= 0.5
    assert not np.array_equal(a, sample_points(2, 20, 8))


def test_mu_matches_hand_formula(flat_space, P_points):
    for y in P_points[:5]:
        np.testing.assert_allclose(mu_at(flat_space, y), flat_mu_by_hand(y), atol=1e-14)


def test_mu_on_reeb_and_scaling_fields(flat_space):
    y = np.array([0.1, -0.2, 0.3, 0.4, 0.5, 0.3])
    mu = mu_at(flat_space, y)
    assert mu[T, S] == pytest.approx(-2 * np.exp(0.6), rel=1e-15)
    # i(E) mu + d(e^{2s}) = 0
    d_weight = np.zeros(6)
    d_weight[S] = 2 * np.exp(0.6)
    np.testing.assert_allclose(mu[T] + d_weight, 0, atol=1e-15)


def test_horizontal_lift_bracket(flat_space):
    y = np.array([0.1, -0.2, 0.3, 0.4, 0.5, 0.3])
    X1, X3 = flat_space.horizontal_lift(0), flat_space.horizontal_lift(2)
    np.testing.assert_allclose(geo.lie_bracket(X1, X3, y), np.eye(6)[T], atol=1e-15)
    np.testing.assert_allclose(flat_space.frame(y)[:, 0], [1, 0, 0, 0, -0.3, 0])


def test_structural_residuals_vanish(spec, P_points):
    space = InducedSpace(spec)
    res = space.residuals(P_points)
    assert max(res.values()) < 1e-12
    assert space.check(P_points)


def test_ricci_flat_choice_of_shat(quartic, M_points):
    params = ricci_flat_params(quartic)
    for x in M_points[:4]:
        _, pj = params.local_at(x, 0)
        np.testing.assert_allclose(pj.shat.value, -geo.ricci(quartic.connection, x) / 6, atol=1e-14)


def test_f_prefactor_for_dimension_four(quartic, M_points):
    params = ricci_flat_params(quartic)
    x = M_points[3]
    geom, pj = params.local_at(x, 1)
    rho = geo.rho_endomorphism(quartic.connection, quartic.omega, x)
    div_U = np.trace(geom.nabla_vector(pj.U).value)
    assert pj.f.value == pytest.approx(np.trace(rho @ rho) / 36 + div_U / 2, abs=1e-13)


def test_flat_fixture_has_trivial_parameters(flat):
    _, pj = ricci_flat_params(flat).local_at(np.array([0.2, 0.1, -0.3, 0.5]), 1)
    for name in ("shat", "sigma", "U", "f"):
        assert np.abs(getattr(pj, name).coeffs).max() == 0.0


def test_frame_table_entries(flat_space):
    fc = induced_connection(flat_space, RicciFlatParameters.user(flat_space.spec, f="x1"))
    y = np.array([0.7, 0.1, -0.3, 0.2, 0.4, -0.1])
    np.testing.assert_allclose(fc.covariant(S, S, y), np.eye(6)[S])
    assert fc.covariant(T, T, y)[S] == pytest.approx(0.7)
    np.testing.assert_allclose(fc.covariant(T, S, y), np.eye(6)[T])
    np.testing.assert_allclose(fc.covariant(0, S, y), np.eye(6)[0])
    # nabla_{X1} X3 has E-component -1/2 omega_13 = 1/2
    assert fc.covariant(0, 2, y)[T] == pytest.approx(0.5)


def test_coordinate_christoffels_reproduce_frame_table(quartic_fc, P_points):
    for y in P_points[:4]:
        assert frame_roundtrip_residual(quartic_fc, y) < 1e-12


def test_torsion_free_and_preserves_mu_for_arbitrary_parameters(quartic_space, P_points):
    params = RicciFlatParameters.user(quartic_space.spec, shat={(0, 1): "x3", (2, 2): "x1*x4"},
                                      U=["x2", "1", "0", "x1^2"], f="sin(x3)")
    ccp = CoordConnectionP(induced_connection(quartic_space, params))
    for y in P_points[:3]:
        G = ccp.christoffel_jets(y, 1)
        assert np.abs(geo.torsion_jets(G).value).max() < 1e-13
        mu = quartic_space.mu_jets(y, 1)
        assert np.abs(geo.nabla_form_jets(G.truncate(0), mu).value).max() < 1e-12


def test_ricci_table_with_user_parameters(quartic_space, P_points):
    params = RicciFlatParameters.user(quartic_space.spec, shat={(0, 0): "x2", (1, 3): "x1*x3"},
                                      U=["x4", "x1*x2", "0", "1"], f="x1*x3")
    fc = induced_connection(quartic_space, params)
    ccp = CoordConnectionP(fc)
    for y in P_points[:3]:
        np.testing.assert_allclose(ricci_frame(ccp, y), ricci_table(fc, y), atol=1e-10)


@pytest.mark.parametrize("scale", [0.5, -1.25])
def test_horizontal_ricci_is_linear_in_shat_with_slope_six(flat_space, scale):
    base = np.array([[1.0, 0.2, 0, 0.3], [0.2, -1, 0.4, 0], [0, 0.4, 2, 0], [0.3, 0, 0, 0.5]])
    shat = scale * base
    fc = induced_connection(flat_space, RicciFlatParameters.user(flat_space.spec, shat=shat))
    y = np.array([0.3, 0.1, -0.2, 0.6, 0.0, 0.2])
    np.testing.assert_allclose(ricci_frame(CoordConnectionP(fc), y)[:4, :4], 6 * shat, atol=1e-12)


def test_shifting_shat_breaks_ricci_flatness(quartic):
    pts = sample_points(2, 3, seed=1)
    good = verify_theorem(quartic, pts)
    assert good.record("ricci_flat").passed
    bad = verify_theorem(quartic, pts, params=ricci_flat_params(quartic, 1e-3 * np.eye(4)))
    assert not bad.record("ricci_flat").passed
    assert bad.record("torsion").passed


def test_connection_is_invariant_along_t_and_s(quartic_ccp):
    y = np.array([0.2, -0.3, 0.1, 0.4, 0.0, 0.0])
    base = quartic_ccp(y)
    for shift in ([0, 0, 0, 0, 0.7, 0], [0, 0, 0, 0, 0, -0.4], [0, 0, 0, 0, 0.3, 0.45]):
        np.testing.assert_allclose(quartic_ccp(y + np.array(shift)), base, atol=1e-13)


def test_closed_form_curvature_blocks(quartic_fc, quartic_ccp, P_points):
    masks = block_masks(quartic_fc.space)
    for y in P_points[:3]:
        direct = frame_curvature_direct(quartic_ccp, y)
        formula = closed_form_curvature(quartic_fc, y)
        np.testing.assert_allclose(direct[masks["asserted"]], formula[masks["asserted"]], atol=1e-10)
        for key in ("xy_e", "xe_y", "xe_e"):
            np.testing.assert_allclose(direct[masks[key]], formula[masks[key]], atol=1e-10)
        split = closed_form_curvature(quartic_fc, y, "split")
        assert np.abs(direct[masks["xe_e"]] - split[masks["xe_e"]]).max() > 1e-3


def test_curvature_formula_zero_blocks(quartic_fc):
    y = np.array([0.2, -0.3, 0.1, 0.4, 0.6, 0.1])
    for a in range(6):
        for b in range(6):
            assert np.abs(curvature_formula(quartic_fc, y, a, b, S)).max() == 0.0
            assert np.abs(curvature_formula(quartic_fc, y, S, a, b)).max() == 0.0
    with pytest.raises(IndexError):
        curvature_formula(quartic_fc, y, 0, 6, 1)
    with pytest.raises(ValueError):
        closed_form_curvature(quartic_fc, y, "other")


def test_D_sigma_U_is_bilinear(quartic_fc, rng):
    y = np.array([0.2, -0.3, 0.1, 0.4, 0.0, 0.0])
    Y, Z, W = rng.normal(size=(3, 4))
    lhs = D_sigma_U(quartic_fc, y, 2 * Y + Z, W)
    np.testing.assert_allclose(lhs, 2 * D_sigma_U(quartic_fc, y, Y, W) + D_sigma_U(quartic_fc, y, Z, W),
                               atol=1e-14)
    # ricci-flat data on the quartic fixture has non-zero sigma derivative
    assert np.abs(D_sigma_U(quartic_fc, y, Y, W)).max() > 0


def test_flat_fixture_gives_flat_ricci_flat_connection(flat):
    rep = verify_theorem(flat, sample_points(2, 4, seed=3))
    assert rep.overall
    assert "flat" in rep and rep.record("flat").residual < 1e-12


def test_quartic_induced_report(quartic):
    rep = verify_theorem(quartic, sample_points(2, 3, seed=5))
    assert rep.overall
    assert "flat" not in rep
    assert rep.diagnostics["curvature_xe_e_grouped"] < 1e-10
    assert rep.diagnostics["curvature_xe_e_split"] > 1e-3


def test_parameter_validation(flat):
    with pytest.raises(ValueError):
        RicciFlatParameters(flat, "bogus")
    with pytest.raises(ValueError):
        RicciFlatParameters.user(flat, U=["1", "0"])
    with pytest.raises(ValueError):
        ricci_flat_params(flat, np.triu(np.ones((4, 4))))
    with pytest.raises(KeyError):
        ricci_flat_params(flat).field("nope")
