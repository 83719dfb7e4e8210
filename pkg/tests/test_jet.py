import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from scl.jet import Jet, JetError, jcos, jeinsum, jet_variables, jexp, jinv, jlog, jsin, jstack, multi_indices

coords = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False)


def random_poly_jet(rng, nvars, order, point):
    xs = jet_variables(point, order)
    out = Jet.constant(rng.normal(), nvars, order, point)
    for x in xs:
        out = out + rng.normal() * x
    for x in xs:
        for y in xs:
            out = out + rng.normal() * x * y
    return out


def test_multi_indices_are_graded_and_complete():
    idx = multi_indices(3, 2)
    assert len(idx) == math.comb(3 + 2, 2)
    assert [sum(a) for a in idx] == sorted(sum(a) for a in idx)
    assert len(set(idx)) == len(idx)


def test_constant_has_no_higher_terms():
    j = Jet.constant(5.0, 2, 3, [0.1, 0.2])
    assert j.value == 5.0
    assert all(v == 0.0 for a, v in j.as_dict().items() if sum(a) > 0)


def test_square_taylor_coefficients():
    (x,) = jet_variables([3.0], 2)
    assert (x * x).as_dict() == {(0,): 9.0, (1,): 6.0, (2,): 1.0}


def test_truncate_is_prefix():
    (x, y) = jet_variables([0.5, -1.0], 4)
    f = jexp(x * y)
    assert np.array_equal(f.truncate(2).coeffs, f.coeffs[: len(multi_indices(2, 2))])
    with pytest.raises(JetError):
        f.truncate(2).truncate(3)


@pytest.mark.parametrize("fn, ref", [(jsin, np.sin), (jcos, np.cos), (jexp, np.exp), (jlog, np.log)])
def test_unary_functions_match_finite_differences(fn, ref):
    (x,) = jet_variables([0.7], 3)
    j = fn(x)
    h = 1e-3
    f = lambda v: ref(0.7 + v)
    d1 = (f(h) - f(-h)) / (2 * h)
    d2 = (f(h) - 2 * f(0) + f(-h)) / h**2
    d3 = (f(2 * h) - 2 * f(h) + 2 * f(-h) - f(-2 * h)) / (2 * h**3)
    assert j.partial((1,)) == pytest.approx(d1, rel=1e-6)
    assert j.partial((2,)) == pytest.approx(d2, rel=1e-5)
    assert j.partial((3,)) == pytest.approx(d3, rel=1e-5)


def test_log_rejects_nonpositive():
    (x,) = jet_variables([-1.0], 2)
    with pytest.raises(ValueError):
        jlog(x)


def test_reciprocal_needs_nonzero_constant_term():
    (x,) = jet_variables([0.0], 2)
    with pytest.raises(ZeroDivisionError):
        1.0 / x


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000))
def test_product_is_commutative_and_associative(seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-1, 1, 3)
    a, b, c = (random_poly_jet(rng, 3, 3, p) for _ in range(3))
    np.testing.assert_allclose((a * b).coeffs, (b * a).coeffs, rtol=0, atol=1e-13)
    np.testing.assert_allclose(((a * b) * c).coeffs, (a * (b * c)).coeffs, rtol=1e-12, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(coords, coords, coords, coords)
def test_polynomial_reconstruction_from_coefficients(x0, y0, dx, dy):
    # f(x, y) = 3 x^3 y - 2 x y^2 + x - 7 is reproduced exactly by its order-4 jet
    f = lambda x, y: 3 * x**3 * y - 2 * x * y**2 + x - 7
    x, y = jet_variables([x0, y0], 4)
    j = f(x, y)
    total = sum(c * dx ** a[0] * dy ** a[1] for a, c in j.as_dict().items())
    assert total == pytest.approx(f(x0 + dx, y0 + dy), rel=1e-10, abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(coords, coords)
def test_chain_rule_for_exp(x0, y0):
    x, y = jet_variables([x0, y0], 1)
    inner = x * x * y + 2.0 * y
    outer = jexp(inner)
    for k in range(2):
        alpha = tuple(int(i == k) for i in range(2))
        assert outer.partial(alpha) == pytest.approx(math.exp(inner.value) * inner.partial(alpha), rel=1e-12)


def test_diff_lowers_order_and_matches_partial():
    x, y = jet_variables([0.3, -0.4], 3)
    f = jsin(x) * y * y
    g = f.diff(1)
    assert g.order == 2
    assert g.partial((1, 1)) == pytest.approx(f.partial((1, 2)), rel=1e-14)


def test_grad_puts_derivative_first():
    x, y = jet_variables([1.0, 2.0], 2)
    v = jstack([x * y, x + y])
    g = v.grad()
    assert g.shape == (2, 2)
    np.testing.assert_allclose(g.value, [[2.0, 1.0], [1.0, 1.0]])


def test_restrict_and_extend_are_inverse():
    x, y = jet_variables([0.2, 0.3], 3)
    f = jexp(x) * jcos(y)
    back = f.extend(2, [5.0, 6.0]).restrict(2)
    np.testing.assert_array_equal(back.coeffs, f.coeffs)


def test_jinv_inverts_matrix_jet(rng):
    p = rng.uniform(-1, 1, 2)
    x, y = jet_variables(p, 3)
    m = jstack([jstack([2.0 + x, y * y]), jstack([jsin(x), 3.0 + x * y])])
    prod = jeinsum("ij,jk->ik", m, jinv(m))
    np.testing.assert_allclose(prod.coeffs[..., 0], np.eye(2), atol=1e-14)
    np.testing.assert_allclose(prod.coeffs[..., 1:], 0.0, atol=1e-13)


def test_jeinsum_matches_scalar_products(rng):
    p = rng.uniform(-1, 1, 2)
    x, y = jet_variables(p, 2)
    a = jstack([x, y])
    b = jstack([y * y, jexp(x)])
    dot = jeinsum("i,i->", a, b)
    ref = x * y * y + y * jexp(x)
    np.testing.assert_allclose(dot.coeffs, ref.coeffs, atol=1e-14)
    M = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_allclose(jeinsum("ij,j->i", M, a).value, M @ a.value)


def test_mixing_variable_counts_is_rejected():
    (x,) = jet_variables([0.0], 2)
    y, _ = jet_variables([0.0, 0.0], 2)
    with pytest.raises(JetError):
        x + y
