import numpy as np
import pytest

from residue_lab.forms import DimensionError, ExteriorForm, MonomialMap, SparsePoly
from residue_lab.testforms import (
    BidegreeError,
    Field,
    TestForm,
    compact_bump,
    dbar,
    gaussian_bump,
    inverted_plateau,
    plateau,
    poly_bump,
    product_split,
    pullback_test,
)

PROFILES = {
    "gauss": gaussian_bump(1.3 - 0.4j, radius=0.5),
    "gauss-off": gaussian_bump(0.7, radius=0.4, center=0.1 + 0.05j),
    "poly": poly_bump({(0, 0): 1.0, (1, 0): 0.5j, (1, 2): -2.0}, radius=0.6),
    "compact": compact_bump(2.0, radius=0.8),
    "plateau": plateau(0.3, 0.7),
}

RNG_POINTS = np.random.default_rng(11).uniform(-0.45, 0.45, (20, 2)) @ np.array([1, 1j])


def fd_dzbar(f, u, h=1e-4):
    fx = (f(u + h) - f(u - h)) / (2 * h)
    fy = (f(u + 1j * h) - f(u - 1j * h)) / (2 * h)
    return 0.5 * (fx + 1j * fy)


def fd_dz(f, u, h=1e-4):
    fx = (f(u + h) - f(u - h)) / (2 * h)
    fy = (f(u + 1j * h) - f(u - 1j * h)) / (2 * h)
    return 0.5 * (fx - 1j * fy)


@pytest.mark.parametrize("name", sorted(PROFILES))
def test_profile_derivatives_match_finite_differences(name):
    prof = PROFILES[name]
    u = RNG_POINTS
    ref = np.max(np.abs(prof(u))) + 1.0
    np.testing.assert_allclose(prof.dzbar()(u), fd_dzbar(prof, u), atol=1e-6 * ref)
    np.testing.assert_allclose(prof.dz()(u), fd_dz(prof, u), atol=1e-6 * ref)
    # mixed second derivative is symmetric
    np.testing.assert_allclose(prof.dz().dzbar()(u), prof.dzbar().dz()(u), atol=1e-10 * ref)


def test_profile_center_value_and_support():
    g = gaussian_bump(2.5, radius=0.3)
    assert g.value_at_center() == pytest.approx(2.5)
    c = compact_bump(1.0, radius=0.5)
    assert c.value_at_center() == pytest.approx(1.0)
    outside = np.array([0.5, 0.6j, -0.7 + 0.1j])
    np.testing.assert_array_equal(c(outside), 0)
    p = plateau(1.5, 2.0)
    np.testing.assert_allclose(p(np.array([0, 1.0, 1.5])), 1.0)
    np.testing.assert_allclose(p(np.array([2.0, 3.0j])), 0.0, atol=1e-300)


def test_plateau_and_inverted_plateau_complement():
    # the two cut-offs add up to one on the transition circle |w| = 1
    p, q = plateau(1.5, 2.0), inverted_plateau(1.5, 2.0)
    u = np.exp(1j * np.linspace(0, 2 * np.pi, 13))
    np.testing.assert_allclose(p(u), 1.0)
    np.testing.assert_allclose(q(u), 0.0, atol=1e-300)
    # q is 1 near infinity of the other chart variable
    np.testing.assert_allclose(q(np.array([0.1, 0.2j])), 1.0)


def _form3():
    n = 3
    F = (Field.profile(n, gaussian_bump(1.0, 0.5), 0)
         * Field.profile(n, poly_bump({(0, 0): 1, (0, 1): 0.3}, 0.6), 1)
         * (Field.constant(n, 1.0) + Field.poly(SparsePoly.var(n, 0) * SparsePoly.var(n, 2), conjugate=True)))
    return TestForm(n, 1, {(0,): F, (2,): Field.profile(n, gaussian_bump(0.5j, 0.4), 2) * F})


def _pts3(rng, k=20):
    return [rng.uniform(-0.4, 0.4, k) + 1j * rng.uniform(-0.4, 0.4, k) for _ in range(3)]


def test_field_dbar_matches_finite_differences():
    rng = np.random.default_rng(3)
    F = _form3().summands[(0,)]
    Z = _pts3(rng)
    h = 1e-4
    for k in range(3):
        def f(u, k=k):
            W = list(Z)
            W[k] = u
            return F.evaluate(W)
        np.testing.assert_allclose(F.dbar(k).evaluate(Z), fd_dzbar(f, Z[k], h), atol=1e-6)
        np.testing.assert_allclose(F.dz(k).evaluate(Z), fd_dz(f, Z[k], h), atol=1e-6)


def test_dbar_squared_is_zero():
    t = TestForm(3, 0, {(): _form3().summands[(0,)]})
    dd = dbar(dbar(t))
    Z = _pts3(np.random.default_rng(5))
    for val in dd.evaluate(Z).values():
        np.testing.assert_allclose(val, 0, atol=1e-12)


def test_dbar_top_degree_raises():
    t = TestForm(2, 2, {(0, 1): Field.constant(2)})
    with pytest.raises(BidegreeError):
        dbar(t)


BLOWUP = MonomialMap(3, ((1, 0, 0), (0, 1, 0), (0, 1, 1)))


def test_pullback_commutes_with_dbar():
    t = _form3()
    lhs = dbar(pullback_test(t, BLOWUP))
    rhs = pullback_test(dbar(t), BLOWUP)
    rng = np.random.default_rng(7)
    Z = _pts3(rng)
    lv, rv = lhs.evaluate(Z), rhs.evaluate(Z)
    for K in set(lv) | set(rv):
        np.testing.assert_allclose(lv.get(K, 0 * Z[0]), rv.get(K, 0 * Z[0]), atol=1e-8)


def test_pullback_jacobian_structure():
    # pulling back a (3,0) form picks up the holomorphic Jacobian z2
    t = TestForm(3, 0, {(): Field.constant(3, 1.0)})
    p = pullback_test(t, BLOWUP)
    Z = _pts3(np.random.default_rng(9))
    np.testing.assert_allclose(p.evaluate(Z)[()], Z[1])
    # dzbar3 pulls back to zbar2 dzbar3 + zbar3 dzbar2
    t1 = TestForm(3, 1, {(2,): Field.constant(3, 1.0)})
    p1 = pullback_test(t1, BLOWUP).evaluate(Z)
    np.testing.assert_allclose(p1[(2,)], Z[1] * Z[1].conj())
    np.testing.assert_allclose(p1[(1,)], Z[1] * Z[2].conj())


def test_pullback_dimension_errors():
    with pytest.raises(DimensionError):
        pullback_test(TestForm(2, 0, {(): Field.constant(2)}), BLOWUP)


def test_product_split_examples():
    n = 3
    phit = TestForm(n, 0, {(): Field.profile(n, gaussian_bump(), 0)})
    phi = ExteriorForm.dz(n, 2) * SparsePoly.var(n, 0)
    out = product_split(phit, phi)
    assert out.q == 1 and list(out.summands) == [(2,)]
    Z = _pts3(np.random.default_rng(2))
    np.testing.assert_allclose(out.evaluate(Z)[(2,)], gaussian_bump()(Z[0]) * Z[0].conj())


def test_product_split_bidegree_errors():
    n = 3
    phit = TestForm(n, 0, {(): Field.constant(n)})
    with pytest.raises(BidegreeError):
        product_split(phit, ExteriorForm.dz(n, 0, 1))
    with pytest.raises(BidegreeError):
        product_split(TestForm(n, 1, {(0,): Field.constant(n)}), ExteriorForm.dz(n, 0))


def test_testform_bidegree_validation():
    with pytest.raises(BidegreeError):
        TestForm(3, 1, {(0, 1): Field.constant(3)})
    # repeated index cancels, reversed order flips sign
    t = TestForm(3, 2, {(1, 0): Field.constant(3, 1.0)})
    np.testing.assert_allclose(t.evaluate([np.zeros(1)] * 3)[(0, 1)], -1.0)
