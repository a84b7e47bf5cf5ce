import time
from itertools import permutations

import numpy as np
import pytest
from hypothesis import given, settings

from residue_lab.decompose import (
    IndexFamily,
    PreconditionError,
    d_monomial,
    lemma7_correct,
    prop9_decompose,
    verify_decomposition,
    verify_lemma7,
)
from residue_lab.forms import DivisorSpec, ExteriorForm, SparsePoly, restrict_extend, vanishes_on, wedge

from formgen import forms, correction_instance, random_form, random_instance, seeds


def z(n, i):
    return SparsePoly.var(n, i)


# -- layer decomposition ------------------------------------------------------------------


def test_constant_goes_to_head():
    c = ExteriorForm.function(SparsePoly.constant(2, 5))
    d = prop9_decompose(c, (0, 1))
    assert d.head == c
    assert all(f.is_zero() for lvl in d.layers.values() for f in lvl.values())
    assert d.tail.is_zero()


def test_dz1_lands_in_layer_of_complement():
    a = ExteriorForm.dz(2, 0)
    d = prop9_decompose(a, (0, 1))
    assert d.head.is_zero()
    # the subset keeping index 1 (0-based) is where z_2 = 0 is restricted
    assert d.layers[1][(1,)] == a
    assert d.layers[1][(0,)].is_zero()
    assert d.tail.is_zero()


def test_monomial_product_goes_to_tail():
    a = ExteriorForm.function(z(2, 0) * z(2, 1))
    d = prop9_decompose(a, (0, 1))
    assert d.head.is_zero()
    assert all(f.is_zero() for lvl in d.layers.values() for f in lvl.values())
    assert d.tail == a
    assert vanishes_on(d.tail, DivisorSpec((1, 1)))


def test_index_family_levels_are_binomial():
    fam = IndexFamily((0, 2, 3, 4))
    assert fam.level_sizes() == [1, 4, 6, 4, 1]


def test_layers_random_instances_exact():
    t0 = time.perf_counter()
    n_checked = 0
    for rng in seeds(120, base=1000):
        a = random_instance(rng)
        n = a.n
        size = int(rng.integers(1, n + 1))
        fam = tuple(sorted(int(i) for i in rng.choice(n, size, replace=False)))
        d = prop9_decompose(a, fam)
        rep = verify_decomposition(d, a, fam)
        assert rep.all_passed, [c for c in rep.checks if not c.passed]
        assert d.total() == a
        n_checked += 1
    assert n_checked >= 100
    assert time.perf_counter() - t0 < 60


def test_layers_memberships_independently():
    for rng in seeds(30, base=1300):
        a = random_instance(rng, n_max=4)
        fam = tuple(range(a.n))
        d = prop9_decompose(a, fam)
        for lvl in d.layers.values():
            for J, f in lvl.items():
                missing = set(fam) - set(J)
                assert all(restrict_extend(f, {i}).is_zero() for i in missing)
        assert all(restrict_extend(d.tail, {i}).is_zero() for i in fam)


def test_layers_idempotent_on_tail():
    for rng in seeds(20, base=1400):
        a = random_instance(rng, n_max=4)
        fam = tuple(range(a.n))
        t = prop9_decompose(a, fam).tail
        d2 = prop9_decompose(t, fam)
        assert d2.head.is_zero()
        assert all(f.is_zero() for lvl in d2.layers.values() for f in lvl.values())
        assert d2.tail == t


def test_layers_subset_order_irrelevant():
    for rng in seeds(10, base=1500):
        a = random_form(rng, 3, int(rng.integers(0, 3)))
        fam = (0, 1, 2)
        ref = prop9_decompose(a, fam)
        level1 = IndexFamily(fam).level(1)
        for order in list(permutations(level1))[:3]:
            d = prop9_decompose(a, fam, order=list(order))
            assert d.tail == ref.tail
            assert d.layers == ref.layers


def test_tampered_layer_fails_reconstruction():
    a = random_form(np.random.default_rng(3), 2, 1)
    d = prop9_decompose(a, (0, 1))
    J = next(iter(d.layers[1]))
    d.layers[1][J] = d.layers[1][J] + ExteriorForm.dz(2, 0)
    rep = verify_decomposition(d, a, (0, 1))
    failed = [c for c in rep.checks if not c.passed]
    assert any("reconstruction" in c.name.lower() for c in failed)
    assert any("dz{1}" in c.witness for c in failed)


def test_tampered_tail_fails_membership():
    a = random_form(np.random.default_rng(4), 2, 0)
    d = prop9_decompose(a, (0, 1))
    d.tail = d.tail + ExteriorForm.function(SparsePoly.constant(2, 1))
    rep = verify_decomposition(d, a + ExteriorForm.function(SparsePoly.constant(2, 1)), (0, 1))
    failed = [c for c in rep.checks if not c.passed]
    assert failed and all("tail" in c.name.lower() for c in failed)


@given(forms(n=3, max_deg=2))
@settings(max_examples=30, deadline=None)
def test_layers_reconstruction_property(a):
    d = prop9_decompose(a, (0, 2))
    assert verify_decomposition(d, a, (0, 2)).all_passed


# -- correction forms ------------------------------------------------------------------


def test_correction_example_zero_correction():
    a = ExteriorForm.dz(2, 1) * z(2, 1)
    ap = lemma7_correct(a, (1, 0), {1})
    assert ap.is_zero()
    assert vanishes_on(a - ap, DivisorSpec((0, 1)))


def test_correction_example_dz1():
    a = ExteriorForm.dz(2, 0)
    ap = lemma7_correct(a, (1, 0), {1})
    assert ap == a
    assert wedge(d_monomial((1, 0)), ap).is_zero()


def test_correction_tau_differential_is_admissible():
    # dz1 ^ dz2 pulls back to zero on {z2 = 0}, so the hypothesis holds
    a = ExteriorForm.dz(2, 1)
    ap = lemma7_correct(a, (1, 0), {1})
    assert verify_lemma7(a, (1, 0), {1}, ap).all_passed


def test_correction_precondition_violation_names_index():
    # dz1 ^ dz3 survives the pullback to {z2 = 0}
    with pytest.raises(PreconditionError) as exc:
        lemma7_correct(ExteriorForm.dz(3, 2), (1, 0, 0), {1})
    assert exc.value.witness_index == 1
    assert "z2=0" in str(exc.value)


def test_correction_overlap_rejected():
    with pytest.raises(PreconditionError):
        lemma7_correct(ExteriorForm.dz(2, 0), (1, 1), {1})


def test_correction_random_instances_exact():
    t0 = time.perf_counter()
    done = 0
    for rng in seeds(150, base=2000):
        a, sigma, tau = correction_instance(rng)
        # the generator is sound: check the precondition before use
        ds_a = wedge(d_monomial(sigma), a)
        assert all(restrict_extend(ds_a, {i}).is_zero() for i in tau)
        ap = lemma7_correct(a, sigma, tau)
        rep = verify_lemma7(a, sigma, tau, ap)
        assert rep.all_passed, [c for c in rep.checks if not c.passed]
        done += 1
    assert done >= 100
    assert time.perf_counter() - t0 < 60


def test_correction_nontrivial_instances_occur():
    nonzero = 0
    for rng in seeds(60, base=2100):
        a, sigma, tau = correction_instance(rng)
        if not lemma7_correct(a, sigma, tau).is_zero():
            nonzero += 1
    assert nonzero >= 10
