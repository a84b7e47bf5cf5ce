import math

import numpy as np
import pytest
import sympy as sp

from residue_lab.integrate import QuadratureSpec, SingularKernel1D, cauchy_pompeiu, quad1d
from residue_lab.mellin import (
    LAM,
    ChartSpec,
    ConvergenceError,
    Continuation,
    HypothesisError,
    LambdaPoint,
    PoleError,
    continue_eval,
    detect_resonance,
    evaluate_reduced,
    mellin_direct,
    reduce_chart,
)
from residue_lab.scenarios import (
    RESONANCE_EXPONENTS,
    SECTION3_SPEC,
    Z_CHART,
    ZETA_CHART,
    ci_instance,
    resonance_testforms,
    section3_chart_forms,
    section3_continuations,
    section3_expected,
)
from residue_lab.testforms import Field, TestForm, gaussian_bump, poly_bump

l1, l2, l3 = LAM


# -- one variable --------------------------------------------------------------------


CHART1 = ChartSpec(1, ((1,),), dbar_flags=(0,))


def test_one_variable_cauchy_limit():
    psi = gaussian_bump(1.7, 0.5)
    t = TestForm(1, 0, {(): Field.profile(1, psi, 0)})
    v = continue_eval(CHART1, t, (0,))
    # the dbar|z|^(2 lam) / z current at lam = 0 is the Cauchy-Pompeiu pairing
    np.testing.assert_allclose(v.value, 2j * np.pi * 1.7, rtol=1e-10)
    np.testing.assert_allclose(v.value, cauchy_pompeiu(psi), rtol=1e-10)
    np.testing.assert_allclose(mellin_direct(CHART1, t, (1,)), continue_eval(CHART1, t, (1,)).value, rtol=1e-6)


def test_disc_power_continued():
    np.testing.assert_allclose(quad1d(SingularKernel1D(-0.5), None, radius=1.0), 2 * np.pi, rtol=1e-10)


def _gamma_case():
    chart = ChartSpec(1, ((1,),))
    t = TestForm(1, 1, {(0,): Field.profile(1, poly_bump({(1, 0): 1.0}, 1.0), 0)})
    return Continuation(chart, t)


def _gamma_expected(lam):
    lam = complex(lam)
    return -2j * np.pi * complex(sp.gamma(sp.nsimplify(lam.real) + sp.I * sp.nsimplify(lam.imag) + 1))


@pytest.mark.parametrize("lam", [0.5, -0.5, -1.2 + 0.3j, -1.5])
def test_gamma_continuation_past_abscissa(lam):
    # |z|^(2 lam) / z * z e^{-|z|^2}: pi Gamma(lam + 1), continued past Re lam = -1
    v = _gamma_case().evaluate((lam,))
    np.testing.assert_allclose(v.value, _gamma_expected(lam), rtol=1e-6)
    assert v.error >= abs(v.value - _gamma_expected(lam))


def test_deep_continuation_is_flagged_by_error_bound():
    # far left of the abscissa the exact inner moments cancel catastrophically;
    # the fine/coarse error bound must say so instead of returning silent garbage
    lam = -2.5 + 0.4j
    v = _gamma_case().evaluate((lam,))
    assert v.error > 0.1 * abs(_gamma_expected(lam))


# -- reduction -----------------------------------------------------------------------


def _diag_form():
    F = Field.profile(3, gaussian_bump(1.0, 0.4), 0) * Field.profile(3, gaussian_bump(1.0, 0.4), 1) \
        * Field.profile(3, gaussian_bump(1.0, 0.4), 2)
    return TestForm(3, 1, {(0,): F})


def test_reduce_all_simple_single_term():
    chart = ChartSpec(3, ((1, 0, 0), (0, 1, 0), (0, 0, 1)), dbar_flags=(1, 2))
    terms = reduce_chart(chart, _diag_form())
    assert len(terms) == 1
    assert set(k for kind, k in terms[0].directions) == {1, 2}
    assert all(kind == "ibp" for kind, _ in terms[0].directions)
    assert terms[0].c == (0, 0, 0)


def test_reduce_z_chart_structure():
    tz, _ = section3_chart_forms()
    terms = reduce_chart(Z_CHART, tz)
    assert [t.directions for t in terms] == [(("act", 1), ("ibp", 2))]
    # dbar of |z2|^(2 lam2) on the non-simple z2 leaves lam2 * a_22 * dzbar2/zbar2
    assert sp.simplify(terms[0].lam_factor - l2) == 0
    assert terms[0].c == (0, 1, 0) and terms[0].violations == (1,)


def test_strict_mode_names_the_factor():
    tz, _ = section3_chart_forms()
    with pytest.raises(HypothesisError) as exc:
        reduce_chart(Z_CHART, tz, strict=True)
    assert exc.value.k == 1


def test_reduced_terms_match_direct_at_large_lambda():
    tz, _ = section3_chart_forms()
    lam = (2, 2, 2)
    red, _ = evaluate_reduced(Z_CHART, reduce_chart(Z_CHART, tz), lam, spec=SECTION3_SPEC)
    direct = mellin_direct(Z_CHART, tz, lam, spec=SECTION3_SPEC)
    np.testing.assert_allclose(red, direct, rtol=1e-5)


def test_evaluate_reduced_refuses_small_lambda():
    tz, _ = section3_chart_forms()
    with pytest.raises(ConvergenceError):
        evaluate_reduced(Z_CHART, reduce_chart(Z_CHART, tz), (0.1, -0.45, 0.1))


# -- blow-up charts continuation ------------------------------------------------------------


def test_z_chart_prefactor_and_pole():
    cz, czeta = section3_continuations()
    assert sp.simplify(cz.prefactor - l2 / (l2 + l3)) == 0
    assert [(p.coeffs, p.multiplicity) for p in cz.pole_factors] == [((0, 1, 1), 1)]
    assert sp.simplify(czeta.prefactor - l3 / (l2 + l3)) == 0


def test_z_chart_entire_part_at_zero_is_expected_value():
    cz, _ = section3_continuations()
    ent, err, _ = cz.entire((0, 0, 0))
    np.testing.assert_allclose(ent, section3_expected(), rtol=1e-4)


def test_pole_refusal_and_directional_limit():
    cz, _ = section3_continuations()
    with pytest.raises(PoleError):
        cz.evaluate((0, 0, 0))
    with pytest.raises(PoleError):
        cz.evaluate((0.1, 0.2, -0.2))
    v = cz.evaluate((0, 0, 0), direction=(1, 2, 3))
    np.testing.assert_allclose(v.value, 2 / 5 * section3_expected(), rtol=1e-4)


def test_pole_slope():
    cz, _ = section3_continuations()
    base = np.array([0.3, 0.25, -0.25])
    v = np.array([0.2, 0.3, 0.1])
    deltas = np.array([1e-2, 1e-3, 1e-4])
    vals = [abs(cz.evaluate(tuple(base + d * v)).value) for d in deltas]
    slope = np.polyfit(np.log(deltas), np.log(vals), 1)[0]
    assert abs(slope + 1) < 0.05


def test_zero_test_form():
    zero = TestForm(3, 1, {})
    chart = ChartSpec(3, ((1, 0, 0), (0, 1, 0), (0, 0, 1)), dbar_flags=(1, 2))
    v = continue_eval(chart, zero, (0.3, 0.2, 0.1))
    assert v.value == 0
    assert mellin_direct(chart, zero, (2, 2, 2)) == 0


def test_lambda_point_padding():
    assert LambdaPoint((1,)).lam == (1, 0, 0)
    with pytest.raises(ValueError):
        LambdaPoint((1, 2, 3, 4))


def test_chart_validation():
    with pytest.raises(ValueError):
        ChartSpec(2, ((1, 0), (0, 0)))
    with pytest.raises(ValueError):
        ChartSpec(2, ((1, 0),), dbar_flags=(3,))


# -- resonance -----------------------------------------------------------------------


@pytest.mark.parametrize("exps, resonant, cert", [
    (((1, 0, 0), (0, 1, 0), (0, 0, 1)), False, None),
    (((1, 0), (0, 1), (1, 1)), True, (1, 1, -1)),
    (((1, 0, 0), (0, 1, 0), (0, 1, 1)), False, None),
    (((2, 0, 1), (0, 1, 0), (4, 1, 2)), True, (2, 1, -1)),
])
def test_detect_resonance(exps, resonant, cert):
    rep = detect_resonance(exps)
    assert rep.resonant == resonant
    assert rep.certificate == cert
    if cert:
        combo = np.array(cert) @ np.array(exps)
        assert not combo.any()


def test_resonance_absorption_removes_pole():
    _, generic, absorbed = resonance_testforms()
    chart = ChartSpec(2, RESONANCE_EXPONENTS, dbar_flags=(1, 2))
    bad = Continuation(chart, generic, spec=QuadratureSpec(grading=6))
    good = Continuation(chart, absorbed, spec=QuadratureSpec(grading=6))
    assert sp.simplify(bad.prefactor - l2 * l3 / ((l1 + l3) * (l2 + l3))) == 0
    assert not good.pole_factors
    assert sp.simplify(good.prefactor - l2 * l3) == 0


# -- two-path agreement at random lambda ------------------------------------------------


def _two_path_cases():
    psi = gaussian_bump(1.7, 0.5)
    yield "one-variable", CHART1, TestForm(1, 0, {(): Field.profile(1, psi, 0)}), QuadratureSpec()
    for which in ("diagonal", "weighted"):
        inst = ci_instance(which)
        yield which, inst.chart, inst.test_form, inst.spec
    tz, tzeta = section3_chart_forms()
    yield "z-chart", Z_CHART, tz, SECTION3_SPEC
    yield "zeta-chart", ZETA_CHART, tzeta, SECTION3_SPEC
    _, _, absorbed = resonance_testforms()
    yield "resonance", ChartSpec(2, RESONANCE_EXPONENTS, dbar_flags=(1, 2)), absorbed, QuadratureSpec(grading=6)


@pytest.mark.parametrize("name, chart, t, spec", list(_two_path_cases()), ids=lambda x: x if isinstance(x, str) else "")
def test_two_path_agreement(name, chart, t, spec):
    rng = np.random.default_rng(sum(map(ord, name)))
    cont = Continuation(chart, t, spec=spec)
    for _ in range(5):
        lam = tuple(complex(rng.uniform(1, 3), rng.uniform(-0.5, 0.5)) for _ in range(chart.m))
        a = cont.evaluate(lam).value
        b = mellin_direct(chart, t, lam, spec=spec)
        np.testing.assert_allclose(a, b, rtol=1e-5, err_msg=f"{name} at {lam}")
