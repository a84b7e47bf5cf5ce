import math

import numpy as np
import pytest

from residue_lab.mellin import ChartSpec
from residue_lab.scenarios import (
    CI_INSTANCES,
    NAMED_CHARTS,
    REGISTRY,
    ScenarioReport,
    check_partition,
    ci_instance,
    complete_intersection_demo,
    default_paths,
    get_scenario,
    lambda_grid,
    named_chart,
    octant_grid,
    rel_err,
    run_resonance,
    run_section3,
    section3_direct,
    section3_expected,
)
from residue_lab.testforms import TestForm


def test_section3_expected_value():
    # -(2 pi i)^3 * phi(0) * phi_2(0) * phi_3(0) with values (1, 1, 2)
    np.testing.assert_allclose(section3_expected(), -(2j * math.pi) ** 3 * 2)
    np.testing.assert_allclose(section3_expected(), 16j * math.pi ** 3, rtol=1e-12)


def test_section3_direct_at_zero():
    np.testing.assert_allclose(section3_direct((0, 0, 0)), section3_expected(), rtol=1e-8)


def test_partition_of_unity():
    assert check_partition(samples=500, seed=3) <= 1e-12


def test_lambda_grid_shape():
    g = lambda_grid(per_axis=2)
    assert len(g) == 8 and all(len(p) == 3 for p in g)


def test_octant_grid_excludes_origin():
    pts = octant_grid((1.0, 0.1))
    assert (0.0, 0.0, 0.0) not in pts
    assert len(pts) == 3 ** 3 - 1


def test_default_paths():
    paths = default_paths(8)
    assert [p.kind for p in paths] == ["parabolic"] * 3 + ["iterated"]
    assert all(len(p.deltas) == 8 for p in paths)


def test_registry_and_lookup():
    assert set(REGISTRY) == {"section3", "ci-diagonal", "ci-weighted", "ci-coupled", "resonance"}
    assert get_scenario("resonance").dimension == 2
    with pytest.raises(KeyError, match="known"):
        get_scenario("nope")


@pytest.mark.parametrize("name", NAMED_CHARTS)
def test_named_charts_are_consistent(name):
    chart, t, spec = named_chart(name)
    assert isinstance(chart, ChartSpec) and isinstance(t, TestForm)
    assert t.n == chart.n


def test_named_chart_unknown():
    with pytest.raises(KeyError):
        named_chart("section4-z")


@pytest.mark.parametrize("which", CI_INSTANCES)
def test_ci_expected_values_nonzero(which):
    inst = ci_instance(which)
    assert abs(inst.expected) > 1.0
    with pytest.raises(KeyError):
        ci_instance("cubic")


def test_report_bookkeeping():
    rep = ScenarioReport("demo")
    rep.add("exact", 1.0, 1.0, 1e-12)
    rec = rep.add("off", 1.0, 1.1, 1e-3)
    assert not rec.passed and "rel. err" in rec.witness
    assert not rep.all_passed
    assert len(rep.rows) == 2 and rep.rows[1][-1] == "fail"
    assert rel_err(2 + 0j, 1) == 1.0
    assert math.isnan(rel_err("a", 1))


def test_section3_small_grid():
    rep = run_section3(grid=[(0.2, 0.15, 0.1)])
    assert rep.all_passed, [c for c in rep.checks if not c.passed]


def test_resonance_scenario():
    # the resonant modulus carries a log factor: the fit is expected to warn
    with pytest.warns(RuntimeWarning):
        rep = run_resonance()
    assert rep.all_passed, [c for c in rep.checks if not c.passed]
    assert rep.info["holder"]["gamma"] > 0.05


def test_ci_diagonal_scenario():
    rep = complete_intersection_demo("diagonal", holder=False)
    assert rep.all_passed, [c for c in rep.checks if not c.passed]
