from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from extfock import sacheck
from extfock.config import TABLE_PRESETS, preset_model
from extfock.renormalize import ModelSpec
from extfock.sacheck import ESA, EXTENSION, NOT_COVERED, TABLE_COLUMNS

from reference_tables import ERRATA, TABLES


def computed_tables():
    return {t: {r.name: r.values for r in sacheck.model_table([preset_model(n) for n in names])}
            for t, names in TABLE_PRESETS.items()}


def test_tables_match_reference():
    got = computed_tables()
    assert set(got) == set(TABLES)
    for title, rows in TABLES.items():
        assert set(got[title]) == set(rows)
        for name, ref in rows.items():
            for col, want, have in zip(TABLE_COLUMNS, ref, got[title][name]):
                want = ERRATA.get((name, col), (want, want))[1]
                assert have == Fraction(want), (name, col)


def test_table_values_are_exact_rationals():
    for rows in computed_tables().values():
        for values in rows.values():
            assert all(isinstance(x, Fraction) for x in values)


def test_table_csv_header():
    csv = sacheck.table_csv([("t", sacheck.model_table([preset_model("dipole")]))])
    assert csv.splitlines() == ["table,model," + ",".join(TABLE_COLUMNS), "t,Dipole,2,1,1/2,0,2,1,1/2,0"]


@pytest.mark.parametrize("name, kind", [
    ("nelson-massless", ESA), ("nelson-massive", ESA), ("frohlich", ESA),
    ("dipole", NOT_COVERED), ("pseudo-relativistic", NOT_COVERED), ("nelson-cutoff", NOT_COVERED),
])
def test_verdicts(name, kind):
    assert sacheck.classify(preset_model(name)).kind == kind


def test_limiting_case_is_excluded():
    v = sacheck.classify(preset_model("pseudo-relativistic"))
    failed = [c.name for c in v.reasons if not c.passed]
    assert failed == ["m_V < -2"]


def test_extension_only_without_theorem():
    # m_theta = 4 has no uniqueness theorem, but V^ is locally integrable
    m = ModelSpec.from_strings("quartic", 3, "pow(4)", "pow(1)", "pow(-1/2)")
    assert sacheck.classify(m).kind == EXTENSION


def test_nonexact_scaling_rejected_by_model():
    with pytest.raises(ValueError):
        ModelSpec.from_strings("w", 3, "0.5*pow(2)", "pow(1)", "pow(-1/2)*window(0.1,10)")


def test_vanishing_theta_not_covered():
    v = sacheck.classify(preset_model("nelson-cutoff"))
    assert v.kind == NOT_COVERED and not v.reasons[0].passed


@pytest.mark.parametrize("m_V, kind", [(-2, ESA), (0, NOT_COVERED), (-1, NOT_COVERED)])
def test_region_points_d3(m_V, kind):
    assert sacheck.region_point(3, 2, None, m_V) == kind


def test_region_grid_includes_boundary_as_not_covered():
    rows = sacheck.region_grid((1, 3), 2, Fraction(1, 2), (-4, 2), (-4, 2))
    assert {r[0] for r in rows} == {1, 2, 3}
    on_edge = [r for r in rows if r[0] == 3 and r[2] == -1]
    assert on_edge and all(r[3] == NOT_COVERED for r in on_edge)


@given(st.integers(1, 3), st.sampled_from([1, 2]), st.fractions(-6, 3, max_denominator=4), st.fractions(-6, 3, max_denominator=4),
       st.fractions(0, 2, max_denominator=4))
def test_region_is_monotone(d, m_theta, beta_V, m_V, step):
    # raising beta_V or lowering m_V never leaves the ESA region
    if sacheck.region_point(d, m_theta, beta_V, m_V) == ESA:
        assert sacheck.region_point(d, m_theta, beta_V + step, m_V - step) == ESA


@given(st.integers(1, 3), st.sampled_from([1, 2]), st.fractions(-6, 3, max_denominator=4), st.fractions(-6, 3, max_denominator=4))
def test_thresholds_are_strict(d, m_theta, beta_V, m_V):
    bound = sacheck.m_V_bound(d, m_theta)
    assert sacheck.region_point(d, m_theta, -d, m_V) == NOT_COVERED
    assert sacheck.region_point(d, m_theta, beta_V, bound) == NOT_COVERED
