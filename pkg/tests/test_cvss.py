"""Scoring arithmetic: weights, exploitability, rounding, severity bands."""

import pytest

from adtrisk.cvss import (HARDENING_ORDER, BaseScore, ImpactTriple,
                          MetricVector, base_score, exploitability, hardness,
                          impact_subscore, isc_base, roundup, severity)

# Two-decimal reference values for every vector the shipped models use.
KNOWN_E = [
    (("N", "L", "N", "N"), 3.89),
    (("N", "L", "L", "N"), 2.84),
    (("N", "L", "N", "R"), 2.84),
    (("N", "H", "N", "N"), 2.22),
    (("N", "L", "L", "R"), 2.07),
    (("L", "L", "L", "N"), 1.83),
    (("N", "H", "L", "N"), 1.62),
    (("N", "H", "N", "R"), 1.62),
    (("N", "L", "H", "N"), 1.23),
    (("N", "L", "H", "R"), 0.90),
    (("N", "H", "H", "N"), 0.71),
]


@pytest.mark.parametrize("parts,expected", KNOWN_E)
def test_exploitability_reference_values(parts, expected):
    assert exploitability(MetricVector(*parts)) == pytest.approx(expected, abs=0.005)


def test_exploitability_is_unrounded():
    e = exploitability(MetricVector("N", "L", "N", "N"))
    assert e == pytest.approx(8.22 * 0.85 * 0.77 * 0.85 * 0.85)
    assert e != 3.89  # rounding happens at display time only


def test_vector_rejects_unknown_values():
    with pytest.raises(ValueError):
        MetricVector("X", "L", "N", "N")
    with pytest.raises(ValueError):
        MetricVector("N", "M", "N", "N")


def test_vector_get_and_replace():
    v = MetricVector("N", "L", "N", "N")
    assert v.get("PR") == "N"
    w = v.replace("PR", "H")
    assert (w.av, w.ac, w.pr, w.ui) == ("N", "L", "H", "N")
    assert v.pr == "N"  # original untouched


def test_short_form_round_trip():
    v = MetricVector("A", "H", "L", "R")
    assert v.short_form() == "AV:A/AC:H/PR:L/UI:R"
    assert MetricVector.from_short_form(v.short_form()) == v


def test_from_short_form_tolerates_prefix_and_scope():
    v = MetricVector.from_short_form("CVSS:3.1/AV:N/AC:L/PR:N/UI:N/S:U")
    assert v == MetricVector("N", "L", "N", "N")


def test_from_short_form_rejects_partial_vectors():
    with pytest.raises(ValueError):
        MetricVector.from_short_form("AV:N/AC:L/PR:N")
    with pytest.raises(ValueError):
        MetricVector.from_short_form("AV:N/AC:L/PR:N/XX:N")


def test_impact_subscore_single_axis():
    t = ImpactTriple(0.56, 0.0, 0.0)
    assert isc_base(t) == pytest.approx(0.56)
    assert impact_subscore(t) == pytest.approx(3.5952)
    assert f"{impact_subscore(t):.2f}" == "3.60"


def test_impact_subscore_combines_axes():
    t = ImpactTriple(0.56, 0.56, 0.0)
    assert isc_base(t) == pytest.approx(1 - 0.44 * 0.44)


def test_impact_component_out_of_range_rejected():
    with pytest.raises(ValueError):
        isc_base(ImpactTriple(1.5, 0.0, 0.0))
    with pytest.raises(ValueError):
        isc_base(ImpactTriple(0.0, -0.1, 0.0))


@pytest.mark.parametrize("value,expected", [
    (0.0, 0.0),
    (4.0, 4.0),
    (4.02, 4.1),
    (5.6952, 5.7),
    (7.4822, 7.5),
    (8.6000000001, 8.6),  # float noise collapses instead of bumping a band
])
def test_roundup(value, expected):
    assert roundup(value) == expected


def test_roundup_idempotent():
    for value in (0.0, 1.05, 5.6952, 7.4822, 9.99):
        once = roundup(value)
        assert roundup(once) == once


@pytest.mark.parametrize("score,band", [
    (0.0, "None"),
    (0.1, "Low"),
    (3.9, "Low"),
    (4.0, "Medium"),
    (6.9, "Medium"),
    (7.0, "High"),
    (8.9, "High"),
    (9.0, "Critical"),
    (10.0, "Critical"),
])
def test_severity_bands(score, band):
    assert severity(score) == band


def test_base_score_zero_impact_is_none():
    assert base_score(3.89, ImpactTriple(0, 0, 0)) == BaseScore(0.0, "None")


def test_base_score_single_axis():
    e = exploitability(MetricVector("N", "L", "N", "N"))
    assert base_score(e, ImpactTriple(0.56, 0, 0)) == BaseScore(7.5, "High")


def test_base_score_saturates_at_ten():
    assert base_score(8.22, ImpactTriple(1, 1, 1)) == BaseScore(10.0, "Critical")


def test_hardening_ladders():
    assert HARDENING_ORDER["PR"] == ("N", "L", "H")
    assert hardness("AC", "L") < hardness("AC", "H")
    assert hardness("AV", "N") < hardness("AV", "P")
    assert hardness("UI", "N") < hardness("UI", "R")
