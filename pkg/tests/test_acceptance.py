"""End-to-end checks pinning the published reference numbers.

Nine commitments, one test and one pass/fail line each: the arithmetic
layer, the worked conditioning example, the three shipped studies, the
two defense portfolio tables, oracle equivalence, the property suite,
and the format round-trip.  Tolerances are stated inline; everything
not told otherwise is exact at displayed precision.
"""

import random
import re

import pytest

from adtrisk import cli, dsl
from adtrisk import model as m
from adtrisk import oracle
from adtrisk.cvss import (ImpactTriple, MetricVector, exploitability,
                          impact_subscore, isc_base, roundup)
from adtrisk.engine import majority_ac, score_branches, score_node, score_sand
from adtrisk.treatment import ScenarioState, compare_scenarios, evaluate_scenario

SHIPPED = ["g1.adt", "g2.adt", "g3.adt", "toy.adt"]


def test_exploitability_regression_eight_vectors():
    reference = [
        ("AV:N/AC:L/PR:N/UI:N", 3.89),
        ("AV:N/AC:L/PR:L/UI:N", 2.84),
        ("AV:N/AC:H/PR:N/UI:N", 2.22),
        ("AV:N/AC:L/PR:L/UI:R", 2.07),
        ("AV:N/AC:H/PR:L/UI:N", 1.62),
        ("AV:N/AC:L/PR:H/UI:N", 1.23),
        ("AV:N/AC:L/PR:H/UI:R", 0.90),
        ("AV:N/AC:H/PR:H/UI:N", 0.71),
    ]
    for short, expected in reference:
        e = exploitability(MetricVector.from_short_form(short))
        assert e == pytest.approx(expected, abs=0.005), short


def test_worked_sand_arithmetic_step_by_step():
    e_p = max(2.8, 1.6)
    assert e_p == 2.8
    assert majority_ac(["L", "H"]) == "H"
    e_exec_star = 2.1  # the conditioned execution score the example posits
    e_path = min(e_p, e_exec_star)
    assert e_path == 2.1
    triple = ImpactTriple(0.56, 0.0, 0.0)
    assert isc_base(triple) == pytest.approx(0.56)
    impact = impact_subscore(triple)
    assert f"{impact:.2f}" == "3.60"
    assert roundup(min(impact + e_path, 10.0)) == 5.7


def test_procedure_goal_branch_scores(g1):
    rows = score_branches(g1.get_goal("G1"))
    assert [r.branch for r in rows] == ["B1", "B2", "B3", "B4", "web_mitm"]
    for row in rows[:4]:
        assert round(row.e_path, 2) == 3.89
        assert (row.base, row.severity) == (7.5, "High")
    tail = rows[4]
    assert round(tail.e_path, 2) == 2.22
    assert (tail.base, tail.severity) == (5.9, "Medium")


def test_leakage_and_disruption_branch_scores(g2, g3):
    leak = g2.get_goal("G2")
    assert leak.impact.as_tuple() == (0.56, 0.0, 0.0)
    leak_rows = score_branches(leak)
    assert len(leak_rows) == 3
    for row in leak_rows:
        assert (row.base, row.severity) == (7.5, "High")

    disruption_rows = score_branches(g3.get_goal("G3"))
    assert len(disruption_rows) == 7
    first = disruption_rows[0]
    assert round(first.e_path, 2) == 2.84
    assert (first.base, first.severity) == (6.5, "Medium")
    for row in disruption_rows[1:]:
        assert round(row.e_path, 2) == 3.89
        assert (row.base, row.severity) == (7.5, "High")


def test_prompt_injection_treatment_rows(g1):
    goal = g1.get_goal("G1")
    rows = {r.scenario: r for r in compare_scenarios(g1, goal, ["S1", "S2", "S3", "S4"])}

    def cells(name):
        t = rows[name].treated
        return (round(t.e_pre, 2), t.ac_maj, round(t.e_exec_star, 2),
                round(t.e_path, 2), t.base)

    assert cells("baseline") == (3.89, "L", 3.89, 3.89, 7.5)
    assert cells("S1") == (2.84, "L", 3.89, 2.84, 6.5)
    assert cells("S2") == (1.62, "H", 2.22, 1.62, 5.3)
    assert cells("S3") == (3.89, "L", 2.22, 2.22, 5.9)
    assert cells("S4") == (1.62, "H", 1.62, 1.62, 5.3)
    assert rows["baseline"].cost_range is None
    assert rows["S1"].cost_range == (3, 3)
    assert rows["S2"].cost_range == (2, 3)
    assert rows["S3"].cost_range == (1, 3)
    assert rows["S4"].cost_range == (2, 4)


def test_orchestration_treatment_rows(g1):
    goal = g1.get_goal("G1")
    rows = {r.scenario: r for r in compare_scenarios(g1, goal, ["O1", "O2", "O3", "O4"])}
    baseline = rows["baseline"].treated
    assert (round(baseline.e_path, 2), baseline.base) == (3.89, 7.5)
    assert (round(rows["O1"].treated.e_path, 2), rows["O1"].treated.base) == (2.84, 6.5)
    for name in ("O2", "O3", "O4"):
        treated = rows[name].treated
        assert (round(treated.e_path, 2), treated.base) == (1.62, 5.3)


def test_engine_matches_brute_force_oracle(capsys, examples_dir):
    for name in SHIPPED:
        assert cli.run(["oracle-check", str(examples_dir / name)]) == 0
    assert cli.run(["oracle-check", str(examples_dir / "toy.adt"),
                    "--seed", "1318", "--random", "200"]) == 0
    err = capsys.readouterr().err
    assert "MISMATCH" not in err
    assert "skipped" not in err


def test_monotonicity_detective_roundup_and_saturation_properties(g1):
    # (a) added hardening never raises a score: 1,000 seeded pairs where
    # one transform set contains the other
    rng = random.Random(20260822)
    pairs = 0
    for _ in range(4000):
        if pairs == 1000:
            break
        tree = oracle.random_tree(rng)
        full = oracle.random_leaf_transforms(rng, tree)
        if not full:
            continue
        sub = oracle.shrink_transforms(rng, full)
        e_base = score_node(tree).e
        e_sub = score_node(tree, ScenarioState(name="sub", leaf_transforms=sub)).e
        e_full = score_node(tree, ScenarioState(name="full", leaf_transforms=full)).e
        assert e_full <= e_sub + 1e-12
        assert e_sub <= e_base + 1e-12
        pairs += 1
    assert pairs == 1000

    # (b) detective-only treatment is score-identical to the baseline
    report = evaluate_scenario(g1, g1.get_goal("G1"), "S0")
    for field in ("e_pre", "ac_maj", "e_exec_star", "e_path", "base", "severity"):
        assert getattr(report.treated, field) == getattr(report.baseline, field)
    assert report.delta_e == 0.0
    for _ in range(25):
        tree = oracle.random_tree(rng)
        empty = ScenarioState(name="watchers", leaf_transforms={}, detective=["sensor"])
        assert score_node(tree, empty).e == score_node(tree).e

    # (c) roundup is idempotent and bounds its input from above by < 0.1
    for _ in range(1000):
        x = round(rng.uniform(0.0, 10.0), 4)
        r = roundup(x)
        assert x <= r < x + 0.1
        assert roundup(r) == r
        assert r == round(r, 1)

    # (d) hardening the non-bottleneck side of a sequence leaves the
    # bottleneck untouched
    def pre_leaf(n, ac):
        return m.Leaf(name=f"p{n}", candidates=[
            m.CveRef(id=f"CVE-2024-1000{n}", vector=MetricVector("N", ac, "N", "N"))])

    sand = m.SandNode(
        name="B",
        pre=m.OrNode(children=[pre_leaf(1, "L"), pre_leaf(2, "L"), pre_leaf(3, "L")]),
        execution=m.Leaf(name="x", candidates=[
            m.CveRef(id="CVE-2024-10009", vector=MetricVector("N", "L", "L", "N"))]))
    before = score_sand(sand)
    assert before.e_path == pytest.approx(2.84, abs=0.005)
    state = ScenarioState(name="s", leaf_transforms={
        "p1": {"AC": m.Transform("AC", "L", "H")}})
    after = score_sand(sand, state)
    assert after.ac_maj == before.ac_maj == "L"
    assert after.e_pre == before.e_pre
    assert after.e_path == before.e_path


def test_roundtrip_fixed_point_and_corruption_diagnostics(capsys, tmp_path, examples_dir):
    for name in SHIPPED:
        first = dsl.serialize(dsl.parse_file(str(examples_dir / name)).model)
        second = dsl.serialize(dsl.parse(first, filename=name).model)
        assert first == second, name

    corruptions = [
        ("g1.adt", lambda t: t.replace("cve ", "cvx ", 1)),
        ("g2.adt", lambda t: t.replace("AC:H", "AC:X", 1)),
        ("g3.adt", lambda t: t.replace("pre or", "per or", 1)),
        ("toy.adt", lambda t: t.rstrip()[:-1]),
    ]
    for name, mutate in corruptions:
        source = (examples_dir / name).read_text()
        corrupted = tmp_path / name
        corrupted.write_text(mutate(source))
        code = cli.run(["validate", str(corrupted)])
        captured = capsys.readouterr()
        assert code == 1, name
        assert captured.out == ""
        assert re.search(re.escape(name) + r":\d+:\d+: error E-", captured.err), name
