"""Defense scenario evaluation: merged transforms, rescoring, cost accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

from . import model as m
from .cvss import METRICS, MetricVector, hardness
from .engine import PathScore, score_branch

DETECTIVE_NOTE = "detection and response only, base metrics unchanged"


class TreatmentError(Exception):
    """Scenario cannot be applied to the requested goal."""


@dataclass
class ScenarioState:
    """A scenario resolved against one goal, ready for the engine."""

    name: str
    leaf_transforms: dict = field(default_factory=dict)  # leaf name -> {metric: Transform}
    controls: dict = field(default_factory=dict)  # applied controls by name, in apply order
    detective: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def cost_levels(self) -> list:
        return sorted(c.cost for c in self.controls.values())


@dataclass
class TreatmentReport:
    """Before/after scores for one scenario plus its cost accounting."""

    scenario: str
    baseline: PathScore
    treated: PathScore
    delta_e: float
    cost_range: Optional[tuple]  # (min level, max level); None on the baseline row
    cost_sum: int
    controls: list = field(default_factory=list)
    detective_notes: list = field(default_factory=list)
    warnings: list = field(default_factory=list)


def apply_transform(v: MetricVector, t: m.Transform) -> MetricVector:
    """Replace t.metric with t.to when the vector currently reads t.frm.

    A non-matching current value leaves the vector alone; re-application of
    the same transform is therefore a no-op.  Loosening transforms are
    rejected outright rather than applied.
    """
    if hardness(t.metric, t.to) <= hardness(t.metric, t.frm):
        raise TreatmentError(f"transform {t.metric} {t.frm}->{t.to} does not harden")
    return m.transform_vector(v, t)


def build_state(model: m.Model, goal: m.Goal, scenario: m.Scenario) -> ScenarioState:
    """Resolve a scenario against one goal or fail with the first problem."""
    resolved = m.resolve_scenario(model, goal, scenario)
    if resolved.problems:
        _, message, _ = resolved.problems[0]
        raise TreatmentError(f"scenario {scenario.name!r}: {message}")
    state = ScenarioState(name=scenario.name,
                          leaf_transforms=resolved.leaf_transforms,
                          controls=resolved.controls,
                          detective=resolved.detective)
    _note_inapplicable(goal, state)
    return state


def _note_inapplicable(goal: m.Goal, state: ScenarioState) -> None:
    # Replay each leaf's transform chain against its selected candidate so
    # no-op transforms (baseline already hard, or never at the assumed value)
    # surface as warnings instead of silently vanishing.
    names = m.named_nodes(goal)
    for leaf_name, merged in state.leaf_transforms.items():
        leaf = names.get(leaf_name)
        if not isinstance(leaf, m.Leaf):
            continue
        v = m.worst_case_candidate(leaf).vector
        for metric in METRICS:
            t = merged.get(metric)
            if t is None:
                continue
            current = v.get(metric)
            if current != t.frm:
                state.warnings.append(
                    f"transform {metric} {t.frm}->{t.to} is a no-op on leaf "
                    f"{leaf_name!r} ({metric} is {current})")
            v = m.transform_vector(v, t)


def _scenario_branch(goal: m.Goal, scenario: m.Scenario):
    """Branch node a scenario reports against: its path, else the whole goal."""
    if scenario.path is not None and scenario.path != goal.name:
        for i, node in enumerate(m.branches(goal)):
            if m.branch_name(node, i) == scenario.path:
                return node, i
        raise TreatmentError(
            f"scenario {scenario.name!r} path {scenario.path!r} is not a "
            f"top-level branch of goal {goal.name!r}")
    return goal.child, 0


def evaluate_scenario(model: m.Model, goal: m.Goal,
                      scenario: Union[str, m.Scenario]) -> TreatmentReport:
    """Score one scenario against its branch and diff it with the baseline."""
    if isinstance(scenario, str):
        found = model.scenarios.get(scenario)
        if found is None:
            raise TreatmentError(f"unknown scenario {scenario!r}")
        scenario = found
    node, index = _scenario_branch(goal, scenario)
    state = build_state(model, goal, scenario)
    baseline = score_branch(goal, node, None, index)
    treated = score_branch(goal, node, state, index)
    if node is goal.child:
        baseline.branch = treated.branch = goal.name
    levels = state.cost_levels()
    return TreatmentReport(
        scenario=scenario.name,
        baseline=baseline,
        treated=treated,
        delta_e=baseline.e_path - treated.e_path,
        cost_range=(levels[0], levels[-1]) if levels else None,
        cost_sum=sum(levels),
        controls=list(state.controls),
        detective_notes=[f"{name}: {DETECTIVE_NOTE}" for name in state.detective],
        warnings=list(state.warnings))


def baseline_report(goal: m.Goal, node: Optional[m.AdtNode] = None,
                    index: int = 0, branch: Optional[str] = None) -> TreatmentReport:
    """Untreated report row; reused as the anchor of every comparison."""
    if node is None:
        node = goal.child
        branch = branch or goal.name
    base = score_branch(goal, node, None, index)
    if branch:
        base.branch = branch
    return TreatmentReport(scenario="baseline", baseline=base, treated=base,
                           delta_e=0.0, cost_range=None, cost_sum=0)


def compare_scenarios(model: m.Model, goal: m.Goal, scenarios: list) -> list:
    """Baseline first, then scenarios by treated e_path, cost sum, name."""
    reports = [evaluate_scenario(model, goal, s) for s in scenarios]
    if reports:
        anchor = reports[0].baseline
        base = TreatmentReport(scenario="baseline", baseline=anchor, treated=anchor,
                               delta_e=0.0, cost_range=None, cost_sum=0)
    else:
        base = baseline_report(goal)
    reports.sort(key=lambda r: (r.treated.e_path, r.cost_sum, r.scenario))
    return [base] + reports
