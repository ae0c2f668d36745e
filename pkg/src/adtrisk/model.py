"""Attack-defense tree data model: nodes, controls, scenarios, validation."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .cvss import HARDENING_ORDER, METRICS, ImpactTriple, MetricVector, exploitability, hardness
from .diagnostics import Diagnostic, SourceSpan, error

CVE_ID_PATTERN = re.compile(r"CVE-\d{4}-\d{4,}")

CONTROL_KINDS = ("preventive", "detective")
COST_LEVELS = (1, 2, 3, 4)


@dataclass
class CveRef:
    """One candidate vulnerability backing a leaf."""

    id: str
    vector: MetricVector
    note: Optional[str] = None
    span: Optional[SourceSpan] = None

    @property
    def ac_label(self) -> str:
        return self.vector.ac


@dataclass
class Leaf:
    """Atomic attack step with candidate CVEs and declared defense hooks."""

    name: str
    candidates: list = field(default_factory=list)
    defenses: list = field(default_factory=list)
    span: Optional[SourceSpan] = None


@dataclass
class OrNode:
    children: list
    name: Optional[str] = None
    span: Optional[SourceSpan] = None


@dataclass
class AndNode:
    children: list
    name: Optional[str] = None
    span: Optional[SourceSpan] = None


@dataclass
class SandNode:
    """Sequential AND: a precondition family, then one execution step."""

    pre: "AdtNode"
    execution: "AdtNode"
    name: Optional[str] = None
    span: Optional[SourceSpan] = None


AdtNode = Union[OrNode, AndNode, SandNode, Leaf]


@dataclass
class Goal:
    """Tree root; the only node carrying an impact triple."""

    name: str
    impact: ImpactTriple
    child: AdtNode
    span: Optional[SourceSpan] = None


@dataclass
class Transform:
    """Hardening of one base metric, e.g. PR L -> H."""

    metric: str
    frm: str
    to: str
    span: Optional[SourceSpan] = None


@dataclass
class Control:
    name: str
    kind: str  # "preventive" | "detective"
    cost: int  # ordinal level 1-4
    transforms: list = field(default_factory=list)
    span: Optional[SourceSpan] = None


@dataclass
class Application:
    """One scenario line: a control applied to a leaf or to exec(NODE)."""

    control: str
    target: str
    is_exec: bool = False
    span: Optional[SourceSpan] = None


@dataclass
class Scenario:
    name: str
    applications: list = field(default_factory=list)
    path: Optional[str] = None  # branch the scenario reports against
    span: Optional[SourceSpan] = None


@dataclass
class Model:
    name: str
    controls: dict = field(default_factory=dict)
    trees: list = field(default_factory=list)
    scenarios: dict = field(default_factory=dict)

    def get_goal(self, name: str) -> Optional[Goal]:
        for goal in self.trees:
            if goal.name == name:
                return goal
        return None


# Tree walking helpers.  A leaf referenced from several places is the same
# object and is yielded once per occurrence.

def iter_leaves(node: AdtNode) -> Iterator[Leaf]:
    if isinstance(node, Leaf):
        yield node
    elif isinstance(node, (OrNode, AndNode)):
        for child in node.children:
            yield from iter_leaves(child)
    elif isinstance(node, SandNode):
        yield from iter_leaves(node.pre)
        yield from iter_leaves(node.execution)


def iter_nodes(node: AdtNode) -> Iterator[AdtNode]:
    yield node
    if isinstance(node, (OrNode, AndNode)):
        for child in node.children:
            yield from iter_nodes(child)
    elif isinstance(node, SandNode):
        yield from iter_nodes(node.pre)
        yield from iter_nodes(node.execution)


def leaf_definitions(node: AdtNode) -> list:
    """Distinct leaf objects in first-occurrence order."""
    seen, out = set(), []
    for leaf in iter_leaves(node):
        if id(leaf) not in seen:
            seen.add(id(leaf))
            out.append(leaf)
    return out


def contains_sand(node: AdtNode) -> bool:
    return any(isinstance(n, SandNode) for n in iter_nodes(node))


def named_nodes(goal: Goal) -> dict:
    """Name -> node map over leaves and named interior nodes of one tree."""
    names = {}
    for node in iter_nodes(goal.child):
        if node.name is not None and node.name not in names:
            names[node.name] = node
    return names


def branches(goal: Goal) -> list:
    """Top-level alternatives of a goal: children of a root OR, else the child."""
    if isinstance(goal.child, OrNode):
        return list(goal.child.children)
    return [goal.child]


def branch_name(node: AdtNode, index: int) -> str:
    if getattr(node, "name", None):
        return node.name
    return f"branch_{index + 1}"


def transform_vector(v: MetricVector, t: Transform) -> MetricVector:
    """Apply one transform: replace the metric iff it currently equals t.frm.

    Any other current value leaves the vector unchanged (the caller decides
    whether that deserves a warning).
    """
    if v.get(t.metric) == t.frm:
        return v.replace(t.metric, t.to)
    return v


def worst_case_candidate(leaf: Leaf) -> CveRef:
    """Candidate with the highest untreated exploitability; ties prefer AC:L."""
    if not leaf.candidates:
        raise ValueError(f"leaf {leaf.name} has no candidates")
    return max(leaf.candidates, key=lambda c: (exploitability(c.vector), c.vector.ac == "L"))


def treated_vector(leaf: Leaf, transforms: Optional[dict] = None) -> MetricVector:
    """Worst-case candidate's vector after applying merged transforms.

    Selection happens before hardening: the worst case is chosen on untreated
    values, then the transforms reshape that one candidate.
    """
    v = worst_case_candidate(leaf).vector
    if transforms:
        for metric in METRICS:
            t = transforms.get(metric)
            if t is not None:
                v = transform_vector(v, t)
    return v


def leaf_exploitability(leaf: Leaf, transforms: Optional[dict] = None) -> tuple:
    """Worst-case exploitability of a leaf and the AC label that goes with it."""
    v = treated_vector(leaf, transforms)
    return exploitability(v), v.ac


@dataclass
class ResolvedScenario:
    """A scenario bound to one goal: merged per-leaf transforms plus bookkeeping."""

    leaf_transforms: dict = field(default_factory=dict)  # leaf name -> {metric: Transform}
    controls: dict = field(default_factory=dict)  # applied controls by name
    detective: list = field(default_factory=list)
    problems: list = field(default_factory=list)  # (code, message, span)


def resolve_scenario(model: Model, goal: Goal, scenario: Scenario) -> ResolvedScenario:
    """Resolve applications against one tree, merging transforms per leaf."""
    resolved = ResolvedScenario()
    names = named_nodes(goal)
    for app in scenario.applications:
        control = model.controls.get(app.control)
        if control is None:
            resolved.problems.append(
                ("E-UNRESOLVED", f"unresolved control {app.control!r}", app.span))
            continue
        target = names.get(app.target)
        if app.is_exec:
            targets = _exec_target_leaves(goal, app.target)
            if targets is None:
                resolved.problems.append(
                    ("E-UNRESOLVED",
                     f"exec({app.target}) does not name an execution step of goal {goal.name!r}",
                     app.span))
                continue
        else:
            if not isinstance(target, Leaf):
                resolved.problems.append(
                    ("E-UNRESOLVED",
                     f"target {app.target!r} is not a leaf of goal {goal.name!r}",
                     app.span))
                continue
            targets = [target]
        resolved.controls[control.name] = control
        if control.kind == "detective":
            resolved.detective.append(control.name)
            continue
        for leaf in targets:
            if control.name not in leaf.defenses:
                resolved.problems.append(
                    ("E-UNRESOLVED",
                     f"control {control.name!r} is not declared as a defense of leaf {leaf.name!r}",
                     app.span))
                continue
            merged = resolved.leaf_transforms.setdefault(leaf.name, {})
            for t in control.transforms:
                existing = merged.get(t.metric)
                if existing is not None and (existing.frm, existing.to) != (t.frm, t.to):
                    resolved.problems.append(
                        ("E-TRANSFORM-CONFLICT",
                         f"conflicting {t.metric} transforms on leaf {leaf.name!r}: "
                         f"{existing.frm}->{existing.to} vs {t.frm}->{t.to}",
                         app.span))
                    continue
                merged[t.metric] = t
    return resolved


def _exec_target_leaves(goal: Goal, name: str):
    """Leaves under the execution child named `name`, or None if no match."""
    for node in iter_nodes(goal.child):
        if isinstance(node, SandNode):
            child = node.execution
            child_name = getattr(child, "name", None)
            if child_name == name:
                return list(iter_leaves(child))
    return None


def scenario_goal(model: Model, scenario: Scenario) -> Optional[Goal]:
    """The goal a scenario's path points into, if any."""
    if scenario.path is None:
        return None
    for goal in model.trees:
        if scenario.path in named_nodes(goal) or scenario.path == goal.name:
            return goal
    return None


def validate(model: Model) -> list:
    """Structural validation; returns one diagnostic per violation."""
    diagnostics = []

    def err(code, message, span=None):
        diagnostics.append(error(code, message, span))

    for name, control in model.controls.items():
        if control.kind not in CONTROL_KINDS:
            err("E-CONTROL-TRANSFORMS", f"control {name!r} has unknown class {control.kind!r}",
                control.span)
        if control.cost not in COST_LEVELS:
            err("E-COST-RANGE", f"control {name!r} cost {control.cost} outside 1-4", control.span)
        if control.kind == "detective" and control.transforms:
            err("E-CONTROL-TRANSFORMS",
                f"detective control {name!r} must not carry transforms", control.span)
        if control.kind == "preventive" and not control.transforms:
            err("E-CONTROL-TRANSFORMS",
                f"preventive control {name!r} must carry at least one transform", control.span)
        by_metric = {}
        for t in control.transforms:
            problem = _check_transform(t)
            if problem:
                err(*problem)
                continue
            existing = by_metric.get(t.metric)
            if existing is not None and (existing.frm, existing.to) != (t.frm, t.to):
                err("E-TRANSFORM-CONFLICT",
                    f"control {name!r} has conflicting {t.metric} transforms", t.span or control.span)
            by_metric[t.metric] = t

    goal_names = set()
    for goal in model.trees:
        if goal.name in goal_names:
            err("E-DUP-NAME", f"duplicate goal name {goal.name!r}", goal.span)
        goal_names.add(goal.name)
        for value, axis in zip(goal.impact.as_tuple(), "CIA"):
            if not 0.0 <= value <= 1.0:
                err("E-IMPACT-RANGE",
                    f"goal {goal.name!r} impact {axis}={value} outside [0, 1]", goal.span)
        _validate_tree(model, goal, err)

    for scenario in model.scenarios.values():
        _validate_scenario(model, scenario, err)

    return diagnostics


def _check_transform(t: Transform):
    if t.metric not in HARDENING_ORDER:
        return ("E-BAD-METRIC", f"unknown metric {t.metric!r} in transform", t.span)
    order = HARDENING_ORDER[t.metric]
    if t.frm not in order or t.to not in order:
        return ("E-BAD-METRIC", f"bad {t.metric} value in transform {t.frm}->{t.to}", t.span)
    if hardness(t.metric, t.to) <= hardness(t.metric, t.frm):
        return ("E-TRANSFORM-LOOSEN",
                f"transform {t.metric} {t.frm}->{t.to} does not strictly harden", t.span)
    return None


def _validate_tree(model: Model, goal: Goal, err):
    seen_names = {}
    for node in iter_nodes(goal.child):
        name = getattr(node, "name", None)
        if name is not None:
            prior = seen_names.get(name)
            if prior is not None and prior is not node:
                err("E-DUP-NAME", f"duplicate name {name!r} in goal {goal.name!r}",
                    getattr(node, "span", None))
            seen_names[name] = node
        if isinstance(node, (OrNode, AndNode)):
            kind = "OR" if isinstance(node, OrNode) else "AND"
            if len(node.children) < 2:
                err("E-ARITY", f"{kind} requires >=2 children", node.span)
        elif isinstance(node, SandNode):
            if node.pre is None or node.execution is None:
                err("E-ARITY", "SAND requires a pre subtree and an exec subtree", node.span)
    for leaf in leaf_definitions(goal.child):
        if not leaf.candidates:
            err("E-EMPTY-LEAF", f"leaf {leaf.name!r} has no cve lines", leaf.span)
        seen_ids = set()
        for cve in leaf.candidates:
            if not cve.id:
                err("E-BAD-CVE-ID", f"empty cve id on leaf {leaf.name!r}", cve.span)
            elif not CVE_ID_PATTERN.fullmatch(cve.id):
                err("E-BAD-CVE-ID", f"cve id {cve.id!r} does not match CVE-YYYY-NNNN", cve.span)
            if cve.id in seen_ids:
                err("E-DUP-CVE", f"duplicate cve {cve.id!r} on leaf {leaf.name!r}", cve.span)
            seen_ids.add(cve.id)
        for defense in leaf.defenses:
            if defense not in model.controls:
                err("E-UNRESOLVED",
                    f"leaf {leaf.name!r} declares unresolved control {defense!r}", leaf.span)


def _validate_scenario(model: Model, scenario: Scenario, err):
    goal = None
    if scenario.path is not None:
        goal = scenario_goal(model, scenario)
        if goal is None:
            err("E-UNRESOLVED",
                f"scenario {scenario.name!r} path {scenario.path!r} matches no goal",
                scenario.span)
            return
        if scenario.path != goal.name:
            top = {branch_name(b, i) for i, b in enumerate(branches(goal))}
            if scenario.path not in top:
                err("E-UNRESOLVED",
                    f"scenario {scenario.name!r} path {scenario.path!r} is not a top-level "
                    f"branch of goal {goal.name!r}", scenario.span)
    goals = [goal] if goal is not None else model.trees
    for candidate in goals:
        resolved = resolve_scenario(model, candidate, scenario)
        if not resolved.problems:
            return
    # No goal accepted every application; report against the path goal when
    # known, otherwise against the first tree.
    target = goal if goal is not None else (model.trees[0] if model.trees else None)
    if target is None:
        err("E-UNRESOLVED", f"scenario {scenario.name!r} has no tree to resolve against",
            scenario.span)
        return
    for code, message, span in resolve_scenario(model, target, scenario).problems:
        err(code, f"scenario {scenario.name!r}: {message}", span or scenario.span)
