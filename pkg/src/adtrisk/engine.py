"""Aggregation semantics over validated trees.

OR takes the easiest alternative (max), AND the hardest requirement (min).
SAND scores its precondition family, exports the family's majority AC label
onto the execution step, and bottlenecks on min(E(P), E(V*)).  Goal impact is
applied exactly once, at the goal; every interior score is impact-free.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

from . import model as m
from .cvss import METRICS, ImpactTriple, base_score, exploitability, impact_subscore

if TYPE_CHECKING:
    from .treatment import ScenarioState


@dataclass
class NodeScore:
    """Impact-free score of a subtree: exploitability plus its leaves' AC labels."""

    e: float
    ac_labels: list
    leaves: list


@dataclass
class PathScore:
    """Scored branch.  e_pre/ac_maj/e_exec_star are None off a SAND spine."""

    branch: str
    e_pre: Optional[float]
    ac_maj: Optional[str]
    e_exec_star: Optional[float]
    e_path: float
    triple: Optional[ImpactTriple] = None
    impact: Optional[float] = None
    base: Optional[float] = None
    severity: Optional[str] = None


def _leaf_transforms(state: Optional["ScenarioState"], leaf: m.Leaf) -> Optional[dict]:
    if state is None:
        return None
    return state.leaf_transforms.get(leaf.name)


def majority_ac(labels) -> str:
    """L iff strictly more L than H labels; ties go to H (conservative)."""
    labels = list(labels)
    if not labels:
        raise ValueError("empty AC label multiset")
    low = sum(1 for label in labels if label == "L")
    return "L" if low > len(labels) - low else "H"


def condition_execution(exec_vector, ac_maj: str, exec_transforms: Optional[dict] = None):
    """Build V*: transform the execution vector, then export the family label.

    AV/PR/UI come from the (hardened) execution vector.  Without an AC
    transform the family's majority label replaces AC outright; with one, the
    harder of the two wins (H dominates L).
    """
    transforms = dict(exec_transforms) if exec_transforms else {}
    v = exec_vector
    for metric in METRICS:
        t = transforms.get(metric)
        if t is not None:
            v = m.transform_vector(v, t)
    if "AC" in transforms:
        ac = "H" if "H" in (ac_maj, v.ac) else "L"
    else:
        ac = ac_maj
    return v.replace("AC", ac)


def score_node(node: m.AdtNode, state: Optional["ScenarioState"] = None) -> NodeScore:
    """Post-treatment score of any subtree; SAND nodes fold to their e_path."""
    if isinstance(node, m.Leaf):
        e, label = m.leaf_exploitability(node, _leaf_transforms(state, node))
        return NodeScore(e, [label], [node.name])
    if isinstance(node, (m.OrNode, m.AndNode)):
        scores = [score_node(child, state) for child in node.children]
        pick = max if isinstance(node, m.OrNode) else min
        e = pick(s.e for s in scores)
        labels = [label for s in scores for label in s.ac_labels]
        leaves = [leaf for s in scores for leaf in s.leaves]
        return NodeScore(e, labels, leaves)
    if isinstance(node, m.SandNode):
        path = score_sand(node, state)
        labels, leaves = [], []
        for leaf in m.iter_leaves(node):
            _, label = m.leaf_exploitability(leaf, _leaf_transforms(state, leaf))
            labels.append(label)
            leaves.append(leaf.name)
        return NodeScore(path.e_path, labels, leaves)
    raise TypeError(f"cannot score node {node!r}")


def _exec_star(node: m.AdtNode, state: Optional["ScenarioState"], ac_maj: str) -> float:
    """Max-min over the execution subtree with each leaf conditioned by ac_maj.

    A nested SAND inside the execution subtree scores as its own independent
    path; the outer family's label does not cross that boundary.
    """
    if isinstance(node, m.Leaf):
        conditioned = condition_execution(
            m.worst_case_candidate(node).vector, ac_maj, _leaf_transforms(state, node))
        return exploitability(conditioned)
    if isinstance(node, (m.OrNode, m.AndNode)):
        pick = max if isinstance(node, m.OrNode) else min
        return pick(_exec_star(child, state, ac_maj) for child in node.children)
    if isinstance(node, m.SandNode):
        return score_sand(node, state).e_path
    raise TypeError(f"cannot score node {node!r}")


def score_sand(sand: m.SandNode, state: Optional["ScenarioState"] = None) -> PathScore:
    """E(P), AC_maj, E(V*) and their bottleneck for one SAND node."""
    pre_score = score_node(sand.pre, state)
    ac_maj = majority_ac(pre_score.ac_labels)
    e_exec_star = _exec_star(sand.execution, state, ac_maj)
    return PathScore(
        branch=sand.name or "sand",
        e_pre=pre_score.e,
        ac_maj=ac_maj,
        e_exec_star=e_exec_star,
        e_path=min(pre_score.e, e_exec_star),
    )


def score_branch(goal: m.Goal, node: m.AdtNode,
                 state: Optional["ScenarioState"] = None, index: int = 0) -> PathScore:
    """Score one top-level branch and close it with the goal's impact."""
    if isinstance(node, m.SandNode):
        path = score_sand(node, state)
    else:
        node_score = score_node(node, state)
        # Branches without any SAND still report a family-style majority
        # label over their own leaves; a buried SAND makes the cell moot.
        ac = None if m.contains_sand(node) else majority_ac(node_score.ac_labels)
        path = PathScore(branch="", e_pre=None, ac_maj=ac,
                         e_exec_star=None, e_path=node_score.e)
    path.branch = m.branch_name(node, index)
    path.triple = goal.impact
    path.impact = impact_subscore(goal.impact)
    path.base, path.severity = base_score(path.e_path, goal.impact)
    return path


def score_branches(goal: m.Goal, state: Optional["ScenarioState"] = None) -> list:
    """One PathScore per top-level alternative of the goal."""
    return [score_branch(goal, node, state, i) for i, node in enumerate(m.branches(goal))]


def score_goal(goal: m.Goal, state: Optional["ScenarioState"] = None) -> PathScore:
    """Whole-goal score: the easiest branch closed with the goal's impact."""
    path = score_branch(goal, goal.child, state, 0)
    path.branch = goal.name
    return path
