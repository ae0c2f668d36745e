"""Brute-force path evaluator used to cross-check the compositional engine.

The oracle enumerates minimal satisfying leaf-sets and scores each one
directly, on purpose sharing only the metric vocabulary and weight constants
with the engine.  It also houses the seeded random-model generator behind the
differential test.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from typing import NamedTuple, Optional

from . import model as m
from .cvss import (AC_WEIGHTS, AV_WEIGHTS, HARDENING_ORDER, METRICS, PR_WEIGHTS,
                   UI_WEIGHTS, MetricVector, exploitability)

DEFAULT_LEAF_BOUND = 16


class OracleBoundError(Exception):
    """Tree too large to enumerate; raised instead of grinding."""


class PathElement(NamedTuple):
    """One leaf occurrence plus the SAND whose execution side holds it (if any)."""

    leaf: m.Leaf
    sand: Optional[m.SandNode]


@dataclass
class AttackPathSet:
    """Minimal satisfying leaf-sets of one tree."""

    paths: list  # list of lists of PathElement


def _occurrences(node: m.AdtNode) -> int:
    if isinstance(node, m.Leaf):
        return 1
    if isinstance(node, (m.OrNode, m.AndNode)):
        return sum(_occurrences(c) for c in node.children)
    return _occurrences(node.pre) + _occurrences(node.execution)


def _element_key(el: PathElement):
    return (el.leaf.name, id(el.sand) if el.sand is not None else None)


def _enumerate(node: m.AdtNode, sand: Optional[m.SandNode]) -> list:
    if isinstance(node, m.Leaf):
        return [[PathElement(node, sand)]]
    if isinstance(node, m.OrNode):
        out = []
        for child in node.children:
            out.extend(_enumerate(child, sand))
        return out
    if isinstance(node, m.AndNode):
        out = []
        for combo in product(*(_enumerate(c, sand) for c in node.children)):
            merged, seen = [], set()
            for part in combo:
                for el in part:
                    key = _element_key(el)
                    if key not in seen:
                        seen.add(key)
                        merged.append(el)
            out.append(merged)
        return out
    if isinstance(node, m.SandNode):
        # A nested SAND starts its own conditioning context: its pre leaves
        # are unconditioned and its exec leaves answer to it, not to `sand`.
        pre_sets = _enumerate(node.pre, None)
        exec_sets = _enumerate(node.execution, node)
        out = []
        for pre_part, exec_part in product(pre_sets, exec_sets):
            merged, seen = [], set()
            for el in pre_part + exec_part:
                key = _element_key(el)
                if key not in seen:
                    seen.add(key)
                    merged.append(el)
            out.append(merged)
        return out
    raise TypeError(f"cannot enumerate {node!r}")


def enumerate_paths(node: m.AdtNode, bound: int = DEFAULT_LEAF_BOUND) -> AttackPathSet:
    """All minimal satisfying leaf-sets, pre/exec roles recorded per element."""
    count = _occurrences(node)
    if count > bound:
        raise OracleBoundError(f"{count} leaf occurrences exceed the bound of {bound}")
    raw = _enumerate(node, None)
    keyed = [(frozenset(_element_key(el) for el in path), path) for path in raw]
    keyed.sort(key=lambda kp: len(kp[0]))
    kept = []
    for key, path in keyed:
        if any(other < key for other, _ in kept):
            continue
        kept.append((key, path))
    return AttackPathSet(paths=[path for _, path in kept])


# Leaf scoring, written separately from the engine's walk on purpose.

def _pick_candidate(leaf: m.Leaf) -> m.CveRef:
    best = None
    best_key = None
    for cve in leaf.candidates:
        key = (exploitability(cve.vector), 1 if cve.vector.ac == "L" else 0)
        if best_key is None or key > best_key:
            best_key, best = key, cve
    if best is None:
        raise ValueError(f"leaf {leaf.name} has no candidates")
    return best


def _apply(vector: MetricVector, transforms: Optional[dict]) -> MetricVector:
    if not transforms:
        return vector
    v = vector
    for metric in METRICS:
        t = transforms.get(metric)
        if t is not None and v.get(metric) == t.frm:
            v = v.replace(metric, t.to)
    return v


def _family_ac(sand: m.SandNode, transforms_by_leaf: dict) -> str:
    labels = []
    stack = [sand.pre]
    while stack:
        node = stack.pop()
        if isinstance(node, m.Leaf):
            v = _apply(_pick_candidate(node).vector, transforms_by_leaf.get(node.name))
            labels.append(v.ac)
        elif isinstance(node, (m.OrNode, m.AndNode)):
            stack.extend(node.children)
        else:
            stack.extend((node.pre, node.execution))
    low = labels.count("L")
    return "L" if low > len(labels) - low else "H"


def _condition(vector: MetricVector, ac_maj: str, transforms: Optional[dict]) -> MetricVector:
    v = _apply(vector, transforms)
    if transforms and "AC" in transforms:
        ac = "H" if (ac_maj == "H" or v.ac == "H") else "L"
    else:
        ac = ac_maj
    return v.replace("AC", ac)


def brute_force_score(node: m.AdtNode, leaf_transforms: Optional[dict] = None,
                      bound: int = DEFAULT_LEAF_BOUND) -> float:
    """Max over enumerated paths of the min element exploitability."""
    transforms_by_leaf = leaf_transforms or {}
    families = {}
    best = None
    for path in enumerate_paths(node, bound).paths:
        worst = None
        for el in path:
            t = transforms_by_leaf.get(el.leaf.name)
            base = _pick_candidate(el.leaf).vector
            if el.sand is None:
                e = exploitability(_apply(base, t))
            else:
                key = id(el.sand)
                if key not in families:
                    families[key] = _family_ac(el.sand, transforms_by_leaf)
                e = exploitability(_condition(base, families[key], t))
            if worst is None or e < worst:
                worst = e
        if best is None or worst > best:
            best = worst
    if best is None:
        raise ValueError("tree has no satisfying paths")
    return best


# Random instances for the differential test.  Parameters are deliberately
# small: depth <= 4, fanout <= 3, SAND probability 0.3, at most 12 leaves.

AV_VALUES = tuple(AV_WEIGHTS)
AC_VALUES = tuple(AC_WEIGHTS)
PR_VALUES = tuple(PR_WEIGHTS)
UI_VALUES = tuple(UI_WEIGHTS)


def random_vector(rng: random.Random) -> MetricVector:
    return MetricVector(rng.choice(AV_VALUES), rng.choice(AC_VALUES),
                        rng.choice(PR_VALUES), rng.choice(UI_VALUES))


def random_tree(rng: random.Random, max_depth: int = 4, max_fanout: int = 3,
                sand_p: float = 0.3, max_leaves: int = 12) -> m.AdtNode:
    counter = [0]

    def leaf() -> m.Leaf:
        counter[0] += 1
        n = counter[0]
        candidates = [m.CveRef(id=f"CVE-2024-{10000 + n * 10 + i}", vector=random_vector(rng))
                      for i in range(rng.randint(1, 2))]
        return m.Leaf(name=f"L{n}", candidates=candidates)

    def build(depth: int, budget: int) -> tuple:
        if depth == 0 or budget < 2 or rng.random() < 0.25:
            return leaf(), 1
        roll = rng.random()
        if roll < sand_p:
            pre, used_pre = build(depth - 1, budget - 1)
            execution, used_exec = build(depth - 1, budget - used_pre)
            return m.SandNode(pre=pre, execution=execution), used_pre + used_exec
        cls = m.OrNode if roll < sand_p + (1.0 - sand_p) / 2 else m.AndNode
        fanout = min(rng.randint(2, max_fanout), budget)
        children, used = [], 0
        for i in range(fanout):
            slots_left = fanout - i - 1
            child, u = build(depth - 1, budget - used - slots_left)
            children.append(child)
            used += u
        return cls(children=children), used

    node, _ = build(max_depth, max_leaves)
    if isinstance(node, m.Leaf):
        node = m.OrNode(children=[node, leaf()])
    return node


def random_leaf_transforms(rng: random.Random, node: m.AdtNode) -> dict:
    """Random hardening transforms for a subset of leaves, merged per metric."""
    out = {}
    for leaf in m.leaf_definitions(node):
        if rng.random() < 0.5:
            continue
        merged = {}
        for metric in rng.sample(METRICS, rng.randint(1, 2)):
            ladder = HARDENING_ORDER[metric]
            i = rng.randrange(len(ladder) - 1)
            j = rng.randrange(i + 1, len(ladder))
            merged[metric] = m.Transform(metric=metric, frm=ladder[i], to=ladder[j])
        if merged:
            out[leaf.name] = merged
    return out


def shrink_transforms(rng: random.Random, leaf_transforms: dict) -> dict:
    """Random subset of a transform map; pairs with the original for monotonicity."""
    out = {}
    for name, merged in leaf_transforms.items():
        if rng.random() < 0.4:
            continue
        keep = {metric: t for metric, t in merged.items() if rng.random() < 0.7}
        if keep:
            out[name] = keep
    return out
