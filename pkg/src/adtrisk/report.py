"""Table rendering and DOT export.

Renderers format what the engine and treatment layers already computed;
nothing here rescored anything.  Three tabular formats share one row model
so their numeric cells cannot drift apart.
"""

from __future__ import annotations

import csv
import io
import json
from typing import Optional

from . import model as m
from .cvss import exploitability
from .engine import PathScore
from .treatment import ScenarioState, TreatmentReport

SCORE_HEADERS = ["Branch", "E_path", "AC_maj", "(C,I,A)", "Base (S:U)"]
TREATMENT_HEADERS = ["ID", "Defense Set", "E(P)", "AC_maj(P)", "E(V*)",
                     "E_path", "Final Base (S:U)", "Cost"]

AC_NAMES = {"L": "Low", "H": "High"}


class ReportError(ValueError):
    """Unknown output format."""


def _fmt_e(value: Optional[float]) -> str:
    return "--" if value is None else f"{value:.2f}"


def _fmt_ac(label: Optional[str]) -> str:
    return AC_NAMES.get(label, "--")


def _fmt_base(score: PathScore) -> str:
    return f"{score.base:.1f} ({score.severity})"


def _fmt_triple(score: PathScore) -> str:
    c, i, a = score.triple.as_tuple()
    return f"({c:.2f}, {i:.2f}, {a:.2f})"


def _fmt_cost(report: TreatmentReport) -> str:
    if report.cost_range is None:
        return "--"
    lo, hi = report.cost_range
    return str(lo) if lo == hi else f"{lo}-{hi}"


def _round(value: Optional[float], places: int) -> Optional[float]:
    return None if value is None else round(value, places)


# Shared plumbing.

def _render_text(headers: list, rows: list) -> str:
    widths = [len(h) for h in headers]
    for row in rows:
        for i, cell in enumerate(row):
            widths[i] = max(widths[i], len(cell))
    lines = []
    for row in [headers, ["-" * w for w in widths]] + rows:
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def _render_csv(headers: list, rows: list) -> str:
    out = io.StringIO()
    writer = csv.writer(out)
    writer.writerow(headers)
    writer.writerows(rows)
    return out.getvalue()


def _dispatch(fmt: str, headers: list, rows: list, records: list) -> str:
    if fmt == "table":
        return _render_text(headers, rows)
    if fmt == "csv":
        return _render_csv(headers, rows)
    if fmt == "json":
        return json.dumps(records, indent=2) + "\n"
    raise ReportError(f"unknown format {fmt!r} (expected table, csv or json)")


# Score tables.

def _score_cells(score: PathScore) -> list:
    return [score.branch, _fmt_e(score.e_path), _fmt_ac(score.ac_maj),
            _fmt_triple(score), _fmt_base(score)]


def _score_record(score: PathScore) -> dict:
    c, i, a = score.triple.as_tuple()
    return {
        "branch": score.branch,
        "e_pre": _round(score.e_pre, 2),
        "ac_maj": score.ac_maj,
        "e_exec_star": _round(score.e_exec_star, 2),
        "e_path": _round(score.e_path, 2),
        "impact": {"c": round(c, 2), "i": round(i, 2), "a": round(a, 2)},
        "impact_subscore": _round(score.impact, 2),
        "base": _round(score.base, 1),
        "severity": score.severity,
    }


def render_score_table(results: list, fmt: str = "table") -> str:
    """One row per scored branch; E two decimals, base one."""
    if not results:
        raise ValueError("no results to render")
    return _dispatch(fmt, SCORE_HEADERS,
                     [_score_cells(s) for s in results],
                     [_score_record(s) for s in results])


# Treatment tables.

def _treatment_cells(report: TreatmentReport) -> list:
    t = report.treated
    defenses = ", ".join(report.controls) if report.controls else "--"
    return [report.scenario, defenses, _fmt_e(t.e_pre), _fmt_ac(t.ac_maj),
            _fmt_e(t.e_exec_star), _fmt_e(t.e_path), _fmt_base(t), _fmt_cost(report)]


def _treatment_record(report: TreatmentReport) -> dict:
    t = report.treated
    lo, hi = report.cost_range if report.cost_range else (None, None)
    return {
        "id": report.scenario,
        "defense_set": list(report.controls),
        "e_pre": _round(t.e_pre, 2),
        "ac_maj": t.ac_maj,
        "e_exec_star": _round(t.e_exec_star, 2),
        "e_path": _round(t.e_path, 2),
        "base": _round(t.base, 1),
        "severity": t.severity,
        "delta_e": round(report.delta_e, 2),
        "cost_min": lo,
        "cost_max": hi,
        "cost_sum": report.cost_sum,
        "detective_notes": list(report.detective_notes),
        "warnings": list(report.warnings),
    }


def render_treatment_table(reports: list, fmt: str = "table") -> str:
    """Baseline row first, then one row per evaluated scenario."""
    if not reports:
        raise ValueError("no reports to render")
    return _dispatch(fmt, TREATMENT_HEADERS,
                     [_treatment_cells(r) for r in reports],
                     [_treatment_record(r) for r in reports])


# DOT export.

_SHAPES = {m.OrNode: "diamond", m.AndNode: "box", m.SandNode: "trapezium"}


def _quote(text: str) -> str:
    # \n stays meaningful inside DOT labels, so only quotes get escaped
    return '"' + text.replace('"', '\\"') + '"'


def _leaf_label(leaf: m.Leaf, state: Optional[ScenarioState]) -> str:
    transforms = state.leaf_transforms.get(leaf.name) if state else None
    vector = m.treated_vector(leaf, transforms)
    e = exploitability(vector)
    return f"{leaf.name}\\n{vector.short_form()}\\nE={e:.2f}"


def export_dot(goal: m.Goal, state: Optional[ScenarioState] = None) -> str:
    """Graphviz digraph of one goal tree, hardened leaves styled apart.

    Leaves referenced from several places render once and collect all the
    incoming edges, which keeps shared precondition families visibly shared.
    """
    ids = {}
    defined = set()
    lines = [
        "digraph adt {",
        "  rankdir=TB;",
        '  node [fontname="Helvetica"];',
    ]

    def node_id(node) -> str:
        key = id(node)
        if key not in ids:
            ids[key] = f"n{len(ids)}"
        return ids[key]

    def emit(node) -> str:
        nid = node_id(node)
        if nid in defined:
            # shared leaf: one definition, many incoming edges
            return nid
        defined.add(nid)
        if isinstance(node, m.Leaf):
            hardened = bool(state and state.leaf_transforms.get(node.name))
            style = ', style="filled,bold", fillcolor="lightgrey"' if hardened else ""
            lines.append(f"  {nid} [shape=ellipse, label={_quote(_leaf_label(node, state))}{style}];")
            return nid
        shape = _SHAPES[type(node)]
        title = type(node).__name__.replace("Node", "").upper()
        label = f"{title}: {node.name}" if node.name else title
        lines.append(f"  {nid} [shape={shape}, label={_quote(label)}];")
        if isinstance(node, m.SandNode):
            pre_id = emit(node.pre)
            exec_id = emit(node.execution)
            lines.append(f'  {nid} -> {pre_id} [label="1:pre"];')
            lines.append(f'  {nid} -> {exec_id} [label="2:exec"];')
        else:
            for child in node.children:
                lines.append(f"  {nid} -> {emit(child)};")
        return nid

    goal_id = node_id(goal)
    lines.append(f"  {goal_id} [shape=doubleoctagon, label={_quote(_goal_label(goal))}];")
    child_id = emit(goal.child)
    lines.append(f"  {goal_id} -> {child_id};")
    lines.extend(_legend())
    lines.append("}")
    return "\n".join(lines) + "\n"


def _goal_label(goal: m.Goal) -> str:
    c, i, a = goal.impact.as_tuple()
    return f"{goal.name}\\nimpact ({c:g}, {i:g}, {a:g})"


def _legend() -> list:
    return [
        "  subgraph cluster_legend {",
        '    label="legend";',
        "    fontsize=10;",
        '    node [fontsize=9];',
        '    l_goal [shape=doubleoctagon, label="goal"];',
        '    l_or [shape=diamond, label="OR"];',
        '    l_and [shape=box, label="AND"];',
        '    l_sand [shape=trapezium, label="SAND"];',
        '    l_leaf [shape=ellipse, label="leaf"];',
        '    l_hard [shape=ellipse, label="hardened", style="filled,bold", fillcolor="lightgrey"];',
        "  }",
    ]
