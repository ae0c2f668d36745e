"""Attack-defense tree risk scoring.

Trees combine attacker steps with OR (easiest alternative), AND (hardest
requirement) and SAND (preconditions strictly before execution).  Leaves
carry CVSS v3.1 exploitability vectors; goals carry the impact triple.
Defense scenarios reshape leaf vectors and get rescored and ranked against
an ordinal cost scale.
"""

from .cvss import (ImpactTriple, MetricVector, base_score, exploitability,
                   impact_subscore, isc_base, roundup, severity)
from .diagnostics import Diagnostic, SourceSpan, has_errors
from .dsl import ParseResult, model_to_json, parse, parse_file, serialize
from .engine import (NodeScore, PathScore, condition_execution, majority_ac,
                     score_branch, score_branches, score_goal, score_node,
                     score_sand)
from .model import (AndNode, Control, CveRef, Goal, Leaf, Model, OrNode,
                    SandNode, Scenario, Transform, validate)
from .oracle import (AttackPathSet, OracleBoundError, brute_force_score,
                     enumerate_paths)
from .report import (export_dot, render_score_table, render_treatment_table)
from .treatment import (ScenarioState, TreatmentError, TreatmentReport,
                        apply_transform, baseline_report, build_state,
                        compare_scenarios, evaluate_scenario)

__version__ = "0.1.0"

__all__ = [
    "AndNode", "AttackPathSet", "Control", "CveRef", "Diagnostic", "Goal",
    "ImpactTriple", "Leaf", "MetricVector", "Model", "NodeScore",
    "OracleBoundError", "OrNode", "ParseResult", "PathScore", "SandNode",
    "Scenario", "ScenarioState", "SourceSpan", "Transform", "TreatmentError",
    "TreatmentReport", "apply_transform", "base_score", "baseline_report",
    "brute_force_score", "build_state", "compare_scenarios",
    "condition_execution", "enumerate_paths", "evaluate_scenario",
    "exploitability", "export_dot", "has_errors", "impact_subscore",
    "isc_base", "majority_ac", "model_to_json", "parse", "parse_file",
    "render_score_table", "render_treatment_table", "roundup", "score_branch",
    "score_branches", "score_goal", "score_node", "score_sand", "serialize",
    "severity", "validate",
]
