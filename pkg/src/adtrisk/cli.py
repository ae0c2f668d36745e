"""Command line front end.

Exit codes: 0 success, 1 parse/validation failure, 2 usage problems
(bad flags, unknown goal/scenario/format), 3 engine/oracle mismatch.
Standard output carries only the requested artifact; everything else,
diagnostics included, goes to standard error.
"""

from __future__ import annotations

import argparse
import random
import sys

from . import dsl, oracle, report
from . import model as m
from .engine import score_branch, score_branches, score_node
from .treatment import (ScenarioState, TreatmentError, build_state,
                        compare_scenarios)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_USAGE = 2
EXIT_MISMATCH = 3

DEFAULT_SEED = 1318

_FORMATS = ("table", "csv", "json")


class _UsageError(Exception):
    pass


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="adtrisk",
        description="Score attack-defense trees and compare defense scenarios.")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_model(cmd, help):
        p = sub.add_parser(cmd, help=help)
        p.add_argument("file", help="model file (.adt)")
        return p

    with_model("validate", "parse and validate a model file")

    p = with_model("score", "score every top-level branch of a goal")
    p.add_argument("--goal", required=True)
    p.add_argument("--scenario", help="score under this defense scenario")
    p.add_argument("--format", choices=_FORMATS, default="table")

    p = with_model("treat", "evaluate one defense scenario against the baseline")
    p.add_argument("--goal", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--format", choices=_FORMATS, default="table")

    p = with_model("compare", "rank several defense scenarios")
    p.add_argument("--goal", required=True)
    p.add_argument("--scenarios", required=True, help="comma-separated scenario names")
    p.add_argument("--format", choices=_FORMATS, default="table")

    p = with_model("export-dot", "emit a Graphviz rendering of a goal tree")
    p.add_argument("--goal", required=True)
    p.add_argument("--scenario", help="style leaves hardened by this scenario")
    p.add_argument("-o", "--out", help="write to a file instead of standard output")

    p = with_model("oracle-check", "cross-check the engine against brute force")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--random", type=int, default=0, metavar="K",
                   help="additionally check K randomly generated trees")

    return parser


def _load(path: str) -> m.Model:
    result = dsl.parse_file(path)
    for diagnostic in result.diagnostics:
        print(diagnostic, file=sys.stderr)
    if result.model is None:
        raise _LoadError()
    return result.model


class _LoadError(Exception):
    pass


def _find_goal(model: m.Model, name: str) -> m.Goal:
    goal = model.get_goal(name)
    if goal is None:
        known = ", ".join(g.name for g in model.trees) or "none"
        raise _UsageError(f"unknown goal {name!r} (goals in file: {known})")
    return goal


def _state_for(model: m.Model, goal: m.Goal, name: str) -> ScenarioState:
    scenario = model.scenarios.get(name)
    if scenario is None:
        known = ", ".join(model.scenarios) or "none"
        raise _UsageError(f"unknown scenario {name!r} (scenarios in file: {known})")
    return build_state(model, goal, scenario)


def _cmd_validate(args) -> int:
    result = dsl.parse_file(args.file)
    for diagnostic in result.diagnostics:
        print(diagnostic, file=sys.stderr)
    return EXIT_OK if result.ok else EXIT_INVALID


def _cmd_score(args) -> int:
    model = _load(args.file)
    goal = _find_goal(model, args.goal)
    state = _state_for(model, goal, args.scenario) if args.scenario else None
    sys.stdout.write(report.render_score_table(score_branches(goal, state), args.format))
    return EXIT_OK


def _cmd_treat(args) -> int:
    model = _load(args.file)
    goal = _find_goal(model, args.goal)
    if args.scenario not in model.scenarios:
        raise _UsageError(f"unknown scenario {args.scenario!r}")
    rows = compare_scenarios(model, goal, [args.scenario])
    sys.stdout.write(report.render_treatment_table(rows, args.format))
    return EXIT_OK


def _cmd_compare(args) -> int:
    model = _load(args.file)
    goal = _find_goal(model, args.goal)
    names = [part.strip() for part in args.scenarios.split(",") if part.strip()]
    if not names:
        raise _UsageError("--scenarios needs at least one name")
    missing = [n for n in names if n not in model.scenarios]
    if missing:
        raise _UsageError(f"unknown scenarios: {', '.join(missing)}")
    rows = compare_scenarios(model, goal, names)
    sys.stdout.write(report.render_treatment_table(rows, args.format))
    return EXIT_OK


def _cmd_export_dot(args) -> int:
    model = _load(args.file)
    goal = _find_goal(model, args.goal)
    state = _state_for(model, goal, args.scenario) if args.scenario else None
    dot = report.export_dot(goal, state)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as handle:
                handle.write(dot)
        except OSError as exc:
            print(f"E-IO: cannot write {args.out}: {exc.strerror or exc}", file=sys.stderr)
            return EXIT_INVALID
    else:
        sys.stdout.write(dot)
    return EXIT_OK


def _cmd_oracle_check(args) -> int:
    model = _load(args.file)
    checked = failures = 0

    def check(label: str, engine_value: float, node, transforms) -> None:
        nonlocal checked, failures
        try:
            brute = oracle.brute_force_score(node, transforms)
        except oracle.OracleBoundError as exc:
            print(f"oracle-check: {label}: skipped ({exc})", file=sys.stderr)
            return
        checked += 1
        if brute != engine_value:
            failures += 1
            print(f"oracle-check: MISMATCH at {label}: "
                  f"engine={engine_value!r} oracle={brute!r}", file=sys.stderr)

    for goal in model.trees:
        states = [None]
        for scenario in model.scenarios.values():
            try:
                states.append(build_state(model, goal, scenario))
            except TreatmentError:
                continue  # scenario belongs to another goal
        for index, node in enumerate(m.branches(goal)):
            name = m.branch_name(node, index)
            for state in states:
                label = f"{goal.name}/{name}" + (f"/{state.name}" if state else "")
                engine_value = score_branch(goal, node, state, index).e_path
                check(label, engine_value, node,
                      state.leaf_transforms if state else None)

    rng = random.Random(args.seed)
    for case in range(args.random):
        tree = oracle.random_tree(rng)
        transforms = oracle.random_leaf_transforms(rng, tree)
        for label, active in ((f"random[{case}]", None),
                              (f"random[{case}]/hardened", transforms)):
            state = ScenarioState(name="random", leaf_transforms=active) if active else None
            check(label, score_node(tree, state).e, tree, active)

    print(f"oracle-check: {checked} comparisons, {failures} mismatches",
          file=sys.stderr)
    return EXIT_MISMATCH if failures else EXIT_OK


_COMMANDS = {
    "validate": _cmd_validate,
    "score": _cmd_score,
    "treat": _cmd_treat,
    "compare": _cmd_compare,
    "export-dot": _cmd_export_dot,
    "oracle-check": _cmd_oracle_check,
}


def run(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 0 for --help and 2 for usage problems
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except _LoadError:
        return EXIT_INVALID
    except (_UsageError, TreatmentError, report.ReportError) as exc:
        print(f"adtrisk {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
