"""
Simulation commands: sim, check, recipe and sweep.
"""

import argparse
from pathlib import Path

from pydantic import ValidationError

from ..core.exceptions import (
    EXIT_NOT_SERIALIZABLE,
    EXIT_OK,
    ConfigError,
    RecipeFailed,
)
from ..core.logging import get_logger
from ..models.history import export_history, load_history
from ..services.pipeline import get_pipeline_service
from ..services.recipes import RECIPES, run_recipe, sweep
from ..services.serializability import check
from .output import emit, read_file, write_file

logger = get_logger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sim", help="Run a scenario and export its history")
    parser.add_argument("scenario", type=Path)
    parser.add_argument("--contracts", type=Path, help="Contract source directory (corpus by default)")
    parser.add_argument("--out", type=Path, help="Write the history JSON here instead of stdout")
    parser.set_defaults(handler=sim_command)

    parser = subparsers.add_parser("check", help="Decide whether a history is serializable")
    parser.add_argument("history", type=Path)
    parser.add_argument("--bound", type=int, help="Max spans for the permutation oracle")
    parser.add_argument(
        "--fallback-graph",
        action=argparse.BooleanOptionalAction,
        default=True,
        help="Fall back to conflict-graph acyclicity above the bound",
    )
    parser.set_defaults(handler=check_command)

    parser = subparsers.add_parser("recipe", help="Run a bundled end-to-end recipe")
    parser.add_argument("name", nargs="?", help="Recipe name")
    parser.add_argument("--list", action="store_true", help="List the bundled recipes")
    parser.add_argument("--out", type=Path, help="Also write the recipe history JSON here")
    parser.set_defaults(handler=recipe_command)

    parser = subparsers.add_parser("sweep", help="Check random schedules over the transformed corpus")
    parser.add_argument("--count", type=int, default=200, help="Number of schedules")
    parser.add_argument("--start-seed", type=int, help="First seed (global --seed, else 0)")
    parser.set_defaults(handler=sweep_command)


def sim_command(args: argparse.Namespace) -> int:
    scenario, history = get_pipeline_service().simulate_file(
        args.scenario, args.contracts, args.seed
    )
    text = export_history(history)
    if args.out:
        write_file(args.out, text)
        committed = sum(1 for e in history.events() if e.committed)
        emit(
            args,
            {"scenario": scenario.name, "seed": scenario.seed, "spans": len(history.spans), "out": str(args.out)},
            f"{scenario.name}: {len(history.spans)} spans, {committed} committed events -> {args.out}",
        )
    else:
        # the history document is the output in both modes
        print(text)
    return EXIT_OK


def check_command(args: argparse.Namespace) -> int:
    if args.bound is not None and args.bound <= 0:
        raise ConfigError("--bound must be positive")
    try:
        history = load_history(read_file(args.history))
    except ValidationError as e:
        raise ConfigError(f"invalid history {args.history}: {e.error_count()} validation errors")

    verdict = check(history, args.bound, args.fallback_graph)
    if verdict.serializable:
        text = f"serializable ({verdict.method}): {' -> '.join(verdict.witness_order or [])}"
    else:
        cycle = ", ".join(
            f"{e.source}-{e.kind.value}->{e.target} on {e.attribute}" for e in verdict.conflict_cycle or []
        )
        text = f"not serializable ({verdict.method})" + (f": cycle {cycle}" if cycle else "")
    emit(args, verdict.to_json(), text)
    return EXIT_OK if verdict.serializable else EXIT_NOT_SERIALIZABLE


def recipe_command(args: argparse.Namespace) -> int:
    if args.list:
        emit(
            args,
            [{"name": r.name, "description": r.description} for r in RECIPES.values()],
            "\n".join(f"{r.name:24} {r.description}" for r in RECIPES.values()),
        )
        return EXIT_OK
    if not args.name:
        raise ConfigError("recipe name required (see `txsc recipe --list`)")

    try:
        report, history = run_recipe(args.name, args.seed)
    except RecipeFailed as e:
        if e.report is not None:
            emit(args, e.report.to_json(), _recipe_text(e.report))
        raise
    if args.out:
        write_file(args.out, export_history(history))
    emit(args, report.to_json(), _recipe_text(report))
    return EXIT_OK


def _recipe_text(report) -> str:
    lines = [
        f"recipe {report.recipe} (seed {report.seed}, "
        f"{'transformed' if report.transformed else 'original'}): "
        f"serializable={report.verdict.serializable}"
    ]
    for assertion in report.assertions:
        mark = "ok  " if assertion.passed else "FAIL"
        lines.append(f"  {mark} {assertion.name}" + (f" ({assertion.detail})" if assertion.detail and not assertion.passed else ""))
    for address, changes in sorted(report.deltas.items()):
        for name, (before, after) in sorted(changes.items()):
            lines.append(f"  {address}.{name}: {before} -> {after}")
    return "\n".join(lines)


def sweep_command(args: argparse.Namespace) -> int:
    if args.count <= 0:
        raise ConfigError("--count must be positive")
    start = args.start_seed if args.start_seed is not None else (args.seed or 0)
    results = sweep(args.count, start)
    failures = [r for r in results if not r.serializable or r.set_violations]
    emit(
        args,
        {
            "count": len(results),
            "startSeed": start,
            "failures": [r.to_json() for r in failures],
        },
        f"{len(results)} schedules from seed {start}: {len(failures)} failures"
        + "".join(f"\n  seed {r.seed}: serializable={r.serializable} {r.set_violations}" for r in failures),
    )
    return EXIT_OK if not failures else EXIT_NOT_SERIALIZABLE
