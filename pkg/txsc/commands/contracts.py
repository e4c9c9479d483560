"""
Contract commands: parse, fmt, analyze and transform.
"""

import argparse
import json
from pathlib import Path

from ..core.exceptions import EXIT_OK
from ..core.logging import get_logger
from ..models.ast import node_to_json
from ..services.parser import parse_contract
from ..services.pipeline import get_pipeline_service
from ..services.printer import print_contract
from ..services.transform import load_transform_config
from .output import emit, read_file, write_file

logger = get_logger(__name__)


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("parse", help="Parse a contract and print its AST as JSON")
    parser.add_argument("file", type=Path)
    parser.set_defaults(handler=parse_command)

    parser = subparsers.add_parser("fmt", help="Print a contract in canonical form")
    parser.add_argument("file", type=Path)
    parser.add_argument("-o", "--out", type=Path, help="Write the formatted source here")
    parser.set_defaults(handler=fmt_command)

    parser = subparsers.add_parser("analyze", help="Print read/write sets and classifications")
    parser.add_argument("file", type=Path)
    parser.set_defaults(handler=analyze_command)

    parser = subparsers.add_parser("transform", help="Rewrite transactional functions")
    parser.add_argument("file", type=Path)
    parser.add_argument("--config", type=Path, help="Transform config TOML")
    parser.add_argument("-o", "--out", type=Path, help="Write the transformed source here")
    parser.add_argument("--report", type=Path, help="Write the transform report JSON here")
    parser.set_defaults(handler=transform_command)


def parse_command(args: argparse.Namespace) -> int:
    ast = parse_contract(read_file(args.file))
    emit(args, node_to_json(ast))
    return EXIT_OK


def fmt_command(args: argparse.Namespace) -> int:
    source = print_contract(parse_contract(read_file(args.file)))
    if args.out:
        write_file(args.out, source)
        emit(args, {"written": str(args.out)}, f"Wrote {args.out}")
    else:
        emit(args, {"source": source}, source)
    return EXIT_OK


def analyze_command(args: argparse.Namespace) -> int:
    compiled = get_pipeline_service().compile_file(args.file)
    profiles = [profile.to_json() for profile in compiled.profiles.values()]
    lines = [
        f"{p.function}: {p.classification.value} "
        f"read={p.read_set} write={p.write_set}"
        + (f" external={p.external_calls}" if p.external_calls else "")
        for p in compiled.profiles.values()
    ]
    emit(args, profiles, "\n".join(lines) if lines else "no functions")
    return EXIT_OK


def transform_command(args: argparse.Namespace) -> int:
    config = load_transform_config(args.config)
    compiled = get_pipeline_service().compile_file(args.file, config, apply_transform=True)
    source = print_contract(compiled.transformed)
    report = compiled.report.to_json()
    if args.report:
        write_file(args.report, emit_report_text(report))
    if args.out:
        write_file(args.out, source)
        logger.info(f"Wrote {args.out}")
        emit(args, report, f"Wrote {args.out}: {compiled.report.total_checks} checks, "
             f"{compiled.report.total_shadow_attrs} shadow attributes")
    else:
        emit(args, {"source": source, "report": report}, source)
    return EXIT_OK


def emit_report_text(report: dict) -> str:
    return json.dumps(report, indent=2, ensure_ascii=False) + "\n"
