"""
Shared output helpers for CLI commands.

Commands print human-readable text by default and a single JSON document
on stdout with the global `--json` flag.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Optional

from ..core.exceptions import ConfigError


def emit(args: argparse.Namespace, payload: Any, text: Optional[str] = None) -> None:
    """Print `payload` as JSON under `--json`, otherwise `text` (JSON when no text is given)."""
    if getattr(args, "json", False) or text is None:
        sys.stdout.write(json.dumps(payload, indent=2, ensure_ascii=False) + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def write_file(path: Path, content: str) -> None:
    try:
        Path(path).write_text(content, encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot write {path}: {e}")


def read_file(path: Path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e}")
