#!/usr/bin/env python3
"""Validate experiment configs: every file loads, and every file is canonical JSON.

Loads each ``*.json`` under the config directory through the experiment
schema (unknown keys, wrong types and out-of-range values fail) and checks
the canonical formatting. ``--fix`` rewrites formatting offenders.
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent))

from src.config import CONFIGS_DIR  # noqa: E402
from src.errors import ConfigError  # noqa: E402
from src.harness import load_config  # noqa: E402
from src.utilities import canonicalize_json_file, is_json_canonical  # noqa: E402


def find_config_files(root: Path):
    yield from sorted(root.glob("*.json"))


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--fix",
        action="store_true",
        help="rewrite non-canonical config files in place",
    )
    parser.add_argument(
        "directory",
        nargs="?",
        type=Path,
        default=Path(CONFIGS_DIR),
        help=f"config directory (default: {CONFIGS_DIR})",
    )
    args = parser.parse_args(argv)

    schema_errors: list[tuple[Path, str]] = []
    offenders: list[Path] = []
    fixed: list[Path] = []
    count = 0

    for path in find_config_files(args.directory):
        count += 1
        try:
            text = path.read_text(encoding="utf-8")
            canonical = is_json_canonical(text)
        except (json.JSONDecodeError, OSError) as e:
            schema_errors.append((path, str(e)))
            continue
        try:
            # Environment overrides must not mask a bad file
            load_config(path, environ={})
        except ConfigError as e:
            schema_errors.append((path, str(e)))
        if canonical:
            continue
        if args.fix and canonicalize_json_file(path):
            fixed.append(path)
        elif not args.fix:
            offenders.append(path)

    exit_code = 0

    if schema_errors:
        for path, err in schema_errors:
            print(f"{path}: {err}", file=sys.stderr)
        print(
            f"\n{len(schema_errors)} of {count} config file(s) are invalid.",
            file=sys.stderr,
        )
        exit_code = 1

    if args.fix:
        for path in fixed:
            print(f"reformatted {path}")
        print(f"{len(fixed)} file(s) reformatted.")
    elif offenders:
        for path in offenders:
            print(f"{path}: not canonical JSON", file=sys.stderr)
        print(
            f"\n{len(offenders)} config file(s) are not canonical. "
            "Run `uv run python bin/lint-configs.py --fix`.",
            file=sys.stderr,
        )
        exit_code = 1

    if count == 0:
        print(f"no *.json configs under {args.directory}", file=sys.stderr)
        exit_code = 1
    elif exit_code == 0 and not args.fix:
        print(f"{count} config file(s) load cleanly and are canonical.")
    return exit_code


if __name__ == "__main__":
    sys.exit(main())
