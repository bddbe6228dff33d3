"""Command-line front end: run, validate, and list declarative scenarios.

Exit codes: 0 on success, 2 when a scenario fails validation (nothing is
written), 3 when a solver fails (partial outputs are preserved).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .scenario import (
    ScenarioError,
    parse_scenario,
    preset_description,
    preset_names,
    run_scenario,
)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splinerod",
        description="Static and transient analysis of shear- and torsion-free "
        "rods on smooth spline spaces, driven by declarative scenario files.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a scenario file and write its artifacts")
    run_p.add_argument("scenario_file", help="path to the scenario file")
    run_p.add_argument(
        "--override",
        action="append",
        default=[],
        metavar="SECTION.KEY=VALUE",
        help="override one scenario key (repeatable); applied before validation",
    )
    run_p.add_argument(
        "--out", default=".", metavar="DIR", help="output directory (created if missing)"
    )

    sub.add_parser("list-presets", help="list built-in scenario presets")

    val_p = sub.add_parser("validate", help="parse and validate a scenario file")
    val_p.add_argument("scenario_file", help="path to the scenario file")
    return parser


def _load_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioError(f"cannot read {path}: {err.strerror or err}") from None


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list-presets":
        for name in sorted(preset_names()):
            print(f"{name}: {preset_description(name)}")
        return EXIT_OK

    try:
        scenario = parse_scenario(
            _load_text(args.scenario_file),
            overrides=args.override if args.command == "run" else (),
        )
    except ScenarioError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION

    if args.command == "validate":
        print(f"OK: {args.scenario_file} is a valid {scenario.kind} scenario")
        return EXIT_OK

    return run_scenario(scenario, args.out)


if __name__ == "__main__":
    sys.exit(main())
