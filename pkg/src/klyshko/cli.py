"""Command-line experiment runner.

Subcommands: ``run <scenario|config>``, ``validate <config>``,
``list-scenarios``, ``export <field-file> --pgm <out>``.  Exit codes:
0 success, 2 configuration error, 3 internal assertion failure.
The default output root comes from ``--output`` or ``$KLYSHKO_OUTPUT_ROOT``.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import validate_config
from .errors import ConfigurationError, KlyshkoError
from .fieldio import load_field, save_pgm
from .scenarios import ScenarioAssertionError, list_scenarios, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSERTION = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="klyshko",
        description="Counter-propagating-beacon wave-optics experiment runner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a named scenario or a TOML config")
    run.add_argument("scenario", help="scenario name or path to a config file")
    run.add_argument(
        "--output",
        default=os.environ.get("KLYSHKO_OUTPUT_ROOT"),
        help="output root directory (default: config's run.output_dir or $KLYSHKO_OUTPUT_ROOT)",
    )
    run.add_argument("--threads", type=int, default=1, help="worker threads (results identical)")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config", help="path to a TOML config file")

    sub.add_parser("list-scenarios", help="list built-in scenario names")

    exp = sub.add_parser("export", help="convert a raw field file to a PGM preview")
    exp.add_argument("field_file", help="path to a raw field file")
    exp.add_argument("--pgm", required=True, help="output PGM path")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            manifest = run_scenario(args.scenario, args.output, args.threads)
            for a in manifest.assertions:
                print(f"[{'PASS' if a['ok'] else 'FAIL'}] {a['name']}: {a['detail']}")
            print(f"{manifest.scenario}: {len(manifest.artifacts)} artifacts written")
            return EXIT_OK
        if args.command == "validate":
            report = validate_config(args.config)
            print(report)
            return EXIT_OK if report.ok() else EXIT_CONFIG
        if args.command == "list-scenarios":
            for name in list_scenarios():
                print(name)
            return EXIT_OK
        if args.command == "export":
            save_pgm(load_field(args.field_file), args.pgm)
            print(f"wrote {args.pgm}")
            return EXIT_OK
        raise AssertionError(f"unhandled command {args.command!r}")
    except ScenarioAssertionError as exc:
        print(f"assertion failure: {exc}", file=sys.stderr)
        return EXIT_ASSERTION
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except KlyshkoError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
