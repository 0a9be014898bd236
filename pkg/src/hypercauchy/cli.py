"""Batch driver: ``hypercauchy --config experiment.ini [--out-dir DIR]``.

Config format (INI)::

    [experiment]
    kind = solve          # solve, family, breakdown, lifetime, moser,
                          # commutator, dm_demo, geometry, causal or all
    name = advection      # optional prefix for output files (default: kind)

    [parameters]
    modes = 64
    ...

Exit codes: 0 when every check passes, 1 when a check fails, 2 on a missing
or malformed config.  Outputs are ``<name>_<table>.csv`` files plus
``<name>_summary.txt``; with ``--no-timestamp`` they are byte-identical
across runs.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import datetime
import io
import sys
from pathlib import Path

from .experiments import RUNNERS, ConfigError, Outcome, parse_parameters

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

SECTIONS = {"experiment": {"kind", "name"}, "parameters": None}


def load_config(path) -> tuple[str, str, dict]:
    """Read and structurally validate a config file; returns (kind, name, raw parameters)."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigError(f"malformed config {path}: {err}") from None
    extra = sorted(set(parser.sections()) - set(SECTIONS))
    if extra:
        raise ConfigError(f"unknown section(s): {', '.join(extra)}")
    if not parser.has_section("experiment") or not parser.has_option("experiment", "kind"):
        raise ConfigError("config needs [experiment] with a kind")
    unknown = sorted(set(parser["experiment"]) - SECTIONS["experiment"])
    if unknown:
        raise ConfigError(f"unknown key(s) in [experiment]: {', '.join(unknown)}")
    kind = parser["experiment"]["kind"].strip()
    name = parser["experiment"].get("name", kind).strip()
    if not name or any(c in name for c in "/\\"):
        raise ConfigError(f"invalid output name {name!r}")
    raw = dict(parser["parameters"]) if parser.has_section("parameters") else {}
    return kind, name, raw


def _csv_text(header, rows, stamp: str | None) -> str:
    buf = io.StringIO()
    if stamp:
        buf.write(f"# generated {stamp}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def write_outputs(outcome: Outcome, name: str, out_dir: Path, stamp: str | None) -> list:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for table, (header, rows) in outcome.tables.items():
        path = out_dir / f"{name}_{table}.csv"
        path.write_text(_csv_text(header, rows, stamp))
        written.append(path)
    for label, text in outcome.texts.items():
        path = out_dir / f"{name}_{label}.txt"
        path.write_text(text)
        written.append(path)
    summary = [f"# generated {stamp}"] if stamp else []
    summary += [f"experiment {outcome.kind}: {'PASS' if outcome.passed else 'FAIL'}", *outcome.lines]
    path = out_dir / f"{name}_summary.txt"
    path.write_text("\n".join(summary) + "\n")
    written.append(path)
    return written


def run(config_path, out_dir=".", timestamp: bool = True, seed: int | None = None, quiet: bool = False) -> int:
    """Execute one config; returns the exit code."""
    try:
        kind, name, raw = load_config(config_path)
        params = parse_parameters(kind, raw, seed)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        outcome = RUNNERS[kind](params)
    except ValueError as err:
        # raised by the library on parameters it cannot honour
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds") if timestamp else None
    write_outputs(outcome, name, Path(out_dir), stamp)
    if not quiet:
        print(f"{kind}: {'PASS' if outcome.passed else 'FAIL'}")
        for line in outcome.lines:
            print("  " + line)
    return EXIT_PASS if outcome.passed else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hypercauchy", description="Run a hypercauchy experiment config.")
    p.add_argument("--config", required=True, help="path to the INI experiment config")
    p.add_argument("--out-dir", default=".", help="directory for CSV and summary outputs")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--quiet", action="store_true", help="suppress the summary on stdout")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return run(args.config, args.out_dir, not args.no_timestamp, args.seed, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
