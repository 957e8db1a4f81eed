"""Command line entry point: ``walsh-floquet <experiment> [options]``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .experiments import EXPERIMENTS, ConfigError, ExperimentConfig, run


def _parse_override(text: str) -> tuple[str, object]:
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"override must look like key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="walsh-floquet", description="Floquet basis comparison sweeps")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} sweep")
        p.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
        p.add_argument("--out", help="output directory")
        p.add_argument("--workers", type=int, help="process pool size")
        p.add_argument(
            "--override", action="append", default=[], type=_parse_override, metavar="KEY=VALUE",
            help="set a config field; VALUE is parsed as JSON when possible",
        )
    return parser


def load_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
    data["experiment"] = args.experiment
    data.update(dict(args.override))
    if args.out is not None:
        data["out"] = args.out
    if args.workers is not None:
        data["workers"] = args.workers
    return ExperimentConfig.from_mapping(data)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args)
    except ConfigError as exc:
        parser.error(str(exc))
    result = run(cfg)
    failed = result.manifest["failed_rows"]
    print(f"wrote {result.csv_path} ({len(result.rows)} rows) and {result.manifest_path}")
    if failed:
        print(f"warning: {failed} rows flagged with solver errors", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
