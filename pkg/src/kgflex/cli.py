"""Command line entry point: ``kgflex <stage> --config PATH [--override key=value ...]``.

Each subcommand runs the pipeline up to and including its stage. Exit codes:
0 success, 1 config error, 2 stage failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .pipeline import ConfigError, PipelineConfig, StageError, load_config, run_pipeline

COMMANDS = {
    "run": "evaluate",
    "extract": "extract",
    "weights": "weigh",
    "train": "train",
    "recommend": "recommend",
    "evaluate": "evaluate",
}


def config_from_manifest(path: Path, overrides=()) -> PipelineConfig:
    """Rebuild the exact config of an earlier run from its ``manifest.json``."""
    from .pipeline import validate_config
    cfg = json.loads(path.read_text(encoding="utf-8"))["config"]
    lines = []
    for k, v in cfg.items():
        if v is not None:
            lines.append(f"{k} = {json.dumps(v)}")
    return validate_config("\n".join(lines), path.parent, overrides)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgflex", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, stage in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the pipeline through the {stage!r} stage")
        p.add_argument("--config", required=True, type=Path,
                       help="flat TOML config, or a manifest.json from a previous run")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.config.suffix == ".json":
            cfg = config_from_manifest(args.config, args.override)
        else:
            cfg = load_config(args.config, args.override)
    except (ConfigError, OSError, KeyError, json.JSONDecodeError) as err:
        print(f"kgflex: {err}", file=sys.stderr)
        return 1
    try:
        state = run_pipeline(cfg, COMMANDS[args.command])
    except StageError as err:
        print(f"kgflex: {err}", file=sys.stderr)
        return 2
    for rep in state.reports or ():
        for name, cutoff, value in rep.records():
            print(f"{name}@{cutoff}\t{value:.6f}")
    print(f"artifacts written to {cfg.output_dir}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
