"""Command-line front end.

Exit status: 0 success, 1 validation failure (a check ran but missed its
target), 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import logging
import sys
import traceback
from pathlib import Path

import yaml

from . import __version__
from .config import TASKS, ConfigError, load_config, parse_config
from .experiments import run_task
from .records import build_record, dump_record, format_csv

__all__ = ["main", "EXIT_OK", "EXIT_VALIDATION", "EXIT_CONFIG", "EXIT_RUNTIME"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3

logger = logging.getLogger("hicontrast")


def _parser():
    p = argparse.ArgumentParser(prog="hicontrast", description="High-contrast scattering experiments.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("--seed-check", action="store_true", help="run the built-in acceptance suite and exit")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="task")
    for task in TASKS:
        s = sub.add_parser(task, help=f"run the {task} task")
        s.add_argument("--config", type=Path, help="YAML experiment file (defaults apply when omitted)")
        s.add_argument("--out", type=Path, default=Path("."), help="output directory (default: current)")
        s.add_argument("--workers", type=int, default=1, help="parallel grid evaluations (default 1)")
    return p


def _provenance(exc):
    """Innermost package module in the traceback, e.g. ``hicontrast.analytic``."""
    module = None
    for frame, _ in traceback.walk_tb(exc.__traceback__):
        name = frame.f_globals.get("__name__", "")
        if name.startswith("hicontrast"):
            module = name
    return module or "hicontrast"


def _load(args):
    if args.config is None:
        return parse_config({"task": args.task})
    cfg = load_config(args.config)
    if cfg.task != args.task:
        raise ConfigError("task", f"file declares {cfg.task!r} but the {args.task!r} subcommand was used")
    return cfg


def _seed_check():
    from .acceptance import run_all

    results = run_all(echo=print)
    failed = [c.number for c in results if not c.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return EXIT_OK if not failed else EXIT_VALIDATION


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.seed_check:
        return _seed_check()
    if args.task is None:
        _parser().print_usage(sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = _load(args)
        if args.workers < 1:
            raise ConfigError("--workers", "must be at least 1")
        out = args.out.resolve()
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / cfg.output.csv
        json_path = out / cfg.output.json
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"config error: output directory: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
                result = run_task(cfg, mapper=pool.map)
        else:
            result = run_task(cfg)
        csv_text = format_csv(result.table)
        record = build_record(cfg, result, {"workers": args.workers})
    except Exception as exc:  # surfaced with provenance, never swallowed
        print(f"runtime error in {_provenance(exc)}: {type(exc).__name__}: {exc}", file=sys.stderr)
        logger.debug("traceback", exc_info=True)
        return EXIT_RUNTIME

    csv_path.write_text(csv_text)
    json_path.write_text(dump_record(record))
    summary = {k: v for k, v in record["results"].items() if not isinstance(v, (dict, list))}
    print(yaml.safe_dump({"task": cfg.task, "csv": str(csv_path), "json": str(json_path), **summary},
                         sort_keys=False).rstrip())
    if not result.passed:
        print("validation failed: see results in the JSON record", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
