"""Command-line entry points.

Subcommands: run, sweep, diagonalize, entpower, report.  Exit codes:
0 success, 2 configuration/schema error, 3 runtime failure.  The
SPINVQE_WORKERS environment variable sizes the restart worker pool.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..errors import ConfigurationError, ValidationError
from .config import config_from_dict, load_config
from .runner import (diagonalize_to_dict, entpower_sweep, layer_sweep, report,
                     run_experiment)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _load_raw(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigurationError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config is not valid JSON: {exc}") from exc


def _cmd_run(args) -> int:
    raw = _load_raw(args.config)
    cfg = config_from_dict(raw)
    record = run_experiment(cfg, raw_config=raw)
    agg = {"output_dir": cfg.output_dir,
           "n_restarts": len(record.restarts),
           "n_failed": sum(1 for r in record.restarts if r.failed)}
    print(json.dumps(agg))
    return EXIT_OK


def _cmd_sweep(args) -> int:
    raw = _load_raw(args.config)
    cfg = config_from_dict(raw)
    records = layer_sweep(cfg, raw_config=raw)
    print(json.dumps({"output_dir": cfg.output_dir,
                      "layer_counts": [r.layers for r in records]}))
    return EXIT_OK


def _cmd_diagonalize(args) -> int:
    kw = {}
    if args.model == "heisenberg":
        kw["J"] = args.J
    else:
        kw["J_z"] = args.J_z
        kw["h_x"] = args.h_x
    out = diagonalize_to_dict(args.model, args.n, args.k, **kw)
    text = json.dumps(out, indent=2)
    if args.output:
        Path(args.output).write_text(text + "\n")
        print(f"wrote {args.output}")
    else:
        print(text)
    return EXIT_OK


def _cmd_entpower(args) -> int:
    raw = _load_raw(args.config)
    cfg = config_from_dict(raw)
    rows = entpower_sweep(cfg)
    print(json.dumps({"output_dir": cfg.output_dir, "n_rows": len(rows) - 1}))
    return EXIT_OK


def _cmd_report(args) -> int:
    out = report(args.run_dir)
    print(json.dumps(out))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spinvqe",
        description="Symmetry-aware VQE/SSVQE experiments on spin chains")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one experiment config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="execute a layer sweep config")
    p.add_argument("config")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("diagonalize", help="labeled exact spectrum")
    p.add_argument("--model", choices=["heisenberg", "ising"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--J", type=float, default=1.0)
    p.add_argument("--J-z", dest="J_z", type=float, default=1.0)
    p.add_argument("--h-x", dest="h_x", type=float, default=1.0)
    p.add_argument("--output", default=None)
    p.set_defaults(func=_cmd_diagonalize)

    p = sub.add_parser("entpower", help="entangling power over a layer list")
    p.add_argument("config")
    p.set_defaults(func=_cmd_entpower)

    p = sub.add_parser("report", help="per-iteration series from stored traces")
    p.add_argument("run_dir")
    p.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
