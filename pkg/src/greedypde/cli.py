"""Command-line experiment runner.

    greedypde solve --config run.cfg [--preset paper-1d-k1] [--out DIR]
                    [--threads N]
    greedypde validate --config run.cfg

Precedence: preset defaults, then config file values, then flags.  The
thread count (flag or GREEDYPDE_THREADS) is honored for the compiled
kernels' threading layer but never changes numeric results: every
reduction runs in a fixed serial order.
"""

import argparse
import os
import sys
from pathlib import Path

from .config import (ConfigError, RunConfig, parse_config, preset_config,
                     validate_config)
from .experiment import run_experiment

__all__ = ["main"]


def _apply_threads(n):
    if n is None:
        env = os.environ.get("GREEDYPDE_THREADS")
        n = int(env) if env else None
    if n is None:
        return None
    try:
        import numba

        numba.set_num_threads(max(1, n))
    except Exception:
        pass
    return n


def _load_config(args):
    cfg = RunConfig()
    if args.preset:
        cfg = preset_config(args.preset)
    if args.config:
        text = Path(args.config).read_text()
        cfg = parse_config(text, base=cfg)
    return validate_config(cfg)


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="greedypde",
        description="Greedy shallow-network solver for elliptic Dirichlet "
                    "problems with penalized boundary sweeps.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve_p = sub.add_parser("solve", help="run an experiment sweep")
    solve_p.add_argument("--config", help="config file path")
    solve_p.add_argument("--preset", help="named preset (paper-1d-k1, ...)")
    solve_p.add_argument("--out", help="output directory (overrides config)")
    solve_p.add_argument("--threads", type=int, default=None,
                         help="kernel thread count; numeric results do not "
                              "depend on it")

    val_p = sub.add_parser("validate", help="validate a config file")
    val_p.add_argument("--config", required=True, help="config file path")

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            cfg = parse_config(Path(args.config).read_text())
        except ConfigError as exc:
            for diag in exc.diagnostics:
                print(f"error: {diag}", file=sys.stderr)
            return 2
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        print("config ok")
        for key, value in sorted(cfg.as_dict().items()):
            print(f"  {key} = {value}")
        print(f"  (resolved delta = {cfg.resolved_delta()!r})")
        return 0

    # solve
    try:
        cfg = _load_config(args)
    except ConfigError as exc:
        for diag in exc.diagnostics:
            print(f"error: {diag}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _apply_threads(args.threads)
    try:
        result = run_experiment(cfg, out_dir=args.out)
    except Exception as exc:  # partial CSV already flushed by the runner
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    print(result.table_path.read_text())
    print(f"artifacts in {result.out_dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
