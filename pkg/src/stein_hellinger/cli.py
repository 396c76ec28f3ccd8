"""Command-line entry point: ``stein-hellinger {bound,sweep,verify,tail}``.

Exit codes: 0 success, 1 verification failure (or failed simulation), 2 bad
configuration.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

from . import config as C
from . import experiments as E
from .concentration import rows_to_csv
from .errors import ConfigError, SteinHellingerError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _parser():
    p = argparse.ArgumentParser(prog="stein-hellinger",
                                description="Hellinger-to-Gaussian bounds for U-statistics.")
    p.add_argument("command", choices=("bound", "sweep", "verify", "tail"))
    p.add_argument("--config", help="JSON experiment config (defaults to the packaged one)")
    p.add_argument("--out", help="directory for CSV/JSON/SVG outputs")
    p.add_argument("--svg", action="store_true", help="also render SVG figures (needs --out)")
    p.add_argument("--only", help="verify: run a single module's properties")
    p.add_argument("--seed", type=int, help="override the config seed")
    return p


def _out_dir(args):
    if args.out is None:
        return None
    os.makedirs(args.out, exist_ok=True)
    return args.out


def _write(out, name, text):
    if out is not None:
        with open(os.path.join(out, name), "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def cmd_bound(cfg, args) -> int:
    reports = [r.to_dict() for r in E.bound_reports(cfg)]
    text = json.dumps(reports, indent=2) + "\n"
    sys.stdout.write(text)
    _write(_out_dir(args), "bound.json", text)
    return EXIT_OK


def cmd_sweep(cfg, args) -> int:
    out = _out_dir(args)
    fh = open(os.path.join(out, "sweep.csv"), "w", encoding="utf-8", newline="") if out else None
    rows = []

    def emit(line):
        sys.stdout.write(line)
        sys.stdout.flush()
        if fh:
            fh.write(line)
            fh.flush()

    try:
        emit(E.sweep_csv_header())
        for n in cfg.n_grid:
            row, _ = E.sweep_row(cfg, n)
            rows.append(row)
            emit(E.sweep_line(row))
    except (SteinHellingerError, ArithmeticError, MemoryError) as exc:
        emit(f"# aborted: {type(exc).__name__}: {exc}\n")
        return EXIT_FAIL
    finally:
        if fh:
            fh.close()
    if args.svg and out:
        from .plotting import sweep_figure
        sweep_figure(rows, os.path.join(out, "sweep.svg"))
    return EXIT_OK if all(r.passed for r in rows) else EXIT_FAIL


def cmd_tail(cfg, args) -> int:
    out = _out_dir(args)
    ok = True
    for n in cfg.n_grid:
        try:
            rows, h = E.tail_rows(cfg, n)
        except (SteinHellingerError, ArithmeticError, MemoryError) as exc:
            sys.stdout.write(f"# aborted at n={n}: {type(exc).__name__}: {exc}\n")
            return EXIT_FAIL
        text = rows_to_csv(rows, comment=f"n={n} h={h!r}")
        sys.stdout.write(text)
        _write(out, f"tail_n{n}.csv", text)
        ok &= all(r.passed for r in rows)
        if args.svg and out:
            from .plotting import tail_figure
            tail_figure(rows, n, os.path.join(out, f"tail_n{n}.svg"))
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(cfg, args) -> int:
    from .verify import run_checks

    lines = []

    def emit(line):
        lines.append(line)
        print(line, flush=True)

    checks = run_checks(cfg, args.only, emit)
    failed = sum(not c.passed for c in checks)
    emit(f"{len(checks) - failed}/{len(checks)} properties passed")
    _write(_out_dir(args), "verify.txt", "\n".join(lines) + "\n")
    return EXIT_OK if failed == 0 else EXIT_FAIL


_COMMANDS = {"bound": cmd_bound, "sweep": cmd_sweep, "verify": cmd_verify, "tail": cmd_tail}


def main(argv: Optional[list] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = C.load(args.config, mode="sweep" if args.command == "sweep" else "any")
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        if args.svg and args.out is None:
            raise ConfigError("--svg needs --out")
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        where = args.config or "default config"
        print(f"error: {where}: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
