"""Command line entry point: ``nchhs run|sweep|stability|diagnose``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .config import ConfigError, SimConfig, parse_config
from .coupled import run_coupled
from .fieldio import FieldFormatError
from .linalg import SolverError

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("nchhs")


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--out", type=Path, help="output directory (default: run.output_dir)")
    common.add_argument("--threads", type=int, default=None,
                        help="worker threads for sweeps (default: $NCHHS_THREADS or 1)")
    common.add_argument("--quiet", action="store_true", help="only report errors")

    p = argparse.ArgumentParser(prog="nchhs", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="integrate one configuration")
    sw = sub.add_parser("sweep", parents=[common], help="convergence table over one parameter")
    sw.add_argument("--axis", choices=ex.AXES, required=True)
    sw.add_argument("--values", type=_floats, required=True, help="e.g. 0.1,0.05,0.025")
    st = sub.add_parser("stability", parents=[common], help="perturbed-initial-data gap study")
    st.add_argument("--deltas", type=_floats, default=[1e-2, 1e-3, 1e-4])
    st.add_argument("--norm", choices=("l2", "vprime"), default=None)
    dg = sub.add_parser("diagnose", parents=[common], help="statistics of saved field snapshots")
    dg.add_argument("fields", nargs="+", type=Path)
    return p


def _config(args) -> SimConfig:
    if args.config is None:
        if args.command == "diagnose":
            return None
        raise ConfigError(["--config is required"])
    text = args.config.read_text()    # unreadable file: I/O error, not a config error
    return parse_config(text, base_dir=args.config.parent)


def _out_dir(args, cfg: SimConfig) -> Path:
    if args.out is not None:
        return args.out
    base = args.config.parent if args.config is not None else Path.cwd()
    return base / cfg.output_dir


def _write_report(out: Path, name: str, text: str, ok: bool = True) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return ex._write_text(out / name, text, ok)


def cmd_run(args, cfg: SimConfig) -> int:
    traj = run_coupled(cfg)
    ex.fill_holder(traj)
    ex.write_trajectory(cfg, traj, _out_dir(args, cfg))
    if not args.quiet and traj.records:
        last = traj.records[-1]
        print(" ".join(f"{k}={ex._fmt(v)}" for k, v in zip(last.columns(), last.row())))
    if traj.status != "ok":
        log.error("run stopped: %s", traj.error)
        return EXIT_SOLVER
    return EXIT_OK


def cmd_sweep(args, cfg: SimConfig) -> int:
    res = ex.sweep(cfg, args.axis, args.values, threads=args.threads)
    ok = all(r.status == "ok" for r in res.rows)
    out = _out_dir(args, cfg)
    _write_report(out, f"sweep_{args.axis}.csv", res.csv(), ok)
    _write_report(out, f"sweep_{args.axis}.txt", res.summary() + "\n", ok)
    if not args.quiet:
        print(res.summary())
    return EXIT_OK if ok else EXIT_SOLVER


def cmd_stability(args, cfg: SimConfig) -> int:
    try:
        res = ex.stability(cfg, args.deltas, threads=args.threads, norm=args.norm)
    except RuntimeError as err:
        log.error("%s", err)
        return EXIT_SOLVER
    out = _out_dir(args, cfg)
    _write_report(out, "stability.csv", res.csv())
    _write_report(out, "stability.txt", res.summary() + "\n")
    if not args.quiet:
        print(res.summary())
    return EXIT_OK


def cmd_diagnose(args, cfg: SimConfig | None) -> int:
    text = ex.diagnose_text(ex.diagnose(args.fields, cfg))
    if args.out is not None:
        _write_report(args.out, "diagnose.txt", text)
    if not args.quiet:
        print(text, end="")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "stability": cmd_stability, "diagnose": cmd_diagnose}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.threads is None:
        args.threads = ex.default_threads()
    try:
        cfg = _config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as err:
        for msg in err.errors:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as err:
        # scenario-level validation (initial data, sweep values) is a configuration problem
        if isinstance(err, FieldFormatError):
            print(f"i/o error: {err}", file=sys.stderr)
            return EXIT_IO
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as err:
        print(f"solver failure: {err}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
