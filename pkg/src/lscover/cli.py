"""``lscover`` command line.

Exit codes: 0 success, 1 a certification or check failed, 2 configuration
error, 3 infeasible instance, 4 invariant violation or corrupted report.
"""
from __future__ import annotations

import argparse
import sys

from .config import load_config
from .errors import BadParam, ConfigError, InfeasibleInstance, InvariantViolation, ReportCorrupted
from .rng import set_threads

SUBCOMMANDS = {
    "cover-torus": ("torus_cover",),
    "cover-sphere": ("sphere_cover",),
    "setcover": ("setcover_bench",),
    "bounds": ("bound_table", "inequality_suite"),
}

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INVARIANT = 0, 1, 2, 3, 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


def _common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--preset", help="named configuration (fano, disk-torus, bw-table, sphere-caps)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--threads", type=int, help="worker threads; 0 = all cores")
    p.add_argument("--grid-step", type=float, help="certification grid step")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE", help="override a config key")


def build_parser():
    ap = _Parser(prog="lscover", description="Greedy coverings with fractional-cover certificates.")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in SUBCOMMANDS:
        _common(sub.add_parser(name))
    v = sub.add_parser("verify", help="run the acceptance suite, or check a stored report")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--threads", type=int)
    v.add_argument("--report", help="validate schema and checksum of this report file")
    return ap


def _overrides(args):
    over = {"seed": args.seed, "out": args.out, "threads": args.threads, "grid_step": args.grid_step}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        over[k.strip().replace("-", "_")] = v.strip()
    return {k: (str(v) if v is not None else None) for k, v in over.items()}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "verify":
            return _verify(args)
        cfg = load_config(args.config, _overrides(args), args.preset)
        if cfg.experiment not in SUBCOMMANDS[args.command]:
            raise ConfigError(f"experiment {cfg.experiment!r} does not belong to '{args.command}'")
        set_threads(cfg.threads)
        from .experiments import run_experiment
        result = run_experiment(cfg)
    except (ConfigError, BadParam) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleInstance as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (InvariantViolation, ReportCorrupted) as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    rep = result.get("report")
    if rep is not None:
        keys = [k for k in ("density", "valid", "greedy_size", "tau", "tau_star", "ls_bound", "holds") if k in rep]
        print(" ".join(f"{k}={rep[k]}" for k in keys))
    print(f"wrote {', '.join(sorted(result['files']))} to {cfg.out}")
    return EXIT_OK if result["ok"] else EXIT_FAIL


def _verify(args) -> int:
    if args.report:
        from .report import load_report
        try:
            load_report(args.report)
        except ReportCorrupted as exc:
            print(f"report check failed: {exc}", file=sys.stderr)
            return EXIT_INVARIANT
        print(f"{args.report}: schema and checksum ok")
        return EXIT_OK
    set_threads(args.threads if args.threads is not None else 1)
    from .acceptance import verify_all
    summary = verify_all(args.seed)
    return EXIT_OK if summary["all_passed"] else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
