"""Command-line entry point.

Subcommands: run (one trajectory), sweep (one config across conductivity
exponents), mms (convergence study), check (acceptance suite).  Exit code
0 on success, 1 when a verdict fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from .core import ConfigError
from .diagnostics import DiagnosticsError
from .harness import (acceptance_suite, default_config, load_config,
                      mms_convergence, run_simulation, sweep, write_config)
from .stepper import StepFailure


def _load(args):
    if args.config:
        return load_config(args.config)
    return default_config()


def _print_verdicts(verdicts):
    width = max(len(name) for name in verdicts)
    for name, v in verdicts.items():
        mark = "pass" if v["pass"] else "FAIL"
        print(f"  {name:<{width}}  {mark}  measured={v['measured']}"
              f"  threshold={v['threshold']}")


def _cmd_run(args):
    cfg = _load(args)
    report = run_simulation(cfg)
    print(f"run finished: {report.n_steps} steps, "
          f"{report.wall_seconds:.1f} s, series -> {cfg.series_path}")
    _print_verdicts(report.verdicts)
    return 0 if report.all_pass else 1


def _cmd_sweep(args):
    cfg = _load(args)
    betas = [float(b) for b in args.beta.split(",") if b.strip()]
    if not betas:
        raise ConfigError("--beta needs at least one value")
    reports = sweep(cfg, betas)
    aggregate = {f"{b:g}": r.to_dict() for b, r in reports.items()}
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(aggregate, fh, indent=2)
        fh.write("\n")
    ok = True
    for b, r in reports.items():
        mark = "pass" if r.all_pass else "FAIL"
        ok = ok and r.all_pass
        print(f"beta = {b:g}: {mark} ({r.n_steps} steps, "
              f"{r.wall_seconds:.1f} s)")
    print(f"aggregate -> {args.out}")
    return 0 if ok else 1


def _cmd_mms(args):
    report = mms_convergence(levels=args.levels, base_cells=args.cells)
    print("spatial orders: ",
          ["%.3f" % p for p in report["spatial"]["orders"]])
    print("temporal orders:",
          ["%.3f" % p for p in report["temporal"]["orders"]])
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    lo_s, hi_s = 1.8, 2.2
    lo_t, hi_t = 0.8, 1.2
    sp = report["spatial"]["orders"]
    tm = report["temporal"]["orders"]
    ok = (sp and all(lo_s <= p <= hi_s for p in sp)
          and tm and all(lo_t <= p <= hi_t for p in tm))
    return 0 if ok else 1


def _cmd_check(args):
    cfg = _load(args)
    criteria = None
    if args.criteria is not None:
        criteria = [int(c) for c in args.criteria.split(",") if c.strip()]
    report = acceptance_suite(cfg, criteria=criteria, out_path=args.out)
    if "warning" in report:
        print(f"warning: {report['warning']}")
    for name, v in report["criteria"].items():
        mark = "pass" if v["pass"] else "FAIL"
        print(f"  {name:<28} {mark}  ({v['seconds']} s)")
    print(f"report -> {args.out}")
    return 0 if report["all_pass"] else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="nslag",
        description="1D viscous heat-conducting gas in mass coordinates: "
                    "simulator and long-time diagnostics")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configured trajectory")
    p.add_argument("--config", help="flat key = value config file")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep",
                       help="run the config across conductivity exponents")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--beta", required=True,
                   help="comma-separated exponent values, e.g. 0.5,1,2.5")
    p.add_argument("--out", default="sweep.json", help="aggregate JSON path")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("mms", help="manufactured-solution convergence study")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--cells", type=int, default=100,
                   help="coarsest spatial resolution")
    p.add_argument("--out", help="optional JSON output path")
    p.set_defaults(func=_cmd_mms)

    p = sub.add_parser("check", help="run the acceptance suite")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--criteria", help="comma-separated subset, e.g. 1,2,10")
    p.add_argument("--out", default="acceptance.json")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("write-config",
                       help="write the default config to a file")
    p.add_argument("path")
    p.set_defaults(func=lambda a: (write_config(default_config(), a.path),
                                   print(f"defaults -> {a.path}"), 0)[-1])
    return ap


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DiagnosticsError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except StepFailure as exc:
        print(f"step failure at t = {exc.state.t}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
