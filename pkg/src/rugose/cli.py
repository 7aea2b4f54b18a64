"""Command line entry point: ``rugose <subcommand> --config cfg.json``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import experiments, io
from .config import EXPERIMENTS, load_config, output_dir
from .errors import ConfigError, NonPositiveProfile, RugoseError, UnderResolved
from .fitting import fit_loglog
from .svg import AxesSpec, emit_svg

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parser():
    p = argparse.ArgumentParser(prog="rugose", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS + ("plot",):
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON experiment configuration")
        s.add_argument("--out", help="output directory (default: $RUGOSE_OUT)")
        s.add_argument("--jobs", type=int, default=1, help="worker processes for sweeps")
        s.add_argument("--seed", type=int, default=0, help="seed for randomised test fields")
        if name == "plot":
            s.add_argument("csv", nargs="?", help="summary.csv or trace.csv to plot")
    return p


def _plot(args):
    out = output_dir({}, args.out)
    src = Path(args.csv) if args.csv else out / "summary.csv"
    try:
        header, rows = io.read_rows(src)
    except OSError as exc:
        raise ConfigError(f"cannot read {src}: {exc.strerror}") from None
    if "B1" in header:
        xcol, ycol = header.index("epsilon"), header.index("B1")
        rows = [r for r in rows if r[header.index("status")] == "ok"]
    elif "R" in header:
        xcol, ycol = header.index("epsilon"), header.index("R")
    else:
        raise ConfigError(f"{src} has no plottable columns")
    pts = [(float(r[xcol]), float(r[ycol])) for r in rows]
    fit = fit_loglog(pts) if len(pts) >= 3 else None
    svg = emit_svg(pts, AxesSpec("epsilon", header[ycol], src.stem), fit)
    dest = out / f"{src.stem}.svg"
    dest.write_text(svg)
    print(dest)
    return EXIT_OK


def _dispatch(args):
    if args.command == "plot":
        return _plot(args)
    if not args.config:
        raise ConfigError("--config is required")
    cfg = load_config(args.config)
    if args.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    cmd = args.command
    if cmd == "geom":
        for line in experiments.geom_report(cfg):
            print(line)
        return EXIT_OK
    out = output_dir(cfg, args.out)
    if cmd == "run":
        res = experiments.run_experiment(cfg, out)
        print(f"steps={res.steps} t={res.final.t:g} series={out / 'series.csv'}")
    elif cmd == "sweep":
        res = experiments.sweep(cfg, out, args.jobs)
        for r in res.rows:
            print(f"eps={r.epsilon:g} B1={r.B1:.6g} B2={r.B2:.6g} status={r.status}")
        if res.fit_B1 is not None:
            print(f"slope_B1={res.fit_B1.slope:.4f} slope_B2={res.fit_B2.slope:.4f}")
        else:
            print(res.fit_flag, file=sys.stderr)
        if any(r.status != "ok" for r in res.rows):
            return EXIT_NUMERIC
    elif cmd == "trace-check":
        res = experiments.trace_check(cfg, out)
        for e in res.epsilons:
            print(f"eps={e:g} R={res.R[e]:.6g}")
        if res.fit is not None:
            print(f"slope={res.fit.slope:.4f} r_squared={res.fit.r_squared:.4f}")
        print(f"c1={res.c1:.6g}")
    elif cmd == "korn-check":
        res = experiments.korn_check(cfg, out, args.seed)
        print(f"max_over_min={res.spread:.4f}")
    elif cmd == "bogovskii-check":
        res = experiments.bogovskii_check(cfg, out)
        for e, n in res.N.items():
            print(f"eps={e:g} N={n:.6g}")
        print(f"max_over_min={res.spread:.4f}")
    return EXIT_OK


def main(argv=None):
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(message)s", stream=sys.stderr)
    try:
        return _dispatch(args)
    except (ConfigError, UnderResolved, NonPositiveProfile) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RugoseError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
