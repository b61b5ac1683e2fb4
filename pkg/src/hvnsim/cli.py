"""Command-line entry point: ``hvnsim {run,sweep,compare}``.

Exit codes: 0 ok, 2 configuration error, 3 runtime failure, 4 trend check
failed (``compare`` only).
"""
from __future__ import annotations

import argparse
import contextlib
import os
import sys
from dataclasses import replace
from typing import Optional, Sequence

from .config import build, parse_sweep, SWEEPS
from .drrm import SchemeKind
from .engine import ConfigError, run
from .experiments import (
    COMPARE_SCHEMES,
    PARAMETER_TRENDS,
    SweepRow,
    compare,
    monotone_check,
    rows_to_csv,
    run_sweep,
    scheme_checks,
)
from .metrics import aggregate

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_TREND = 0, 2, 3, 4


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="key=value config file")
    p.add_argument("--scheme", choices=SchemeKind.NAMES)
    p.add_argument("--period", type=float, metavar="S", help="periodic switching interval in seconds")
    p.add_argument("--seed", type=int, metavar="N", help="first seed (env HVNSIM_SEED as fallback)")
    p.add_argument("--replicates", type=int, metavar="N")
    p.add_argument("--paper-scale", action="store_true", help="150 vehicles, 100 s, 10 replicates")
    p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                   help="override any config key; repeatable")
    p.add_argument("--workers", type=int, default=1, help="parallel replicate processes")
    p.add_argument("--out", metavar="CSV", help="write CSV here instead of stdout")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hvnsim", description="Hybrid 802.11p/LTE RAT selection simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="replicated run of one configuration")
    _common(p_run)
    p_run.add_argument("--trace", metavar="PATH", help="event trace of the first replicate")
    p_sweep = sub.add_parser("sweep", help="Cartesian parameter sweep")
    _common(p_sweep)
    p_sweep.add_argument("axes", nargs="+", metavar="AXIS",
                         help=f"key=v1,v2,... or a preset ({', '.join(SWEEPS)})")
    p_cmp = sub.add_parser("compare", help="all schemes on one seed set, with trend checks")
    _common(p_cmp)
    p_cmp.add_argument("--with-sweeps", action="store_true",
                       help="also check the parameter-sweep trends (slower)")
    return parser


def _config(args):
    cfg = build(args.config, args.sets, args.paper_scale)
    seed = args.seed
    if seed is None and os.environ.get("HVNSIM_SEED"):
        try:
            seed = int(os.environ["HVNSIM_SEED"])
        except ValueError:
            raise ConfigError(f"HVNSIM_SEED must be an integer, got {os.environ['HVNSIM_SEED']!r}") from None
    if seed is not None:
        cfg = replace(cfg, seed=seed)
    if args.replicates is not None:
        cfg = replace(cfg, replicates=args.replicates)
    if args.scheme is not None:
        if args.scheme == "periodic":
            period = args.period if args.period is not None else (cfg.scheme.period or 4.0)
            cfg = replace(cfg, scheme=SchemeKind("periodic", period))
        else:
            cfg = replace(cfg, scheme=SchemeKind(args.scheme))
    elif args.period is not None:
        if cfg.scheme.name != "periodic":
            raise ConfigError("--period only applies to the periodic scheme")
        cfg = replace(cfg, scheme=SchemeKind("periodic", args.period))
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    return cfg


@contextlib.contextmanager
def _output(path: Optional[str]):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _summary(label: str, agg) -> str:
    s = agg.stats
    return (
        f"{label}: vho mean={s['vho'].mean:.1f} [min {s['vho'].min:g}, median {s['vho'].median:g}, max {s['vho'].max:g}]"
        f"  pdr={s['pdr'].mean:.2f}%  latency={s['latency_mean'].mean * 1e3:.2f} ms"
        f"  goodput adhoc={s['goodput_adhoc'].mean / 1e3:.1f} kb/s lte={s['goodput_lte'].mean / 1e3:.1f} kb/s"
    )


def cmd_run(args) -> int:
    cfg = _config(args)
    runs = []
    for i in range(cfg.replicates):
        one = replace(cfg, seed=cfg.seed + i)
        if i == 0 and args.trace:
            with open(args.trace, "w", encoding="utf-8") as fh:
                runs.append(run(one, trace=fh))
        else:
            runs.append(run(one))
    agg = aggregate(runs)
    with _output(args.out) as fh:
        fh.write(rows_to_csv([SweepRow([], agg)], cfg.scheme))
    print(_summary(str(cfg.scheme), agg), file=sys.stderr if args.out is None else sys.stdout)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _config(args)
    axes = parse_sweep(args.axes)
    rows = run_sweep(cfg, axes, workers=args.workers)
    with _output(args.out) as fh:
        fh.write(rows_to_csv(rows, cfg.scheme))
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    periodic = f"periodic:{args.period:g}" if args.period is not None else COMPARE_SCHEMES[1]
    schemes = ["qos", periodic, "nobfa", "nolte"]
    results = compare(cfg, schemes, workers=args.workers)
    rows = [SweepRow([("scheme", s)], results[s]) for s in schemes]
    with _output(args.out) as fh:
        fh.write(rows_to_csv(rows))
    report = sys.stderr if args.out is None else sys.stdout
    for s in schemes:
        print(_summary(s, results[s]), file=report)
    checks = scheme_checks(results, cfg.duration)
    if args.with_sweeps:
        qos_cfg = replace(cfg, scheme=SchemeKind("qos"))
        for preset, increasing in PARAMETER_TRENDS.items():
            swept = run_sweep(qos_cfg, SWEEPS[preset], workers=args.workers)
            checks.append(monotone_check(preset, [r.result["vho"].mean for r in swept], increasing))
    for c in checks:
        print(c.line(), file=report)
    return EXIT_OK if all(c.passed for c in checks) else EXIT_TREND


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "compare": cmd_compare}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors, which matches the config-error code
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"hvnsim: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"hvnsim: runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
