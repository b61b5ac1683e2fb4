"""Regenerate every figure's data as CSV, plus the scheme comparison checks.

    python scripts/run_figures.py [--out results] [--paper-scale] [--workers N]
"""
import argparse
import os
import sys
from dataclasses import replace
from pathlib import Path

from hvnsim.config import SWEEPS, scenario
from hvnsim.drrm import SchemeKind
from hvnsim.experiments import PARAMETER_TRENDS, monotone_check, rows_to_csv, run_sweep, scheme_checks


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--only", nargs="*", choices=list(SWEEPS), help="subset of presets")
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    base = replace(scenario(args.paper_scale), scheme=SchemeKind("qos"))
    checks = []
    for name in args.only or SWEEPS:
        rows = run_sweep(base, SWEEPS[name], workers=args.workers)
        (out / f"{name}.csv").write_text(rows_to_csv(rows, base.scheme), encoding="utf-8")
        print(f"wrote {out / (name + '.csv')} ({len(rows)} rows)")
        if name in PARAMETER_TRENDS:
            checks.append(monotone_check(name, [r.result["vho"].mean for r in rows], PARAMETER_TRENDS[name]))
        if name == "fig6":
            checks += scheme_checks({r.params[0][1]: r.result for r in rows}, base.duration)
    for c in checks:
        print(c.line())
    (out / "checks.txt").write_text("".join(c.line() + "\n" for c in checks), encoding="utf-8")
    return 0 if all(c.passed for c in checks) else 4


if __name__ == "__main__":
    sys.exit(main())
