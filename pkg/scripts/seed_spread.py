"""Mean and spread of VHO counts over a wider seed range for one sweep preset.

Useful when a trend check sits close to its margin at the default five seeds.

    python scripts/seed_spread.py fig4b --seeds 15
"""
import argparse
import os
import statistics
from dataclasses import replace

from hvnsim.config import SWEEPS, scenario
from hvnsim.drrm import SchemeKind
from hvnsim.experiments import run_sweep


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("preset", choices=[k for k, axes in SWEEPS.items() if len(axes) == 1 and k != "fig6"])
    ap.add_argument("--seeds", type=int, default=15)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()
    base = replace(scenario(), scheme=SchemeKind("qos"), replicates=args.seeds)
    for row in run_sweep(base, SWEEPS[args.preset], workers=args.workers):
        vho = [m.vho_count for m in row.result.runs]
        sem = statistics.stdev(vho) / len(vho) ** 0.5
        print(f"{row.params[0][0]}={row.params[0][1]}: mean {statistics.fmean(vho):.1f} ± {sem:.1f} (sem), min {min(vho)}, max {max(vho)}")


if __name__ == "__main__":
    main()
