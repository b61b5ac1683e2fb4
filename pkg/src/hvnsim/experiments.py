"""Sweeps, scheme comparisons and the figure trend checks."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Optional

from .config import apply_overrides, combinations
from .drrm import SchemeKind
from .engine import RunConfig, run_replicates
from .metrics import AggregateMetrics, goodput

COMPARE_SCHEMES = ("qos", "periodic:4", "nobfa", "nolte")

STAT_COLUMNS = ["vho_min", "vho_median", "vho_max", "vho_mean", "pdr", "latency_mean", "goodput_adhoc", "goodput_lte"]


@dataclass
class SweepRow:
    params: list  # (key, raw value) pairs
    result: AggregateMetrics

    def values(self) -> list[float]:
        r = self.result
        vho = r["vho"]
        return [
            vho.min, vho.median, vho.max, vho.mean,
            r["pdr"].mean, r["latency_mean"].mean,
            r["goodput_adhoc"].mean, r["goodput_lte"].mean,
        ]


def run_sweep(base: RunConfig, axes: list[tuple[str, list[str]]], workers: int = 1) -> list[SweepRow]:
    """Cartesian product of the axes, in declaration order."""
    rows = []
    for combo in combinations(axes):
        cfg = apply_overrides(base, combo)
        rows.append(SweepRow(combo, run_replicates(cfg, workers=workers)))
    return rows


def _fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v))


def rows_to_csv(rows: list[SweepRow], scheme: Optional[SchemeKind] = None) -> str:
    """CSV text with a fixed column order.

    ``scheme`` fills the scheme column when the scheme is not itself swept.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = [k for k, _ in rows[0].params] if rows else []
    swept_scheme = "scheme" in keys
    header = (["scheme"] if not swept_scheme else []) + keys + STAT_COLUMNS
    w.writerow(header)
    for row in rows:
        lead = [] if swept_scheme else [str(scheme) if scheme else ""]
        w.writerow(lead + [v for _, v in row.params] + [_fmt(v) for v in row.values()])
    return buf.getvalue()


def compare(base: RunConfig, schemes: Iterable[str] = COMPARE_SCHEMES, workers: int = 1) -> dict[str, AggregateMetrics]:
    """All schemes under the same seed set."""
    return {s: run_replicates(replace(base, scheme=SchemeKind.parse(s)), workers=workers) for s in schemes}


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _vhos(agg: AggregateMetrics) -> list[int]:
    return [m.vho_count for m in agg.runs]


def scheme_checks(results: dict[str, AggregateMetrics], duration: float) -> list[Check]:
    """Scheme-comparison trends (VHO counts, PDR, latency, goodput shares)."""
    checks = []
    qos = results["qos"]
    baselines = {k: v for k, v in results.items() if k != "qos"}
    dual = {k: v for k, v in results.items() if SchemeKind.parse(k).dual_interface}

    if "nolte" in results:
        v = _vhos(results["nolte"])
        checks.append(Check("nolte_zero_vho", all(x == 0 for x in v), f"counts={v}"))

    for name, agg in results.items():
        kind = SchemeKind.parse(name)
        if kind.name != "periodic":
            continue
        expect = math.floor(duration / kind.period)
        bad = [t for m in agg.runs for t in m.vho_per_vehicle if abs(t - expect) > 1]
        checks.append(Check(f"{name}_toggles", not bad, f"expected {expect}±1 per vehicle, {len(bad)} outliers"))

    # NoLte cannot hand over at all, so its zero minimum is excluded
    qmin = min(_vhos(qos))
    mins = {k: min(_vhos(v)) for k, v in baselines.items() if k in dual}
    checks.append(Check("qos_min_vho_lowest", all(qmin < m for m in mins.values()), f"qos={qmin} baselines={mins}"))

    if "nobfa" in results:
        pairs = list(zip(_vhos(qos), _vhos(results["nobfa"])))
        checks.append(Check("qos_vho_le_nobfa_per_seed", all(a <= b for a, b in pairs), f"(qos, nobfa)={pairs}"))

    pdr = {k: v["pdr"].mean for k, v in results.items()}
    if "nolte" in results:
        others = {k: p for k, p in pdr.items() if k != "nolte"}
        checks.append(Check("nolte_pdr_lowest", all(pdr["nolte"] < p for p in others.values()), _kv(pdr, "%.2f")))
    if "nobfa" in results:
        gap = abs(pdr["qos"] - pdr["nobfa"])
        checks.append(Check("qos_pdr_near_nobfa", gap <= 5.0, f"gap={gap:.2f} pp"))

    lat = {k: v["latency_mean"].mean * 1e3 for k, v in results.items()}
    if "nolte" in results:
        others = {k: x for k, x in lat.items() if k != "nolte"}
        checks.append(Check("nolte_latency_lowest", all(lat["nolte"] < x for x in others.values()), _kv(lat, "%.1f ms")))
    if "nobfa" in results:
        checks.append(Check("qos_latency_below_nobfa", lat["qos"] < lat["nobfa"], f"qos={lat['qos']:.1f} ms nobfa={lat['nobfa']:.1f} ms"))

    stack_ok = all(_stack_ok(m) for agg in results.values() for m in agg.runs)
    checks.append(Check("goodput_stacks_sum", stack_ok, "adhoc + lte == total in every run"))
    share = {k: v["lte_share"].mean for k, v in dual.items()}
    checks.append(Check("qos_adhoc_share_majority", share["qos"] < 0.5, f"qos lte share={share['qos']:.3f}"))
    others = {k: s for k, s in share.items() if k != "qos"}
    checks.append(Check("qos_lte_share_smallest", all(share["qos"] < s for s in others.values()), _kv(share, "%.3f")))
    return checks


def _stack_ok(m) -> bool:
    adhoc, lte, total = goodput(m)
    expect = (m.copies_adhoc + m.copies_lte) * m.payload_bits / m.duration
    return total == adhoc + lte and math.isclose(total, expect, rel_tol=1e-12)


def _kv(d: dict, fmt: str) -> str:
    return " ".join(f"{k}={fmt % v}" for k, v in d.items())


def monotone_check(name: str, values: list[float], increasing: bool) -> Check:
    """Non-strict monotone across the list, strict between the extremes."""
    pairs = list(zip(values, values[1:]))
    if increasing:
        ok = all(a <= b for a, b in pairs) and values[0] < values[-1]
    else:
        ok = all(a >= b for a, b in pairs) and values[0] > values[-1]
    arrow = "up" if increasing else "down"
    return Check(name, ok, f"mean VHO {[round(v, 2) for v in values]} expected {arrow}")


# (preset, expect increasing?) for the one-dimensional parameter sweeps
PARAMETER_TRENDS = {
    "fig4a": True,
    "fig4b": False,
    "fig5a": False,
    "fig5b": True,
}
