"""Run-level counters and the four reported metrics: VHO count, PDR,
latency and per-RAT goodput."""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field
from typing import Optional

import numpy as np


class Undefined(ValueError):
    """Metric has no defined value for this run (empty denominator)."""


@dataclass
class RunMetrics:
    duration: float
    payload_bits: int = 800
    vho_count: int = 0
    generated: int = 0
    tx_adhoc: int = 0
    tx_lte: int = 0
    delivered_any: int = 0
    lost_all: int = 0
    dropped_queue: int = 0
    dropped_saturation: int = 0
    dropped_collision: int = 0  # receiver copies lost to overlapping frames
    expected_receptions: int = 0
    actual_receptions: int = 0
    copies_adhoc: int = 0
    copies_lte: int = 0
    latency_sum: float = 0.0
    latency_min: float = float("inf")
    vho_per_vehicle: list = field(default_factory=list)
    trace_hash: str = ""
    # only filled when the caller asks to keep samples
    latency_samples: Optional[list] = None

    def record_latencies(self, delays: np.ndarray) -> None:
        if delays.size == 0:
            return
        self.latency_sum += float(delays.sum())
        self.latency_min = min(self.latency_min, float(delays.min()))
        if self.latency_samples is not None:
            self.latency_samples.extend(delays.tolist())

    @property
    def latency_count(self) -> int:
        return self.copies_adhoc + self.copies_lte

    @property
    def goodput_adhoc_bps(self) -> float:
        return self.copies_adhoc * self.payload_bits / self.duration

    @property
    def goodput_lte_bps(self) -> float:
        return self.copies_lte * self.payload_bits / self.duration

    @property
    def unclassified(self) -> int:
        return self.generated - (self.delivered_any + self.lost_all + self.dropped_queue + self.dropped_saturation)


def pdr(m: RunMetrics) -> float:
    if m.expected_receptions == 0:
        raise Undefined("no expected receptions")
    return 100.0 * m.actual_receptions / m.expected_receptions


def mean_latency(m: RunMetrics) -> float:
    if m.latency_count == 0:
        raise Undefined("no delivered copies")
    return m.latency_sum / m.latency_count


def goodput(m: RunMetrics) -> tuple[float, float, float]:
    a, l = m.goodput_adhoc_bps, m.goodput_lte_bps
    return a, l, a + l


def lte_share(m: RunMetrics) -> float:
    """Fraction of delivered payload carried by LTE."""
    _, l, total = goodput(m)
    return l / total if total else 0.0


METRIC_FUNCS = {
    "vho": lambda m: float(m.vho_count),
    "pdr": pdr,
    "latency_mean": mean_latency,
    "goodput_adhoc": lambda m: goodput(m)[0],
    "goodput_lte": lambda m: goodput(m)[1],
    "goodput_total": lambda m: goodput(m)[2],
    "lte_share": lte_share,
}


@dataclass(frozen=True)
class Summary:
    mean: float
    min: float
    median: float
    max: float

    @classmethod
    def of(cls, values) -> "Summary":
        vals = list(values)
        if not vals:
            return cls(*(float("nan"),) * 4)
        return cls(statistics.fmean(vals), min(vals), statistics.median(vals), max(vals))


@dataclass
class AggregateMetrics:
    runs: list
    stats: dict

    def __getitem__(self, key) -> Summary:
        return self.stats[key]

    def per_run(self, key) -> list:
        return [_safe(METRIC_FUNCS[key], m) for m in self.runs]


def _safe(fn, m):
    try:
        return fn(m)
    except Undefined:
        return None


def aggregate(runs: list) -> AggregateMetrics:
    """Mean, min, median and max of every metric across replicate runs.

    Runs where a metric is undefined are left out of that metric's summary.
    """
    stats = {}
    for key, fn in METRIC_FUNCS.items():
        vals = [v for v in (_safe(fn, m) for m in runs) if v is not None]
        stats[key] = Summary.of(vals)
    return AggregateMetrics(list(runs), stats)
