"""Deterministic discrete-event kernel for the hybrid 802.11p/LTE fleet."""
from __future__ import annotations

import enum
import hashlib
import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, TextIO

import numpy as np

from .core import BFAState, QoSProfile, RATKind
from .drrm import (
    Decision,
    DrrmConfig,
    DrrmState,
    LoadStatus,
    NlmConfig,
    SchemeKind,
    apply_decision,
    complete_vho,
    execute_vho,
    handle_neighbor_request,
    nlm_check,
    on_bfa_timer,
    scheme_decide,
)
from .metrics import AggregateMetrics, RunMetrics, aggregate
from .mobility import HighwayConfig, distance_matrix, init_fleet
from .radio import AdhocChannel, AdhocRadioConfig, Dropped, LteCell, LteConfig, TxQueue, path_loss_array


class ConfigError(ValueError):
    pass


class EventKind(enum.IntEnum):
    # value is the tiebreak priority for simultaneous events
    RECEPTION = 0
    TIMER_EXPIRY = 1
    NLM_EVALUATION = 2
    BEACON_DUE = 3
    CHANNEL_ACCESS = 4  # served from the channel's access table, not the heap
    MOBILITY_TICK = 5
    VHO_COMPLETE = 6


@dataclass(order=True)
class Event:
    time: float
    kind: EventKind
    seq: int
    vehicle: int = field(compare=False, default=-1)
    payload: object = field(compare=False, default=None)


# Named substreams of the run seed; adding draws to one subsystem leaves the
# others untouched.
STREAMS = {"mobility": 1, "mac": 2, "scheme": 3, "beacon": 4, "lte": 5}


def rng_stream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed & (2**64 - 1), STREAMS[name]])


@dataclass(frozen=True)
class RadioConfig:
    adhoc: AdhocRadioConfig = field(default_factory=AdhocRadioConfig)
    lte: LteConfig = field(default_factory=LteConfig)


@dataclass(frozen=True)
class RunConfig:
    highway: HighwayConfig = field(default_factory=HighwayConfig)
    radio: RadioConfig = field(default_factory=RadioConfig)
    qos: QoSProfile = field(default_factory=QoSProfile)
    nlm: NlmConfig = field(default_factory=NlmConfig)
    drrm: DrrmConfig = field(default_factory=DrrmConfig)
    scheme: SchemeKind = field(default_factory=SchemeKind)
    duration: float = 100.0
    seed: int = 1
    replicates: int = 10
    mobility_tick: float = 0.1
    random_beacon_phase: bool = True

    def __post_init__(self):
        if self.duration <= 0:
            raise ConfigError("duration must be > 0")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if self.mobility_tick <= 0:
            raise ConfigError("mobility_tick must be > 0")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")


class Beacon:
    __slots__ = ("id", "src", "gen")

    def __init__(self, id: int, src: int, gen: float):
        self.id = id
        self.src = src
        self.gen = gen


class Simulator:
    def __init__(self, cfg: RunConfig, trace: Optional[TextIO] = None, keep_samples: bool = False):
        self.cfg = cfg
        self.trace = trace
        self._hash = hashlib.sha256()
        hw = cfg.highway
        self.n = n = hw.vehicle_count
        self.adhoc_cfg = cfg.radio.adhoc
        self.pathloss = self.adhoc_cfg.calibrated_pathloss()
        fleet = init_fleet(hw, rng_stream(cfg.seed, "mobility"))
        self.x = np.array([p.x for p in fleet], dtype=float)
        self.lane = np.array([p.lane for p in fleet], dtype=float)
        self.speed = np.array([p.speed for p in fleet], dtype=float)
        self.channel = AdhocChannel(self.adhoc_cfg, n, rng_stream(cfg.seed, "mac"))
        self.cell = LteCell(cfg.radio.lte)
        self.queues = [TxQueue(self.adhoc_cfg.queue_capacity) for _ in range(n)]
        self.blackout: list[list[Beacon]] = [[] for _ in range(n)]
        self.states = [DrrmState(BFAState.initial(cfg.qos)) for _ in range(n)]
        self.armed: list[Optional[float]] = [None] * n
        # beacon schedule anchored at the last frequency change
        self.anchor = np.zeros(n)
        self.anchor_k = np.zeros(n, dtype=np.int64)
        self.anchor_freq = np.full(n, cfg.qos.b_freq_initial, dtype=np.int64)
        self.metrics = RunMetrics(
            duration=cfg.duration,
            payload_bits=self.adhoc_cfg.payload_bits,
            latency_samples=[] if keep_samples else None,
        )
        self.heap: list = []
        self.seq = 0
        self.now = 0.0
        self.next_beacon_id = 0
        self._update_range()

    # -- bookkeeping -------------------------------------------------------

    def schedule(self, time: float, kind: EventKind, vehicle: int = -1, payload=None) -> None:
        if time < self.now:
            raise RuntimeError(f"event {kind.name} scheduled in the past ({time} < {self.now})")
        self.seq += 1
        heapq.heappush(self.heap, (time, int(kind), self.seq, vehicle, payload))

    def record(self, kind: str, vehicle: int, detail: str = "") -> None:
        line = f"{self.now!r}\t{vehicle}\t{kind}\t{detail}\n"
        self._hash.update(line.encode())
        if self.trace is not None:
            self.trace.write(line)

    def _update_range(self) -> None:
        d = distance_matrix(self.x, self.lane, self.cfg.highway)
        with np.errstate(divide="ignore"):
            loss = path_loss_array(self.pathloss, d)
        mask = self.pathloss.tx_power_dbm - loss >= self.pathloss.sensitivity_dbm
        np.fill_diagonal(mask, False)
        senses = None
        if self.adhoc_cfg.sense_range > self.adhoc_cfg.range_meters:
            senses = mask | (d <= self.adhoc_cfg.sense_range)
            np.fill_diagonal(senses, False)
        self.channel.set_in_range(mask, senses)

    def _audience(self, v: int) -> np.ndarray:
        return self.channel.in_range[v].copy()

    def _arm_bfa(self, v: int) -> None:
        deadline = self.states[v].bfa.phase_deadline
        if deadline is not None and deadline != self.armed[v]:
            self.armed[v] = deadline
            self.schedule(max(deadline, self.now), EventKind.TIMER_EXPIRY, v, ("bfa", deadline))

    # -- beacons -----------------------------------------------------------

    def _next_beacon_time(self, v: int) -> float:
        freq = self.states[v].bfa.b_freq_reduced
        if freq != self.anchor_freq[v]:
            self.anchor[v] = self.now
            self.anchor_k[v] = 0
            self.anchor_freq[v] = freq
        self.anchor_k[v] += 1
        return float(self.anchor[v] + self.anchor_k[v] / freq)

    def _on_beacon_due(self, v: int) -> None:
        m = self.metrics
        b = Beacon(self.next_beacon_id, v, self.now)
        self.next_beacon_id += 1
        m.generated += 1
        s = self.states[v]
        self.record("BeaconDue", v, f"id={b.id} f={s.bfa.b_freq_reduced}")
        if s.vho_in_progress_until is not None:
            self.blackout[v].append(b)
        elif s.active_rat is RATKind.LTE:
            self._send_lte(v, b)
        else:
            self._enqueue_adhoc(v, b)
        t = self._next_beacon_time(v)
        if t < self.cfg.duration:
            self.schedule(t, EventKind.BEACON_DUE, v)

    def _enqueue_adhoc(self, v: int, b: Beacon) -> None:
        try:
            self.queues[v].push(b)
        except Dropped:
            self.metrics.dropped_queue += 1
            self.metrics.expected_receptions += int(self.channel.in_range[v].sum())
            self.record("Drop", v, f"id={b.id} queue")
            return
        self.channel.request_access(v, self.now)

    def _send_lte(self, v: int, b: Beacon) -> None:
        m = self.metrics
        audience = self._audience(v)
        m.expected_receptions += int(audience.sum())
        try:
            self.cell.admit(self.now, self.adhoc_cfg.payload_bits)
        except Dropped:
            m.dropped_saturation += 1
            self.record("Drop", v, f"id={b.id} cell")
            return
        m.tx_lte += 1
        self.record("TxLte", v, f"id={b.id}")
        self.schedule(self.now + self.cfg.radio.lte.path_latency, EventKind.RECEPTION, v, ("lte", b, audience))

    def _on_channel_access(self, v: int) -> None:
        ch = self.channel
        s = self.states[v]
        q = self.queues[v]
        if self.now >= self.cfg.duration or s.vho_in_progress_until is not None or s.active_rat is not RATKind.ADHOC or not q.pending:
            ch.cancel_access(v)
            return
        if not ch.attempt(v, self.now):
            return
        b = q.pop()
        flagged = s.neighbor_flag
        s.neighbor_flag = False
        tx = ch.transmit(v, b, self.now, flagged)
        self.metrics.tx_adhoc += 1
        self.metrics.expected_receptions += int(tx.audience.sum())
        self.record("TxAdhoc", v, f"id={b.id} flag={int(flagged)}")
        self.schedule(tx.end, EventKind.RECEPTION, v, ("adhoc", tx))

    def _deliver(self, b: Beacon, receivers: np.ndarray, via_lte: bool) -> None:
        m = self.metrics
        nd = int(receivers.sum())
        m.actual_receptions += nd
        if via_lte:
            m.copies_lte += nd
        else:
            m.copies_adhoc += nd
        if nd:
            m.delivered_any += 1
            m.record_latencies(np.full(nd, self.now - b.gen))
        else:
            m.lost_all += 1

    def _on_reception(self, v: int, payload) -> None:
        if payload[0] == "lte":
            _, b, audience = payload
            self._deliver(b, audience, via_lte=True)
            self.record("Reception", v, f"id={b.id} lte n={int(audience.sum())}")
            return
        tx = payload[1]
        delivered = self.channel.resolve(tx, self.now)
        self.metrics.dropped_collision += int(tx.audience.sum()) - int(delivered.sum())
        self._deliver(tx.payload, delivered, via_lte=False)
        self.record("Reception", v, f"id={tx.payload.id} adhoc n={int(delivered.sum())}")
        s = self.states[v]
        if self.queues[v].pending and s.active_rat is RATKind.ADHOC and s.vho_in_progress_until is None:
            self.channel.request_access(v, self.now)
        if tx.flagged:
            for r in np.flatnonzero(delivered):
                r = int(r)
                if handle_neighbor_request(self.cfg.qos, self.states[r], v, self.now) is not None:
                    self.record("NeighborReduce", r, f"from={v} f={self.states[r].bfa.b_freq_reduced}")
                self._arm_bfa(r)

    # -- DRRM --------------------------------------------------------------

    def _projected_normal(self, v: int, sensed: np.ndarray) -> bool:
        own = self.states[v].bfa.b_freq_reduced * self.channel.airtime
        return sensed[v] + own < self.cfg.nlm.threshold

    def _decide(self, v: int, sensed: np.ndarray, epoch: bool = False) -> None:
        s = self.states[v]
        if s.vho_in_progress_until is not None:
            return
        load = nlm_check(self.queues[v], self.cfg.nlm)
        decision = scheme_decide(
            self.cfg.scheme, self.cfg.qos, s, load, self.now,
            projected_normal=self._projected_normal(v, sensed), epoch=epoch,
        )
        if load is LoadStatus.OVERLOAD or decision is not Decision.STAY:
            self.record("Decision", v, f"{load.value} {decision.value}")
        if decision is Decision.VHO_TO_LTE:
            self._start_vho(v, RATKind.LTE)
        elif decision is Decision.VHO_TO_ADHOC:
            self._start_vho(v, RATKind.ADHOC)
        else:
            apply_decision(self.cfg.qos, s, decision, self.now)
            self._arm_bfa(v)

    def _on_nlm(self) -> None:
        if self.now >= self.cfg.duration:
            return
        interval = self.cfg.drrm.nlm_interval
        sensed = self.channel.take_heard() / interval
        self._last_sensed = sensed
        if self.cfg.scheme.name in ("qos", "nobfa"):
            for v in range(self.n):
                self._decide(v, sensed)
        t = self.now + interval
        if t < self.cfg.duration:
            self.schedule(t, EventKind.NLM_EVALUATION)

    def _on_timer(self, v: int, payload) -> None:
        if self.now >= self.cfg.duration:
            return
        s = self.states[v]
        if payload[0] == "periodic":
            self._decide(v, self._last_sensed, epoch=True)
            t = self.now + self.cfg.scheme.period
            if t < self.cfg.duration:
                self.schedule(t, EventKind.TIMER_EXPIRY, v, ("periodic",))
            return
        deadline = payload[1]
        if s.bfa.phase_deadline != deadline:
            return
        expired_reduced = s.bfa.phase.value == "reduced"
        on_bfa_timer(self.cfg.qos, s, self.now)
        self.record("BfaTimer", v, f"{s.bfa.phase.value} f={s.bfa.b_freq_reduced}")
        self._arm_bfa(v)
        if expired_reduced and s.active_rat is RATKind.ADHOC:
            self._decide(v, self._last_sensed)

    def _start_vho(self, v: int, target: RATKind) -> None:
        s = self.states[v]
        execute_vho(s, target, self.now, self.cfg.radio.lte.vho_delay)
        self.channel.cancel_access(v)
        self.record("VhoStart", v, target.value)
        self.schedule(s.vho_in_progress_until, EventKind.VHO_COMPLETE, v)

    def _on_vho_complete(self, v: int) -> None:
        if self.now > self.cfg.duration:
            return
        s = self.states[v]
        complete_vho(s, self.now, self.cfg.drrm.lte_dwell)
        self.record("VhoComplete", v, s.active_rat.value)
        held = self.blackout[v]
        self.blackout[v] = []
        if s.active_rat is RATKind.LTE:
            for b in self.queues[v].drain() + held:
                self._send_lte(v, b)
        else:
            for b in held:
                self._enqueue_adhoc(v, b)

    def _on_mobility(self) -> None:
        if self.now >= self.cfg.duration:
            return
        self.x = np.mod(self.x + self.speed * self.cfg.mobility_tick, self.cfg.highway.length)
        self._update_range()
        t = self.now + self.cfg.mobility_tick
        if t < self.cfg.duration:
            self.schedule(t, EventKind.MOBILITY_TICK)

    # -- main loop ---------------------------------------------------------

    def _bootstrap(self) -> None:
        cfg = self.cfg
        beacon_rng = rng_stream(cfg.seed, "beacon")
        period = 1.0 / cfg.qos.b_freq_initial
        for v in range(self.n):
            t0 = float(beacon_rng.uniform(0.0, period)) if cfg.random_beacon_phase else 0.0
            self.anchor[v] = t0
            if t0 < cfg.duration:
                self.schedule(t0, EventKind.BEACON_DUE, v)
        self._last_sensed = np.zeros(self.n)
        if cfg.drrm.nlm_interval < cfg.duration:
            self.schedule(cfg.drrm.nlm_interval, EventKind.NLM_EVALUATION)
        if cfg.mobility_tick < cfg.duration:
            self.schedule(cfg.mobility_tick, EventKind.MOBILITY_TICK)
        if cfg.scheme.name == "periodic":
            scheme_rng = rng_stream(cfg.seed, "scheme")
            p = cfg.scheme.period
            for v in range(self.n):
                # offset in (0, p]: no vehicle switches at t=0
                t0 = p - float(scheme_rng.uniform(0.0, p))
                if t0 < cfg.duration:
                    self.schedule(t0, EventKind.TIMER_EXPIRY, v, ("periodic",))

    def run(self) -> RunMetrics:
        self._bootstrap()
        heap = self.heap
        ch = self.channel
        access_prio = int(EventKind.CHANNEL_ACCESS)
        while True:
            ta, va = ch.next_access()
            if heap:
                th, kh = heap[0][0], heap[0][1]
            else:
                th, kh = math.inf, 0
            if ta == math.inf and th == math.inf:
                break
            if ta < th or (ta == th and kh > access_prio):
                self.now = ta
                self._on_channel_access(va)
                continue
            time, kind, _, v, payload = heapq.heappop(heap)
            self.now = time
            if kind == EventKind.RECEPTION:
                self._on_reception(v, payload)
            elif kind == EventKind.BEACON_DUE:
                self._on_beacon_due(v)
            elif kind == EventKind.NLM_EVALUATION:
                self._on_nlm()
            elif kind == EventKind.TIMER_EXPIRY:
                self._on_timer(v, payload)
            elif kind == EventKind.MOBILITY_TICK:
                self._on_mobility()
            elif kind == EventKind.VHO_COMPLETE:
                self._on_vho_complete(v)
        return self._finish()

    def _finish(self) -> RunMetrics:
        m = self.metrics
        # beacons still queued or held by a handover at the horizon never
        # reached anyone
        for v in range(self.n):
            stranded = len(self.queues[v]) + len(self.blackout[v])
            if stranded:
                m.lost_all += stranded
                m.expected_receptions += stranded * int(self.channel.in_range[v].sum())
        m.vho_per_vehicle = [s.vho_count for s in self.states]
        m.vho_count = sum(m.vho_per_vehicle)
        m.trace_hash = self._hash.hexdigest()
        return m


def run(config: RunConfig, trace: Optional[TextIO] = None, keep_samples: bool = False) -> RunMetrics:
    return Simulator(config, trace=trace, keep_samples=keep_samples).run()


def _run_seed(args) -> RunMetrics:
    config, seed = args
    return run(replace(config, seed=seed))


def run_replicates(config: RunConfig, workers: int = 1) -> AggregateMetrics:
    """Runs seeds ``seed .. seed+replicates-1`` and aggregates them."""
    jobs = [(config, config.seed + i) for i in range(config.replicates)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_run_seed, jobs))
    else:
        runs = [_run_seed(j) for j in jobs]
    return aggregate(runs)
