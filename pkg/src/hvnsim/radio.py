"""Radio models for both access technologies.

802.11p: three-log-distance path loss, a carrier-sense broadcast channel with
hidden-terminal collisions and per-vehicle FIFO transmit queues.
LTE: a single cell abstracted to fixed uplink/core/downlink latencies and a
sliding-window capacity check.
"""
from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np


def free_space_loss_db(d_m: float, freq_mhz: float) -> float:
    return 32.45 + 20.0 * math.log10(freq_mhz) + 20.0 * math.log10(d_m / 1000.0)


REF_LOSS_5_8GHZ_1M = free_space_loss_db(1.0, 5800.0)


class DomainError(ValueError):
    pass


class DropReason(enum.Enum):
    QUEUE_OVERFLOW = "queue_overflow"
    CELL_SATURATED = "cell_saturated"


class Dropped(Exception):
    def __init__(self, reason: DropReason):
        super().__init__(reason.value)
        self.reason = reason


@dataclass(frozen=True)
class PathLossModel:
    d0: float = 1.0
    d1: float = 200.0
    d2: float = 500.0
    n0: float = 1.9
    n1: float = 3.8
    n2: float = 3.8
    ref_loss_db: float = REF_LOSS_5_8GHZ_1M
    tx_power_dbm: float = 20.0
    # None: calibrate against the configured communication range
    sensitivity_dbm: Optional[float] = None

    def __post_init__(self):
        if not self.d0 < self.d1 < self.d2:
            raise ValueError("breakpoints must satisfy d0 < d1 < d2")
        if min(self.n0, self.n1, self.n2) <= 0:
            raise ValueError("path-loss exponents must be > 0")


def path_loss_db(model: PathLossModel, d: float) -> float:
    if d <= 0:
        raise DomainError(f"distance must be > 0, got {d}")
    loss = model.ref_loss_db + 10.0 * model.n0 * math.log10(d / model.d0)
    if d <= model.d1:
        return loss
    at_d1 = model.ref_loss_db + 10.0 * model.n0 * math.log10(model.d1 / model.d0)
    if d <= model.d2:
        return at_d1 + 10.0 * model.n1 * math.log10(d / model.d1)
    at_d2 = at_d1 + 10.0 * model.n1 * math.log10(model.d2 / model.d1)
    return at_d2 + 10.0 * model.n2 * math.log10(d / model.d2)


def path_loss_array(model: PathLossModel, d: np.ndarray) -> np.ndarray:
    """Elementwise :func:`path_loss_db`; zero distances map to -inf."""
    d = np.asarray(d, dtype=float)
    at_d1 = model.ref_loss_db + 10.0 * model.n0 * math.log10(model.d1 / model.d0)
    at_d2 = at_d1 + 10.0 * model.n1 * math.log10(model.d2 / model.d1)
    lg = np.log10(d)
    near = model.ref_loss_db + 10.0 * model.n0 * (lg - math.log10(model.d0))
    mid = at_d1 + 10.0 * model.n1 * (lg - math.log10(model.d1))
    far = at_d2 + 10.0 * model.n2 * (lg - math.log10(model.d2))
    return np.where(d <= model.d1, near, np.where(d <= model.d2, mid, far))


def can_receive(model: PathLossModel, tx_power_dbm: float, sensitivity_dbm: float, d: float) -> bool:
    return tx_power_dbm - path_loss_db(model, d) >= sensitivity_dbm


# Keeps the target distance itself on the receiving side of the boundary
# despite floating-point rounding in the log terms.
_CALIBRATION_MARGIN_DB = 1e-6


def calibrate(model: PathLossModel, range_m: float) -> PathLossModel:
    """Fix the receiver sensitivity so the reception boundary sits at ``range_m``.

    Loss is monotone in distance, so the boundary is the single root of
    ``tx - loss(d) - sensitivity``; solving for sensitivity at ``range_m`` is
    exact. :func:`reception_boundary` recovers the distance independently.
    """
    sens = model.tx_power_dbm - path_loss_db(model, range_m) - _CALIBRATION_MARGIN_DB
    return replace(model, sensitivity_dbm=sens)


def reception_boundary(model: PathLossModel, hi: float = 1e5, tol: float = 1e-6) -> float:
    """Largest distance that still receives, by bisection on distance."""
    if model.sensitivity_dbm is None:
        raise ValueError("model is not calibrated")
    lo = model.d0 * 1e-3
    if not can_receive(model, model.tx_power_dbm, model.sensitivity_dbm, lo):
        return 0.0
    if can_receive(model, model.tx_power_dbm, model.sensitivity_dbm, hi):
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if can_receive(model, model.tx_power_dbm, model.sensitivity_dbm, mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class AdhocRadioConfig:
    data_rate_bps: float = 6_000_000.0
    beacon_size_bytes: int = 100
    queue_capacity: int = 64
    range_meters: float = 250.0
    # carrier-sense reach; None means equal to range_meters
    sense_range_meters: Optional[float] = None
    # Per-frame channel occupancy beyond the payload: PHY preamble, MAC
    # header, AIFS and contention. Expressed in bits at the data rate.
    overhead_bits: int = 0
    jitter: float = 1e-3
    max_deferrals: int = 64
    pathloss: PathLossModel = field(default_factory=PathLossModel)

    def __post_init__(self):
        if self.data_rate_bps <= 0:
            raise ValueError("data_rate_bps must be > 0")
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.beacon_size_bytes < 1 or self.overhead_bits < 0:
            raise ValueError("frame sizes must be positive")
        if self.sense_range_meters is not None and self.sense_range_meters < self.range_meters:
            raise ValueError("sense_range_meters must be >= range_meters")

    @property
    def sense_range(self) -> float:
        return self.range_meters if self.sense_range_meters is None else self.sense_range_meters

    @property
    def payload_bits(self) -> int:
        return 8 * self.beacon_size_bytes

    @property
    def airtime(self) -> float:
        return (self.payload_bits + self.overhead_bits) / self.data_rate_bps

    def calibrated_pathloss(self) -> PathLossModel:
        if self.pathloss.sensitivity_dbm is not None:
            return self.pathloss
        return calibrate(self.pathloss, self.range_meters)


@dataclass(frozen=True)
class LteConfig:
    uplink_latency: float = 0.040
    core_latency: float = 0.010
    downlink_latency: float = 0.040
    cell_capacity_bps: float = 10_000_000.0
    vho_delay: float = 0.5

    def __post_init__(self):
        if min(self.uplink_latency, self.core_latency, self.downlink_latency, self.vho_delay) < 0:
            raise ValueError("latencies must be >= 0")
        if self.cell_capacity_bps <= 0:
            raise ValueError("cell_capacity_bps must be > 0")

    @property
    def path_latency(self) -> float:
        return self.uplink_latency + self.core_latency + self.downlink_latency


class TxQueue:
    """Bounded FIFO of pending beacons."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self.pending: deque = deque()

    def __len__(self):
        return len(self.pending)

    def push(self, beacon) -> None:
        if len(self.pending) >= self.capacity:
            raise Dropped(DropReason.QUEUE_OVERFLOW)
        self.pending.append(beacon)

    def pop(self):
        return self.pending.popleft()

    def drain(self) -> list:
        out = list(self.pending)
        self.pending.clear()
        return out


def queue_fill_ratio(q: TxQueue) -> float:
    return len(q.pending) / q.capacity


@dataclass
class Transmission:
    sender: int
    payload: object
    start: float
    end: float
    audience: np.ndarray  # bool mask of in-range vehicles at start
    flagged: bool = False  # piggybacked BFA request


class AdhocChannel:
    """Carrier-sense broadcast channel shared by the whole fleet.

    Channel access is kept out of the global event heap: every vehicle with a
    frame waiting has an entry in ``access_time`` and the kernel asks for the
    earliest one. When a frame goes on air, every waiting vehicle that senses
    it is pushed past its end plus a fresh uniform jitter, which is what a
    deferring carrier-sense MAC does. Sensing reaches ``sense_range`` (by
    default the decode range). Hidden terminals are not sensed, so their
    frames overlap and collide at common receivers.
    """

    def __init__(self, cfg: AdhocRadioConfig, n: int, rng: np.random.Generator):
        self.cfg = cfg
        self.n = n
        self.airtime = cfg.airtime
        self.rng = rng
        self.in_range = np.zeros((n, n), dtype=bool)
        self.senses = self.in_range
        self.access_time = np.full(n, math.inf)
        self.deferrals = np.zeros(n, dtype=np.int64)
        self.tx_end = np.full(n, -math.inf)
        self.heard = np.zeros(n)  # sensed airtime since last reset
        self.recent: list[Transmission] = []

    def set_in_range(self, mask: np.ndarray, senses: Optional[np.ndarray] = None) -> None:
        self.in_range = mask
        self.senses = mask if senses is None else senses

    def transmitting(self, v: int, now: float) -> bool:
        return self.tx_end[v] > now

    def request_access(self, v: int, now: float) -> None:
        if self.access_time[v] == math.inf and not self.transmitting(v, now):
            self.access_time[v] = now + self.rng.uniform(0.0, self.cfg.jitter)

    def cancel_access(self, v: int) -> None:
        self.access_time[v] = math.inf
        self.deferrals[v] = 0

    def next_access(self) -> tuple[float, int]:
        v = int(np.argmin(self.access_time))
        return float(self.access_time[v]), v

    def busy_until(self, v: int, now: float) -> float:
        until = -math.inf
        row = self.senses[v]
        for tx in self.recent:
            if tx.end > now and (tx.sender == v or row[tx.sender]):
                until = max(until, tx.end)
        return until

    def attempt(self, v: int, now: float) -> bool:
        """Sense at the scheduled access time; defer if busy (capped)."""
        busy = self.busy_until(v, now)
        if busy > now and self.deferrals[v] < self.cfg.max_deferrals:
            self.deferrals[v] += 1
            self.access_time[v] = busy + self.rng.uniform(0.0, self.cfg.jitter)
            return False
        return True

    def transmit(self, v: int, payload, now: float, flagged: bool = False) -> Transmission:
        end = now + self.airtime
        audience = self.in_range[v].copy()
        tx = Transmission(v, payload, now, end, audience, flagged)
        self.access_time[v] = math.inf
        self.deferrals[v] = 0
        self.tx_end[v] = end
        waiting = self.senses[v] & (self.access_time < end) & (self.deferrals < self.cfg.max_deferrals)
        k = int(waiting.sum())
        if k:
            self.access_time[waiting] = end + self.rng.uniform(0.0, self.cfg.jitter, size=k)
            self.deferrals[waiting] += 1
        self.heard[self.senses[v]] += self.airtime
        self.recent.append(tx)
        return tx

    def resolve(self, tx: Transmission, now: float) -> np.ndarray:
        """Receivers that decode ``tx``: in range and not hit by any overlapping
        frame from a sender they can hear (or their own transmission)."""
        lost = np.zeros(self.n, dtype=bool)
        for o in self.recent:
            if o is tx or o.start >= tx.end or o.end <= tx.start:
                continue
            lost |= o.audience
            lost[o.sender] = True
        horizon = now - self.airtime
        self.recent = [o for o in self.recent if o.end > horizon]
        return tx.audience & ~lost

    def take_heard(self) -> np.ndarray:
        out = self.heard
        self.heard = np.zeros(self.n)
        return out


def adhoc_transmit(channel: AdhocChannel, sender: int, beacon, now: float) -> list[tuple[int, float]]:
    """Single-shot helper: put one frame on air and resolve it immediately.

    Only valid when no later frame can still overlap it (tests, toy runs).
    """
    tx = channel.transmit(sender, beacon, now)
    delivered = channel.resolve(tx, tx.end)
    return [(int(r), tx.end) for r in np.flatnonzero(delivered)]


class LteCell:
    """Single eNodeB relaying uplinked beacons to the sender's neighbourhood."""

    WINDOW = 1.0

    def __init__(self, cfg: LteConfig):
        self.cfg = cfg
        self._window: deque[tuple[float, int]] = deque()
        self._bits = 0

    def offered_bps(self, now: float) -> float:
        while self._window and self._window[0][0] <= now - self.WINDOW:
            _, b = self._window.popleft()
            self._bits -= b
        return self._bits / self.WINDOW

    def admit(self, now: float, bits: int) -> None:
        # uplink plus downlink rebroadcast both cross the cell
        load = 2 * bits
        if self.offered_bps(now) + load / self.WINDOW > self.cfg.cell_capacity_bps:
            raise Dropped(DropReason.CELL_SATURATED)
        self._window.append((now, load))
        self._bits += load


def lte_transmit(cell: LteCell, audience: np.ndarray, now: float, bits: int) -> list[tuple[int, float]]:
    cell.admit(now, bits)
    t = now + cell.cfg.path_latency
    return [(int(r), t) for r in np.flatnonzero(audience)]
