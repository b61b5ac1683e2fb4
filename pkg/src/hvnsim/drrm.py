"""Per-vehicle distributed radio resource management (DRRM).

The network load monitor (NLM) flags overload from the 802.11p queue fill.
The QoS-aware flow then escalates one step per NLM evaluation: cut the local
beaconing rate, ask neighbours to cut theirs, and only when neither is
possible hand over to LTE for a dwell period.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

from .core import (
    BFAState,
    Phase,
    QoSProfile,
    RATKind,
    bfa_on_timer,
    enter_reduced,
    in_initial_dwell,
)
from .radio import TxQueue, queue_fill_ratio


class LoadStatus(enum.Enum):
    NORMAL = "normal"
    OVERLOAD = "overload"


class Decision(enum.Enum):
    STAY = "stay"
    REDUCE_LOCAL = "reduce_local"
    REQUEST_NEIGHBORS = "request_neighbors"
    VHO_TO_LTE = "vho_to_lte"
    VHO_TO_ADHOC = "vho_to_adhoc"


class InvalidTransition(RuntimeError):
    pass


@dataclass(frozen=True)
class NlmConfig:
    threshold: float = 0.85

    def __post_init__(self):
        if not 0.0 < self.threshold <= 1.0:
            raise ValueError(f"NLM threshold must be in (0, 1], got {self.threshold}")


@dataclass(frozen=True)
class DrrmConfig:
    nlm_interval: float = 0.5
    lte_dwell: float = 5.0

    def __post_init__(self):
        if self.nlm_interval <= 0:
            raise ValueError("nlm_interval must be > 0")
        if self.lte_dwell < 0:
            raise ValueError("lte_dwell must be >= 0")


@dataclass(frozen=True)
class SchemeKind:
    name: str = "qos"
    period: float = 0.0

    NAMES = ("qos", "periodic", "nobfa", "nolte")

    def __post_init__(self):
        if self.name not in self.NAMES:
            raise ValueError(f"unknown scheme {self.name!r}; expected one of {', '.join(self.NAMES)}")
        if self.name == "periodic" and not 2.0 <= self.period <= 10.0:
            raise ValueError(f"periodic scheme needs a period in [2, 10] s, got {self.period}")

    @classmethod
    def parse(cls, text: str) -> "SchemeKind":
        """``qos``, ``nobfa``, ``nolte`` or ``periodic:<seconds>``."""
        name, _, arg = text.strip().lower().partition(":")
        if name == "periodic":
            return cls(name, float(arg) if arg else 4.0)
        if arg:
            raise ValueError(f"scheme {name!r} takes no argument")
        return cls(name)

    def __str__(self):
        return f"periodic:{self.period:g}" if self.name == "periodic" else self.name

    @property
    def dual_interface(self) -> bool:
        return self.name != "nolte"


@dataclass
class DrrmState:
    bfa: BFAState
    active_rat: RATKind = RATKind.ADHOC
    pending_neighbor_requests: set = field(default_factory=set)
    vho_in_progress_until: Optional[float] = None
    vho_target: Optional[RATKind] = None
    lte_dwell_until: Optional[float] = None
    # escalation bookkeeping for the three-step flow
    last_action: Optional[Decision] = None
    neighbor_flag: bool = False
    pending_local: bool = False
    vho_count: int = 0

    def in_vho(self, now: float) -> bool:
        return self.vho_in_progress_until is not None and now < self.vho_in_progress_until


def nlm_check(q: TxQueue, cfg: NlmConfig) -> LoadStatus:
    return LoadStatus.OVERLOAD if queue_fill_ratio(q) >= cfg.threshold else LoadStatus.NORMAL


def qos_aware_decide(
    profile: QoSProfile,
    state: DrrmState,
    load: LoadStatus,
    now: float,
    projected_normal: bool = True,
) -> Decision:
    if state.vho_in_progress_until is not None:
        raise InvalidTransition("decision requested during a VHO")
    if state.active_rat is RATKind.LTE:
        if state.lte_dwell_until is not None and now >= state.lte_dwell_until and projected_normal:
            return Decision.VHO_TO_ADHOC
        return Decision.STAY
    if load is LoadStatus.NORMAL:
        return Decision.STAY
    can_local = enter_reduced(profile, state.bfa, now) is not None
    if state.last_action is Decision.REDUCE_LOCAL:
        return Decision.REQUEST_NEIGHBORS
    if state.last_action is Decision.REQUEST_NEIGHBORS:
        return Decision.REDUCE_LOCAL if can_local else Decision.VHO_TO_LTE
    return Decision.REDUCE_LOCAL if can_local else Decision.REQUEST_NEIGHBORS


def scheme_decide(
    kind: SchemeKind,
    profile: QoSProfile,
    state: DrrmState,
    load: LoadStatus,
    now: float,
    projected_normal: bool = True,
    epoch: bool = False,
) -> Decision:
    """Dispatch to the configured scheme.

    ``epoch`` marks a periodic switching instant; periodic switching ignores
    load entirely and the other schemes ignore ``epoch``.
    """
    if kind.name == "qos":
        return qos_aware_decide(profile, state, load, now, projected_normal)
    if kind.name == "nolte":
        return Decision.STAY
    if kind.name == "periodic":
        if not epoch:
            return Decision.STAY
        return Decision.VHO_TO_LTE if state.active_rat is RATKind.ADHOC else Decision.VHO_TO_ADHOC
    # nobfa
    if state.active_rat is RATKind.ADHOC:
        return Decision.VHO_TO_LTE if load is LoadStatus.OVERLOAD else Decision.STAY
    if state.lte_dwell_until is not None and now >= state.lte_dwell_until and projected_normal:
        return Decision.VHO_TO_ADHOC
    return Decision.STAY


def apply_decision(profile: QoSProfile, state: DrrmState, decision: Decision, now: float) -> None:
    """Update BFA and escalation bookkeeping for non-handover decisions."""
    if decision is Decision.REDUCE_LOCAL:
        reduced = enter_reduced(profile, state.bfa, now)
        if reduced is None:
            raise InvalidTransition("local reduction chosen but not permitted")
        state.bfa = reduced
        state.pending_local = False
    elif decision is Decision.REQUEST_NEIGHBORS:
        state.neighbor_flag = True
        if in_initial_dwell(state.bfa, now):
            state.pending_local = True
    if decision in (Decision.REDUCE_LOCAL, Decision.REQUEST_NEIGHBORS):
        state.last_action = decision
    else:
        state.last_action = None


def handle_neighbor_request(profile: QoSProfile, state: DrrmState, requester: int, now: float) -> Optional[Decision]:
    """Try one BFA step on behalf of a neighbour.

    During the minimum dwell at the initial rate the request is parked and
    honoured when the dwell timer fires.
    """
    if in_initial_dwell(state.bfa, now):
        state.pending_neighbor_requests.add(requester)
        return None
    reduced = enter_reduced(profile, state.bfa, now)
    if reduced is None:
        return None
    state.bfa = reduced
    return Decision.REDUCE_LOCAL


def on_bfa_timer(profile: QoSProfile, state: DrrmState, now: float) -> None:
    pending = state.pending_local or bool(state.pending_neighbor_requests)
    was_initial = state.bfa.phase is Phase.INITIAL
    state.bfa = bfa_on_timer(profile, state.bfa, now, pending_request=pending)
    if was_initial:
        state.pending_local = False
        state.pending_neighbor_requests.clear()


def execute_vho(state: DrrmState, target: RATKind, now: float, vho_delay: float) -> DrrmState:
    """Start a handover; the interface switches when :func:`complete_vho` runs."""
    if state.vho_in_progress_until is not None:
        raise InvalidTransition("a VHO is already in progress")
    if target is state.active_rat:
        raise InvalidTransition(f"already on {target.value}")
    state.vho_in_progress_until = now + vho_delay
    state.vho_target = target
    state.last_action = None
    state.neighbor_flag = False
    if target is RATKind.LTE:
        state.pending_local = False
    return state


def complete_vho(state: DrrmState, now: float, lte_dwell: float) -> DrrmState:
    if state.vho_target is None:
        raise InvalidTransition("no VHO in progress")
    state.active_rat = state.vho_target
    state.vho_in_progress_until = None
    state.vho_target = None
    state.vho_count += 1
    state.lte_dwell_until = now + lte_dwell if state.active_rat is RATKind.LTE else None
    return state
