"""Domain types and the beaconing-frequency adaptation (BFA) state machine."""
from __future__ import annotations

import enum
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional


class RATKind(enum.Enum):
    ADHOC = "802.11p"
    LTE = "lte"


class Phase(enum.Enum):
    INITIAL = "initial"
    REDUCED = "reduced"


class CannotReduce(Exception):
    """Raised when an application cannot tolerate a further frequency cut."""


@dataclass(frozen=True)
class QoSProfile:
    """Beaconing requirements of the single application running on a vehicle.

    ``r_factor`` and ``r_tolerance`` are fractions of ``b_freq_initial``.
    ``t_reduced`` bounds how long the reduced rate may be held; ``t_initial``
    is the minimum dwell at the initial rate once the reduced epoch ends.
    """

    b_freq_initial: int = 10
    r_factor: float = 0.25
    r_tolerance: float = 0.5
    t_reduced: float = 10.0
    t_initial: float = 2.0

    def __post_init__(self):
        if not isinstance(self.b_freq_initial, int) or not 1 <= self.b_freq_initial <= 10:
            raise ValueError(f"b_freq_initial must be an integer in 1..10 Hz, got {self.b_freq_initial!r}")
        if not 0.0 <= self.r_factor <= 1.0:
            raise ValueError(f"r_factor must be in [0, 1], got {self.r_factor}")
        if not 0.0 <= self.r_tolerance <= 1.0:
            raise ValueError(f"r_tolerance must be in [0, 1], got {self.r_tolerance}")
        if self.t_reduced <= 0:
            raise ValueError(f"t_reduced must be > 0, got {self.t_reduced}")
        if self.t_initial < 0:
            raise ValueError(f"t_initial must be >= 0, got {self.t_initial}")


@dataclass
class BFAState:
    b_freq_reduced: int
    phase: Phase = Phase.INITIAL
    # absolute simulation time; None when no timer is armed
    phase_deadline: Optional[float] = None

    @classmethod
    def initial(cls, profile: QoSProfile) -> "BFAState":
        return cls(b_freq_reduced=profile.b_freq_initial)


def _dec(x) -> Decimal:
    return Decimal(repr(x)) if isinstance(x, float) else Decimal(x)


def reduction_permitted(profile: QoSProfile, state: BFAState) -> bool:
    """True while the reduction applied so far is strictly below the tolerance.

    Evaluated before a step is taken, so the last permitted step may overshoot
    the tolerance (10 Hz, 25 %, 50 % ends at 4 Hz).
    """
    applied = _dec(profile.b_freq_initial) - _dec(state.b_freq_reduced)
    return applied < _dec(profile.r_tolerance) * _dec(profile.b_freq_initial)


def bfa_step(profile: QoSProfile, state: BFAState) -> int:
    """Next reduced beaconing frequency in Hz.

    Computes ``round_half_up(current - r_factor * initial)`` clamped at 1 Hz.
    Raises :class:`CannotReduce` when the tolerance is already used up. The
    result may equal the current frequency (``r_factor`` of zero, or the 1 Hz
    floor); callers decide whether that counts as progress.
    """
    if state.b_freq_reduced < 1:
        raise ValueError("b_freq_reduced must be >= 1 Hz")
    if not reduction_permitted(profile, state):
        raise CannotReduce(
            f"{state.b_freq_reduced} Hz already at tolerance "
            f"{profile.r_tolerance:.0%} of {profile.b_freq_initial} Hz"
        )
    raw = _dec(state.b_freq_reduced) - _dec(profile.r_factor) * _dec(profile.b_freq_initial)
    new = int(raw.quantize(Decimal(1), rounding=ROUND_HALF_UP))
    return max(1, new)


def try_reduce(profile: QoSProfile, state: BFAState) -> int:
    """``bfa_step`` with the progress guard: a step that does not lower the
    frequency is treated as exhausted so the DRRM cannot livelock."""
    new = bfa_step(profile, state)
    if new >= state.b_freq_reduced:
        raise CannotReduce(f"step from {state.b_freq_reduced} Hz makes no progress")
    return new


def bfa_on_timer(profile: QoSProfile, state: BFAState, now: float, pending_request: bool = False) -> BFAState:
    """Phase transition when ``state.phase_deadline`` fires.

    Reduced -> Initial at the reduced-epoch expiry, arming the minimum dwell.
    Initial dwell end -> Reduced if a reduction request was held back,
    otherwise the timer is simply cleared.
    """
    if state.phase is Phase.REDUCED:
        return BFAState(profile.b_freq_initial, Phase.INITIAL, now + profile.t_initial)
    if pending_request:
        entered = enter_reduced(profile, BFAState(profile.b_freq_initial), now)
        if entered is not None:
            return entered
    return BFAState(profile.b_freq_initial, Phase.INITIAL, None)


def in_initial_dwell(state: BFAState, now: float) -> bool:
    return state.phase is Phase.INITIAL and state.phase_deadline is not None and now < state.phase_deadline


def enter_reduced(profile: QoSProfile, state: BFAState, now: float) -> Optional[BFAState]:
    """Apply one BFA step, opening a reduced epoch if currently at the initial
    rate. Returns None when the step is not allowed (minimum dwell running or
    tolerance exhausted). The reduced-epoch deadline is set on entry only;
    later steps inside the epoch do not extend it."""
    if in_initial_dwell(state, now):
        return None
    try:
        freq = try_reduce(profile, state)
    except CannotReduce:
        return None
    if state.phase is Phase.REDUCED:
        return BFAState(freq, Phase.REDUCED, state.phase_deadline)
    return BFAState(freq, Phase.REDUCED, now + profile.t_reduced)


def beacon_interval(state: BFAState) -> float:
    if state.b_freq_reduced < 1:
        raise ValueError("b_freq_reduced must be >= 1 Hz")
    return 1.0 / state.b_freq_reduced
