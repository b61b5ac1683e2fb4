import pytest
from hypothesis import given, strategies as st

from hvnsim.core import BFAState, Phase, QoSProfile, RATKind, enter_reduced
from hvnsim.drrm import (
    Decision,
    DrrmState,
    InvalidTransition,
    LoadStatus,
    NlmConfig,
    SchemeKind,
    apply_decision,
    complete_vho,
    execute_vho,
    handle_neighbor_request,
    nlm_check,
    on_bfa_timer,
    qos_aware_decide,
    scheme_decide,
)
from hvnsim.radio import TxQueue

P = QoSProfile(10, 0.25, 0.5)


def queue(n, cap=64):
    q = TxQueue(cap)
    for i in range(n):
        q.push(i)
    return q


@pytest.mark.parametrize("n, status", [(0, LoadStatus.NORMAL), (54, LoadStatus.NORMAL), (55, LoadStatus.OVERLOAD), (64, LoadStatus.OVERLOAD)])
def test_nlm_threshold(n, status):
    assert nlm_check(queue(n), NlmConfig(0.85)) is status


def fresh():
    return DrrmState(BFAState.initial(P))


def test_normal_load_stays():
    assert qos_aware_decide(P, fresh(), LoadStatus.NORMAL, 1.0) is Decision.STAY


def test_escalation_reduce_then_neighbours():
    s = fresh()
    d = qos_aware_decide(P, s, LoadStatus.OVERLOAD, 1.0)
    assert d is Decision.REDUCE_LOCAL
    apply_decision(P, s, d, 1.0)
    assert s.bfa.b_freq_reduced == 8
    d = qos_aware_decide(P, s, LoadStatus.OVERLOAD, 1.5)
    assert d is Decision.REQUEST_NEIGHBORS
    apply_decision(P, s, d, 1.5)
    assert s.neighbor_flag


def test_exhausted_after_neighbour_round_hands_over():
    s = DrrmState(BFAState(4, Phase.REDUCED, 30.0), last_action=Decision.REQUEST_NEIGHBORS)
    assert qos_aware_decide(P, s, LoadStatus.OVERLOAD, 2.0) is Decision.VHO_TO_LTE


def test_exhausted_fresh_overload_asks_neighbours_first():
    s = DrrmState(BFAState(4, Phase.REDUCED, 30.0))
    assert qos_aware_decide(P, s, LoadStatus.OVERLOAD, 2.0) is Decision.REQUEST_NEIGHBORS


def test_return_to_adhoc_after_dwell():
    s = DrrmState(BFAState.initial(P), active_rat=RATKind.LTE, lte_dwell_until=10.0)
    assert qos_aware_decide(P, s, LoadStatus.NORMAL, 9.9) is Decision.STAY
    assert qos_aware_decide(P, s, LoadStatus.NORMAL, 10.0, projected_normal=False) is Decision.STAY
    assert qos_aware_decide(P, s, LoadStatus.NORMAL, 10.0) is Decision.VHO_TO_ADHOC


def test_decide_during_vho_rejected():
    s = execute_vho(fresh(), RATKind.LTE, 1.0, 0.5)
    with pytest.raises(InvalidTransition):
        qos_aware_decide(P, s, LoadStatus.OVERLOAD, 1.2)


def test_neighbour_request_with_headroom():
    s = fresh()
    assert handle_neighbor_request(P, s, 7, 1.0) is Decision.REDUCE_LOCAL
    assert s.bfa.b_freq_reduced == 8
    assert s.bfa.phase is Phase.REDUCED


def test_neighbour_request_when_exhausted():
    s = DrrmState(BFAState(4, Phase.REDUCED, 30.0))
    assert handle_neighbor_request(P, s, 7, 1.0) is None
    assert s.bfa == BFAState(4, Phase.REDUCED, 30.0)


def test_neighbour_request_deferred_through_dwell():
    s = DrrmState(BFAState(10, Phase.INITIAL, 12.0))
    assert handle_neighbor_request(P, s, 3, 11.0) is None
    assert s.bfa.b_freq_reduced == 10 and s.pending_neighbor_requests == {3}
    on_bfa_timer(P, s, 12.0)
    assert s.bfa.phase is Phase.REDUCED and s.bfa.b_freq_reduced == 8
    assert s.bfa.phase_deadline == pytest.approx(12.0 + P.t_reduced)
    assert not s.pending_neighbor_requests


def test_vho_lifecycle():
    s = execute_vho(fresh(), RATKind.LTE, 10.0, 0.5)
    assert s.vho_in_progress_until == 10.5 and s.active_rat is RATKind.ADHOC
    assert s.in_vho(10.3)
    with pytest.raises(InvalidTransition):
        execute_vho(s, RATKind.LTE, 10.2, 0.5)
    complete_vho(s, 10.5, 5.0)
    assert s.active_rat is RATKind.LTE and s.vho_count == 1 and s.lte_dwell_until == 15.5
    assert not s.in_vho(10.5)


def test_vho_to_current_rat_rejected():
    with pytest.raises(InvalidTransition):
        execute_vho(fresh(), RATKind.ADHOC, 0.0, 0.5)
    with pytest.raises(InvalidTransition):
        complete_vho(fresh(), 0.0, 5.0)


def test_periodic_toggles_only_on_epochs():
    kind = SchemeKind("periodic", 2.0)
    s = fresh()
    assert scheme_decide(kind, P, s, LoadStatus.OVERLOAD, 1.0) is Decision.STAY
    assert scheme_decide(kind, P, s, LoadStatus.NORMAL, 2.0, epoch=True) is Decision.VHO_TO_LTE
    s.active_rat = RATKind.LTE
    assert scheme_decide(kind, P, s, LoadStatus.NORMAL, 4.0, epoch=True) is Decision.VHO_TO_ADHOC


def test_nolte_never_hands_over():
    assert scheme_decide(SchemeKind("nolte"), P, fresh(), LoadStatus.OVERLOAD, 1.0, epoch=True) is Decision.STAY


def test_nobfa_hands_over_immediately():
    assert scheme_decide(SchemeKind("nobfa"), P, fresh(), LoadStatus.OVERLOAD, 1.0) is Decision.VHO_TO_LTE


@pytest.mark.parametrize("text, expect", [("qos", "qos"), ("periodic:2", "periodic:2"), ("periodic", "periodic:4"), ("NoLte", "nolte")])
def test_scheme_parse(text, expect):
    assert str(SchemeKind.parse(text)) == expect


@pytest.mark.parametrize("text", ["bogus", "periodic:1", "periodic:11", "qos:3"])
def test_scheme_parse_rejects(text):
    with pytest.raises(ValueError):
        SchemeKind.parse(text)


@given(st.lists(st.sampled_from([LoadStatus.NORMAL, LoadStatus.OVERLOAD]), min_size=1, max_size=40))
def test_qos_never_hands_over_while_local_step_is_open(loads):
    """A VHO to LTE only follows a neighbour round, and only when no local
    step can be entered at that instant."""
    s = fresh()
    now = 0.0
    for load in loads:
        now += 0.5
        while s.bfa.phase_deadline is not None and s.bfa.phase_deadline <= now:
            on_bfa_timer(P, s, s.bfa.phase_deadline)
        if s.active_rat is RATKind.LTE:
            break
        prev = s.last_action
        d = qos_aware_decide(P, s, load, now)
        if d is Decision.VHO_TO_LTE:
            assert prev is Decision.REQUEST_NEIGHBORS
            assert enter_reduced(P, s.bfa, now) is None
            break
        apply_decision(P, s, d, now)
