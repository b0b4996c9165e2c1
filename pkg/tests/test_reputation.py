import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from datamarket.core import EventKind
from datamarket.reputation import (
    ORCHESTRATOR,
    OutcomeEdge,
    ReputationLedger,
    ReputationParams,
    SelfTransaction,
    UnknownMember,
    note_subsample_reject,
    record_outcome,
    record_violation,
    reputation_from_edges,
    reputation_of,
)

P = ReputationParams()


def ledger_with(*members):
    led = ReputationLedger()
    for m in members:
        led.add_member(m)
    return led


def test_new_member_at_base():
    assert reputation_of(ledger_with("a"), "a") == 0.5


def test_unknown_member():
    with pytest.raises(UnknownMember):
        reputation_of(ledger_with("a"), "z")


def test_later_edges_weigh_less():
    led = ledger_with("a", "b")
    led.add_edge(OutcomeEdge("a", "b", 1, 0.5, 0))
    led.add_edge(OutcomeEdge("a", "b", 1, 0.5, 1))
    assert reputation_of(led, "a") == pytest.approx(0.5 + 0.5 / 6 + 0.5 / 7)


def test_low_weight_success_never_dilutes():
    led = ledger_with("a", "b")
    for t in range(4):
        led.add_edge(OutcomeEdge("a", "b", 1, 0.9, t))
    before = reputation_of(led, "a")
    led.add_edge(OutcomeEdge("a", "b", 1, 0.0, 4))
    assert reputation_of(led, "a") == before


def test_single_success_and_violation():
    led = ledger_with("a", "b")
    led.add_edge(OutcomeEdge("a", "b", 1, 0.5, 0))
    assert reputation_of(led, "a") == pytest.approx(0.5 + 0.5 / 6)
    led.add_edge(OutcomeEdge("b", "a", -1, 0.5, 0))
    assert reputation_of(led, "b") == pytest.approx(0.5 - 0.5 / 6)


def test_symmetric_success_between_fresh_members():
    led = ledger_with("a", "b")
    notices = record_outcome(led, "a", "b", 1, 0)
    assert reputation_of(led, "a") == pytest.approx(0.58333, abs=1e-4)
    assert reputation_of(led, "b") == pytest.approx(0.58333, abs=1e-4)
    ups = [p for k, p in notices if k is EventKind.REPUTATION_UPDATED]
    assert {p["member"] for p in ups} == {"a", "b"}
    assert all(p["weight"] == 0.5 and p["old"] == 0.5 for p in ups)


def test_self_transaction():
    with pytest.raises(SelfTransaction):
        record_outcome(ledger_with("a"), "a", "a", 1, 0)


def violations_to_expel(params, partner_rep=0.5):
    """Iterate the score formula until it drops below the threshold."""
    total, n = 0.0, 0
    while True:
        n += 1
        total -= partner_rep / (n + params.smoothing)
        if params.base + total < params.expulsion_threshold:
            return n


def test_repeated_violations_expel():
    needed = violations_to_expel(P)
    led = ledger_with("junk")
    for i in range(needed):
        led.add_member(f"buyer{i}")
        notices = record_violation(led, "junk", f"buyer{i}", i)
        kinds = [k for k, _ in notices]
        if i < needed - 1:
            assert EventKind.MEMBER_EXPELLED not in kinds
    assert EventKind.MEMBER_EXPELLED in kinds
    assert reputation_of(led, "junk") < 0.2
    assert needed == 5


def test_unjustified_rejects_suspend_at_limit():
    led = ledger_with("farmer")
    for i in range(1, 6):
        notices = note_subsample_reject(led, "farmer", False, i)
        suspended = any(k is EventKind.SUBSAMPLING_SUSPENDED for k, _ in notices)
        assert suspended == (i == 5)
    assert led.unjustified_rejects["farmer"] == 5
    expected = 0.5 - sum(0.5 / (i + 5) for i in range(1, 6))
    assert reputation_of(led, "farmer") == pytest.approx(expected)
    assert all(e.dst == ORCHESTRATOR and e.partner_rep_at_time == 0.5 for e in led.edges)


def test_justified_reject_no_effect():
    led = ledger_with("b")
    assert note_subsample_reject(led, "b", True, 0) == []
    assert led.unjustified_rejects == {} and led.edges == []


def test_reject_unknown_member():
    with pytest.raises(UnknownMember):
        note_subsample_reject(ledger_with("a"), "z", False, 0)


def test_partner_weighting_strict():
    hi, lo = ledger_with("a", "p"), ledger_with("a", "p")
    hi.add_edge(OutcomeEdge("a", "p", 1, 0.9, 0))
    lo.add_edge(OutcomeEdge("a", "p", 1, 0.3, 0))
    assert reputation_of(hi, "a") > reputation_of(lo, "a")


MEMBERS = ["m0", "m1", "m2", "m3", "m4"]
ops = st.lists(st.tuples(st.sampled_from(["ok", "bad", "reject"]),
                         st.sampled_from(MEMBERS), st.sampled_from(MEMBERS)),
               max_size=40)


@given(ops)
@settings(max_examples=300)
def test_random_ledgers(seq):
    led = ledger_with(*MEMBERS)
    for tick, (op, a, b) in enumerate(seq):
        before = {m: reputation_of(led, m) for m in MEMBERS}
        if op == "reject":
            note_subsample_reject(led, a, False, tick)
            assert reputation_of(led, a) <= before[a]
            continue
        if a == b:
            continue
        if op == "ok":
            record_outcome(led, a, b, 1, tick)
            assert reputation_of(led, a) >= before[a]
            assert reputation_of(led, b) >= before[b]
        else:
            record_violation(led, a, b, tick)
            assert reputation_of(led, a) <= before[a]
            assert reputation_of(led, b) == before[b]
        for m in MEMBERS:
            assert 0.0 <= reputation_of(led, m) <= 1.0
    for m in MEMBERS:
        assert reputation_from_edges(list(led.edges), m) == reputation_of(led, m)


def test_params_validation():
    with pytest.raises(ValueError):
        ReputationParams(base=1.0)
    with pytest.raises(ValueError):
        ReputationParams(expulsion_threshold=0.6)
