from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from colltune.models import BroadcastStrategy as B, ScatterStrategy as S
from colltune.schedules import (
    EventKind,
    Schedule,
    ScheduleError,
    SendEvent,
    build_broadcast_schedule,
    build_scatter_schedule,
    topological_order,
)

GOLDEN = Path(__file__).parent / "golden"


def _payloads(schedule):
    return [e for e in schedule.events if e.kind is EventKind.PAYLOAD]


def _hops(schedule):
    """Longest chain of payload events linked by after_receive."""
    by_id = {e.id: e for e in schedule.events}
    depth = {}
    for eid in topological_order(schedule):
        e = by_id[eid]
        d = depth.get(e.after_receive, 0) if e.after_receive is not None else 0
        depth[eid] = d + (e.kind is EventKind.PAYLOAD)
    return max(depth.values())


def _doubling_tree(P):
    """Oracle: each informed process recruits the next uninformed one, per round."""
    informed, edges = [0], []
    while len(informed) < P:
        recruits = []
        for node in informed:
            target = node + len(informed)
            if target < P:
                edges.append((node, target))
                recruits.append(target)
        informed += recruits
    return edges


def test_flat_tree_example():
    sched = build_broadcast_schedule(B.FLAT_TREE, 4, 1000)
    assert [(e.sender, e.receiver, e.payload_size) for e in sched.events] == [
        (0, 1, 1000),
        (0, 2, 1000),
        (0, 3, 1000),
    ]
    assert [e.sequence_rank for e in sched.events] == [0, 1, 2]


def test_chain_example():
    a, b = build_broadcast_schedule(B.CHAIN, 3, 1000).events
    assert (a.sender, a.receiver, a.after_receive) == (0, 1, None)
    assert (b.sender, b.receiver, b.after_receive) == (1, 2, a.id)


def test_binomial_p8_example():
    sched = build_broadcast_schedule(B.BINOMIAL_TREE, 8, 1000)
    assert len(sched.events) == 7
    assert sorted(e.receiver for e in sched.events if e.sender == 1) == [3, 5]
    assert _hops(sched) == 3


@pytest.mark.parametrize("P", list(range(2, 40)) + [64, 100])
def test_binomial_matches_recruit_oracle(P):
    sched = build_broadcast_schedule(B.BINOMIAL_TREE, P, 10)
    assert sorted((e.sender, e.receiver) for e in sched.events) == sorted(_doubling_tree(P))


def test_binomial_root_sends_in_round_order():
    sched = build_broadcast_schedule(B.BINOMIAL_TREE, 16, 10)
    root = sorted((e for e in sched.events if e.sender == 0), key=lambda e: e.sequence_rank)
    assert [e.receiver for e in root] == [1, 2, 4, 8]


@pytest.mark.parametrize("n", range(1, 8))
def test_binomial_power_of_two_rounds(n):
    P = 2**n
    sched = build_broadcast_schedule(B.BINOMIAL_TREE, P, 10)
    assert _hops(sched) == n
    last = next(e for e in sched.events if e.receiver == P - 1)
    assert last.sender == P - 1 - 2 ** (n - 1)


def test_scatter_flat_example():
    sched = build_scatter_schedule(S.FLAT_TREE, 4, 1000)
    assert [e.payload_size for e in sched.events] == [1000] * 3


def test_scatter_chain_example():
    sched = build_scatter_schedule(S.CHAIN, 4, 1000)
    assert [(e.sender, e.receiver, e.payload_size) for e in sched.events] == [
        (0, 1, 3000),
        (1, 2, 2000),
        (2, 3, 1000),
    ]


def _scatter_blocks_oracle(P):
    """Oracle: recursive halving of the contiguous range [lo, hi) owned by lo."""
    out = []

    def split(lo, hi):
        size = hi - lo
        if size <= 1:
            return
        half = 1
        while half * 2 < size:
            half *= 2
        mid = lo + half
        out.append((lo, mid, hi - mid))
        split(mid, hi)
        split(lo, mid)

    span = 1
    while span < P:
        span *= 2
    split(0, P)
    return out


def test_scatter_binomial_example():
    sched = build_scatter_schedule(S.BINOMIAL_TREE, 4, 1000)
    root = sorted((e for e in sched.events if e.sender == 0), key=lambda e: e.sequence_rank)
    assert [(e.receiver, e.payload_size) for e in root] == [(2, 2000), (1, 1000)]
    (fwd,) = [e for e in sched.events if e.sender == 2]
    assert (fwd.receiver, fwd.payload_size, fwd.after_receive) == (3, 1000, root[0].id)


@pytest.mark.parametrize("P", range(2, 40))
def test_scatter_binomial_matches_halving_oracle(P):
    sched = build_scatter_schedule(S.BINOMIAL_TREE, P, 1)
    got = sorted((e.sender, e.receiver, e.payload_size) for e in sched.events)
    assert got == sorted(_scatter_blocks_oracle(P))


def test_scatter_binomial_largest_first():
    sched = build_scatter_schedule(S.BINOMIAL_TREE, 13, 1)
    by_sender = {}
    for e in sorted(sched.events, key=lambda e: e.sequence_rank):
        by_sender.setdefault(e.sender, []).append(e.payload_size)
    for sizes in by_sender.values():
        assert sizes == sorted(sizes, reverse=True)


def test_rendezvous_wraps_every_payload():
    sched = build_broadcast_schedule(B.FLAT_TREE_RENDEZVOUS, 4, 100)
    kinds = [e.kind for e in sorted(sched.events, key=lambda e: e.id) if e.sender == 0]
    assert kinds == [EventKind.RENDEZVOUS_REQUEST, EventKind.PAYLOAD] * 3
    for e in sched.events:
        if e.kind is not EventKind.PAYLOAD:
            assert e.payload_size == 1


def test_segmented_flat_tree_order():
    sched = build_broadcast_schedule(B.SEGMENTED_FLAT_TREE, 3, 1000, 400)
    assert [(e.receiver, e.payload_size) for e in sched.events] == [
        (1, 400), (1, 400), (1, 200), (2, 400), (2, 400), (2, 200)
    ]


def test_segmented_binomial_store_and_forward():
    sched = build_broadcast_schedule(B.SEGMENTED_BINOMIAL_TREE, 4, 1000, 250)
    into1 = [e for e in sched.events if e.receiver == 1]
    from1 = [e for e in sched.events if e.sender == 1]
    assert len(into1) == len(from1) == 4
    assert from1[0].after_receive == into1[-1].id
    assert all(e.after_receive is None for e in from1[1:])


@pytest.mark.parametrize(
    "name, build",
    [
        ("bcast_binomial_rdv_p4", lambda: build_broadcast_schedule(B.BINOMIAL_TREE_RENDEZVOUS, 4, 1000)),
        ("bcast_segchain_p3_m1000_s300", lambda: build_broadcast_schedule(B.SEGMENTED_CHAIN, 3, 1000, 300)),
        ("bcast_binary_p7", lambda: build_broadcast_schedule(B.BINARY_TREE, 7, 1000)),
        ("scatter_binomial_p6", lambda: build_scatter_schedule(S.BINOMIAL_TREE, 6, 100)),
        ("bcast_chain_rdv_p3", lambda: build_broadcast_schedule(B.CHAIN_RENDEZVOUS, 3, 64)),
    ],
)
def test_golden_text(name, build):
    assert build().to_text() == (GOLDEN / f"{name}.txt").read_text()


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_broadcast_schedule(B.SEGMENTED_CHAIN, 4, 100)
    with pytest.raises(ValueError):
        build_broadcast_schedule(B.CHAIN, 4, 100, 10)
    with pytest.raises(ValueError):
        build_scatter_schedule(S.CHAIN, 1, 100)


def test_validate_detects_cycle():
    events = (
        SendEvent(0, 0, 1, 10, after_receive=1, sequence_rank=0),
        SendEvent(1, 1, 0, 10, after_receive=0, sequence_rank=0),
    )
    sched = Schedule("broadcast", B.CHAIN, 2, 10, None, events, {1: 10})
    with pytest.raises(ScheduleError, match="cycle"):
        sched.validate()


def test_validate_detects_missing_dependency():
    events = (SendEvent(0, 0, 1, 10, after_receive=7),)
    sched = Schedule("broadcast", B.CHAIN, 2, 10, None, events, {1: 10})
    with pytest.raises(ScheduleError, match="unknown event"):
        sched.validate()


# properties -------------------------------------------------------------------


def _broadcast_case():
    return st.tuples(
        st.sampled_from(list(B)), st.integers(2, 70), st.integers(1, 5000), st.integers(1, 6000)
    )


@given(_broadcast_case())
def test_broadcast_invariants(case):
    strategy, P, m, s = case
    sched = build_broadcast_schedule(strategy, P, m, s if strategy.segmented else None)
    sched.validate()
    assert sched.delivery_goal == {i: m for i in range(1, P)}
    if strategy.rendezvous:
        assert sched.total_bytes() > (P - 1) * m
    else:
        assert sched.total_bytes() == (P - 1) * m
    assert sched.payload_bytes() == (P - 1) * m


@given(st.sampled_from(list(S)), st.integers(2, 70), st.integers(1, 5000))
def test_scatter_invariants(strategy, P, m):
    sched = build_scatter_schedule(strategy, P, m)
    sched.validate()
    assert len(sched.events) == P - 1
    assert sorted(e.receiver for e in sched.events) == list(range(1, P))
    if strategy is S.FLAT_TREE:
        assert sched.payload_bytes() == (P - 1) * m
    elif strategy is S.CHAIN:
        assert sched.payload_bytes() == sum(j * m for j in range(1, P))
