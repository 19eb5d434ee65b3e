"""Explicit send-event DAGs realizing each broadcast/scatter strategy.

A schedule lists every message a strategy sends. Each send names at most one
incoming event it must wait for (``after_receive``) and a ``sequence_rank``
that orders the sends issued by the same node. The simulator executes these
under pLogP rules; the builders here decide nothing about timing.

Tree shapes:

* broadcast binomial: doubling scheme, node ``j < 2**r`` sends to ``j + 2**r``
  in round ``r``;
* scatter binomial: contiguous subtrees, node ``j`` sends to ``j + 2**r`` for
  every ``2**r`` below its lowest set bit, largest subtree first;
* binary: complete binary tree in level order, left child first.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Union

from .models import (
    BroadcastStrategy,
    Operation,
    ScatterStrategy,
    Strategy,
    ceil_log2,
)
from .params import SegmentSpec, segments_for


class EventKind(str, enum.Enum):
    PAYLOAD = "payload"
    RENDEZVOUS_REQUEST = "rendezvous_request"
    RENDEZVOUS_ACK = "rendezvous_ack"


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class SendEvent:
    id: int
    sender: int
    receiver: int
    payload_size: int
    kind: EventKind = EventKind.PAYLOAD
    after_receive: Optional[int] = None
    sequence_rank: int = 0


@dataclass(frozen=True)
class Schedule:
    operation: Operation
    strategy: Strategy
    nprocs: int
    message_size: int
    segment: Optional[SegmentSpec]
    events: tuple[SendEvent, ...]
    delivery_goal: dict[int, int] = field(hash=False)

    def validate(self) -> None:
        """Check structural invariants; raise ScheduleError on the first violation."""
        by_id = {}
        ranks = set()
        for ev in self.events:
            if ev.id in by_id:
                raise ScheduleError(f"duplicate event id {ev.id}")
            by_id[ev.id] = ev
            for node in (ev.sender, ev.receiver):
                if not 0 <= node < self.nprocs:
                    raise ScheduleError(f"event {ev.id}: node {node} outside [0, {self.nprocs})")
            if ev.sender == ev.receiver:
                raise ScheduleError(f"event {ev.id}: sender equals receiver")
            if ev.payload_size < 1:
                raise ScheduleError(f"event {ev.id}: payload size must be >= 1")
            if ev.kind is not EventKind.PAYLOAD and ev.payload_size != 1:
                raise ScheduleError(f"event {ev.id}: handshake messages carry 1 byte")
            if (ev.sender, ev.sequence_rank) in ranks:
                raise ScheduleError(
                    f"event {ev.id}: sequence rank {ev.sequence_rank} reused at node {ev.sender}"
                )
            ranks.add((ev.sender, ev.sequence_rank))
        for ev in self.events:
            dep = ev.after_receive
            if dep is None:
                continue
            if dep not in by_id:
                raise ScheduleError(f"event {ev.id}: depends on unknown event {dep}")
            if by_id[dep].receiver != ev.sender:
                raise ScheduleError(
                    f"event {ev.id}: dependency {dep} is not received by sender {ev.sender}"
                )
        topological_order(self)
        received = defaultdict(int)
        for ev in self.events:
            if ev.kind is EventKind.PAYLOAD:
                received[ev.receiver] += ev.payload_size
        for node, goal in self.delivery_goal.items():
            if received[node] < goal:
                raise ScheduleError(f"node {node} receives {received[node]} of {goal} bytes")

    def payload_bytes(self) -> int:
        return sum(ev.payload_size for ev in self.events if ev.kind is EventKind.PAYLOAD)

    def total_bytes(self) -> int:
        return sum(ev.payload_size for ev in self.events)

    def to_text(self) -> str:
        """Diagnostic dump, one event per line: id sender receiver size kind dependency."""
        lines = [
            f"# {self.operation.value} {self.strategy.value} P={self.nprocs} m={self.message_size}"
            + (
                f" s={self.segment.segment_size} k={self.segment.segment_count}"
                if self.segment
                else ""
            )
        ]
        for ev in self.events:
            dep = "-" if ev.after_receive is None else str(ev.after_receive)
            lines.append(
                f"{ev.id} {ev.sender} {ev.receiver} {ev.payload_size} {ev.kind.value} {dep}"
            )
        return "\n".join(lines) + "\n"


def topological_order(schedule: Schedule) -> list[int]:
    """Event ids in an order respecting both dependency kinds.

    Edges are ``after_receive -> event`` and ``previous send of the same
    sender -> event``. Raises ScheduleError on a cycle.
    """
    preds: dict[int, list[int]] = {ev.id: [] for ev in schedule.events}
    per_sender = defaultdict(list)
    for ev in schedule.events:
        per_sender[ev.sender].append(ev)
        if ev.after_receive is not None:
            preds[ev.id].append(ev.after_receive)
    for sends in per_sender.values():
        sends.sort(key=lambda e: e.sequence_rank)
        for a, b in zip(sends, sends[1:]):
            preds[b.id].append(a.id)

    succs = defaultdict(list)
    indegree = {}
    for eid, ps in preds.items():
        indegree[eid] = len(ps)
        for p in ps:
            succs[p].append(eid)
    ready = sorted(eid for eid, d in indegree.items() if d == 0)
    order = []
    while ready:
        eid = ready.pop(0)
        order.append(eid)
        for nxt in succs[eid]:
            indegree[nxt] -= 1
            if indegree[nxt] == 0:
                ready.append(nxt)
    if len(order) != len(preds):
        raise ScheduleError("schedule dependencies contain a cycle")
    return order


class _Builder:
    def __init__(self):
        self.events: list[SendEvent] = []
        self._next_rank = defaultdict(int)

    def send(self, sender, receiver, size, kind=EventKind.PAYLOAD, after=None) -> int:
        eid = len(self.events)
        rank = self._next_rank[sender]
        self._next_rank[sender] += 1
        self.events.append(SendEvent(eid, sender, receiver, size, kind, after, rank))
        return eid

    def hop(self, sender, receiver, size, after=None, rendezvous=False) -> int:
        """One payload transfer, optionally wrapped in a request/ack handshake."""
        if rendezvous:
            req = self.send(sender, receiver, 1, EventKind.RENDEZVOUS_REQUEST, after)
            after = self.send(receiver, sender, 1, EventKind.RENDEZVOUS_ACK, req)
        return self.send(sender, receiver, size, after=after)


def build_broadcast_schedule(
    strategy: BroadcastStrategy,
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> Schedule:
    strategy = BroadcastStrategy(strategy)
    _check(nprocs, message_size)
    if strategy.segmented != (segment_size is not None):
        raise ValueError(
            f"{strategy.value} "
            + ("requires a segment size" if strategy.segmented else "does not take a segment size")
        )
    P, m = nprocs, message_size
    S = BroadcastStrategy
    b = _Builder()
    rdv = strategy.rendezvous
    segment = segments_for(m, segment_size) if strategy.segmented else None
    # last payload event delivered to each node
    got: dict[int, int] = {}

    if strategy in (S.FLAT_TREE, S.FLAT_TREE_RENDEZVOUS):
        for r in range(1, P):
            b.hop(0, r, m, rendezvous=rdv)
    elif strategy in (S.CHAIN, S.CHAIN_RENDEZVOUS):
        for i in range(P - 1):
            got[i + 1] = b.hop(i, i + 1, m, after=got.get(i), rendezvous=rdv)
    elif strategy is S.BINARY_TREE:
        for parent in range(P):
            for child in (2 * parent + 1, 2 * parent + 2):
                if child < P:
                    got[child] = b.send(parent, child, m, after=got.get(parent))
    elif strategy in (S.BINOMIAL_TREE, S.BINOMIAL_TREE_RENDEZVOUS):
        for j, child in _binomial_broadcast_edges(P):
            got[child] = b.hop(j, child, m, after=got.get(j), rendezvous=rdv)
    elif strategy is S.SEGMENTED_FLAT_TREE:
        for r in range(1, P):
            for size in segment.sizes(m):
                b.send(0, r, size)
    elif strategy is S.SEGMENTED_CHAIN:
        incoming: dict[int, list[int]] = {0: [None] * segment.segment_count}
        for i in range(P - 1):
            incoming[i + 1] = [
                b.send(i, i + 1, size, after=dep)
                for size, dep in zip(segment.sizes(m), incoming[i])
            ]
    else:  # segmented binomial, store-and-forward
        for j, child in _binomial_broadcast_edges(P):
            dep = got.get(j)
            for size in segment.sizes(m):
                last = b.send(j, child, size, after=dep)
                dep = None
            got[child] = last

    return Schedule(
        operation=Operation.BROADCAST,
        strategy=strategy,
        nprocs=P,
        message_size=m,
        segment=segment,
        events=tuple(b.events),
        delivery_goal={i: m for i in range(1, P)},
    )


def _binomial_broadcast_edges(nprocs: int) -> list[tuple[int, int]]:
    """(parent, child) pairs of the doubling tree, in round order."""
    edges = []
    for r in range(ceil_log2(nprocs)):
        step = 1 << r
        for j in range(step):
            if j + step < nprocs:
                edges.append((j, j + step))
    return edges


def binomial_scatter_children(node: int, nprocs: int) -> list[tuple[int, int]]:
    """``(child, subtree_size)`` for ``node`` in the contiguous binomial tree,
    largest subtree first."""
    limit = node & -node if node else 1 << ceil_log2(nprocs)
    children = []
    step = limit >> 1
    while step:
        child = node + step
        if child < nprocs:
            children.append((child, min(child + step, nprocs) - child))
        step >>= 1
    # clipping at nprocs can shrink a nominally larger subtree; stable sort keeps
    # round order among equal sizes
    children.sort(key=lambda c: -c[1])
    return children


def build_scatter_schedule(strategy: ScatterStrategy, nprocs: int, block_size: int) -> Schedule:
    """Scatter schedule; the root keeps its own block at no cost."""
    strategy = ScatterStrategy(strategy)
    _check(nprocs, block_size)
    P, m = nprocs, block_size
    b = _Builder()

    if strategy is ScatterStrategy.FLAT_TREE:
        for r in range(1, P):
            b.send(0, r, m)
    elif strategy is ScatterStrategy.CHAIN:
        dep = None
        for i in range(P - 1):
            dep = b.send(i, i + 1, (P - 1 - i) * m, after=dep)
    else:
        got: dict[int, int] = {}
        queue = [0]
        while queue:
            node = queue.pop(0)
            for child, count in binomial_scatter_children(node, P):
                got[child] = b.send(node, child, count * m, after=got.get(node))
                queue.append(child)

    return Schedule(
        operation=Operation.SCATTER,
        strategy=strategy,
        nprocs=P,
        message_size=m,
        segment=None,
        events=tuple(b.events),
        delivery_goal={i: m for i in range(1, P)},
    )


def build_schedule(
    strategy: Union[BroadcastStrategy, ScatterStrategy],
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> Schedule:
    if isinstance(strategy, BroadcastStrategy):
        return build_broadcast_schedule(strategy, nprocs, message_size, segment_size)
    if segment_size is not None:
        raise ValueError("scatter strategies do not take a segment size")
    return build_scatter_schedule(strategy, nprocs, message_size)


def _check(nprocs: int, message_size: int) -> None:
    if not isinstance(nprocs, int) or nprocs < 2:
        raise ValueError(f"nprocs must be an integer >= 2, got {nprocs!r}")
    if not isinstance(message_size, int) or message_size < 1:
        raise ValueError(f"message size must be an integer >= 1, got {message_size!r}")
