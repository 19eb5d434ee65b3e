"""Discrete-event execution of a Schedule under pLogP rules.

Execution rules:

* a send of ``z`` bytes started at ``t`` keeps its sender busy until
  ``t + g(z)`` and is fully received at ``t + g(z) + L``;
* a node issues its sends strictly in ``sequence_rank`` order;
* a send with ``after_receive`` waits for that event's receive time;
* receivers are passive: no receive overhead, forwarding may start at the
  receive time.

This is deliberately a separate code path from the closed-form models so the
two can check each other.
"""

from __future__ import annotations

import heapq
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .models import (
    BroadcastStrategy,
    Operation,
    ScatterStrategy,
    Strategy,
    operation_of,
    predict,
)
from .params import PLogPParams, segments_for
from .schedules import EventKind, Schedule, ScheduleError, build_schedule


@dataclass(frozen=True)
class EventTiming:
    event_id: int
    send_start: float
    receive_time: float


@dataclass(frozen=True)
class SimResult:
    makespan: float
    node_complete: dict[int, float]
    event_log: tuple[EventTiming, ...]


def simulate(schedule: Schedule, params: PLogPParams) -> SimResult:
    events = {ev.id: ev for ev in schedule.events}
    for ev in schedule.events:
        if ev.payload_size < 1:
            raise ValueError(f"event {ev.id}: payload size must be >= 1")
        if ev.after_receive is not None and ev.after_receive not in events:
            raise ScheduleError(f"event {ev.id}: depends on unknown event {ev.after_receive}")

    queues = defaultdict(list)
    for ev in schedule.events:
        queues[ev.sender].append(ev)
    for q in queues.values():
        q.sort(key=lambda e: (e.sequence_rank, e.id))
    head = {node: 0 for node in queues}
    free_at = defaultdict(float)
    received: dict[int, float] = {}
    waiting = defaultdict(list)  # event id -> sends blocked on its receipt
    heap: list[tuple[float, int, int]] = []

    def offer(node: int) -> None:
        # Queue the next send of ``node`` if its dependency has been received.
        q = queues[node]
        if head[node] >= len(q):
            return
        ev = q[head[node]]
        dep = ev.after_receive
        if dep is not None and dep not in received:
            waiting[dep].append(node)
            return
        start = free_at[node]
        if dep is not None:
            start = max(start, received[dep])
        heapq.heappush(heap, (start, ev.sequence_rank, ev.id))

    for node in sorted(queues):
        offer(node)

    log = {}
    while heap:
        start, _, eid = heapq.heappop(heap)
        ev = events[eid]
        gap = params.gap(ev.payload_size)
        free_at[ev.sender] = start + gap
        received[eid] = start + gap + params.latency
        log[eid] = EventTiming(eid, start, received[eid])
        head[ev.sender] += 1
        offer(ev.sender)
        for node in waiting.pop(eid, ()):
            offer(node)

    if len(log) != len(events):
        stuck = sorted(set(events) - set(log))
        raise ScheduleError(f"schedule deadlocks; events never issued: {stuck[:10]}")

    arrivals = defaultdict(list)
    for ev in schedule.events:
        if ev.kind is EventKind.PAYLOAD:
            arrivals[ev.receiver].append((received[ev.id], ev.payload_size))
    node_complete = {0: 0.0}
    for node, goal in sorted(schedule.delivery_goal.items()):
        total = 0
        done = math.inf
        for t, size in sorted(arrivals[node]):
            total += size
            if total >= goal:
                done = t
                break
        if done == math.inf:
            raise ScheduleError(f"node {node} never meets its delivery goal of {goal} bytes")
        node_complete[node] = done

    return SimResult(
        makespan=max(node_complete.values()),
        node_complete=node_complete,
        event_log=tuple(log[eid] for eid in sorted(log)),
    )


def _is_pow2(n: int) -> bool:
    return n & (n - 1) == 0


def exact_equivalence_expected(
    strategy: Strategy, nprocs: int, message_size: int, segment_size: Optional[int] = None
) -> bool:
    """Whether simulation must reproduce the closed form exactly for these inputs.

    Segmented cases need ``segment_size`` to divide the message, since the
    simulator charges the short final segment at its true size. The flat-tree
    rendezvous formula charges a single handshake, which only matches a
    per-receiver handshake schedule at P = 2.
    """
    S = BroadcastStrategy
    if isinstance(strategy, ScatterStrategy):
        if strategy is ScatterStrategy.BINOMIAL_TREE:
            return _is_pow2(nprocs)
        return True
    if strategy.segmented and segment_size is not None and segment_size < message_size:
        if message_size % segment_size:
            return False
    if strategy is S.BINARY_TREE:
        return False
    if strategy is S.FLAT_TREE_RENDEZVOUS:
        return nprocs == 2
    if strategy in (S.BINOMIAL_TREE, S.BINOMIAL_TREE_RENDEZVOUS, S.SEGMENTED_BINOMIAL_TREE):
        return _is_pow2(nprocs)
    return True


def binomial_envelope(
    strategy: BroadcastStrategy,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> float:
    """Bound on |simulated - predicted| for binomial broadcasts at any P.

    The closed form is ``floor(log2 P) * H + ceil(log2 P) * R`` with a per-hop
    gap term ``H`` and a per-hop latency term ``R``. Simulation deviates from it
    by at most ``max(H, R)``; ``H + R`` is returned. For the plain binomial tree
    this is ``g(m) + L``.
    """
    g, L = params.gap, params.latency
    S = BroadcastStrategy
    if strategy is S.BINOMIAL_TREE:
        return g(message_size) + L
    if strategy is S.BINOMIAL_TREE_RENDEZVOUS:
        return g(message_size) + 2 * g(1) + 3 * L
    if strategy is S.SEGMENTED_BINOMIAL_TREE:
        seg = segments_for(message_size, segment_size)
        return seg.segment_count * g(seg.segment_size) + L
    raise ValueError(f"{strategy} is not a binomial broadcast")


@dataclass(frozen=True)
class ValidationRecord:
    operation: Operation
    strategy: Strategy
    nprocs: int
    message_size: int
    segment_size: Optional[int]
    segment_count: Optional[int]
    predicted: float
    simulated: float
    abs_error: float
    rel_error: float
    is_upper_bound: bool
    bound_respected: bool
    exact_expected: bool


def validate_strategy(
    strategy: Strategy,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> ValidationRecord:
    """Run the closed form and the simulator on identical inputs and compare."""
    pred = predict(strategy, params, nprocs, message_size, segment_size)
    sim = simulate(build_schedule(strategy, nprocs, message_size, segment_size), params)
    abs_error = abs(sim.makespan - pred.time)
    rel_error = abs_error / pred.time if pred.time > 0 else (0.0 if abs_error == 0 else math.inf)
    return ValidationRecord(
        operation=operation_of(strategy),
        strategy=strategy,
        nprocs=nprocs,
        message_size=message_size,
        segment_size=pred.segment.segment_size if pred.segment else None,
        segment_count=pred.segment.segment_count if pred.segment else None,
        predicted=pred.time,
        simulated=sim.makespan,
        abs_error=abs_error,
        rel_error=rel_error,
        is_upper_bound=pred.is_upper_bound,
        bound_respected=(sim.makespan <= pred.time) if pred.is_upper_bound else True,
        exact_expected=exact_equivalence_expected(strategy, nprocs, message_size, segment_size),
    )


__all__ = [
    "EventTiming",
    "SimResult",
    "ValidationRecord",
    "binomial_envelope",
    "exact_equivalence_expected",
    "simulate",
    "validate_strategy",
]
