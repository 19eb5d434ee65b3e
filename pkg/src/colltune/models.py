"""Closed-form pLogP completion times for broadcast and scatter strategies."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

from .params import PLogPParams, SegmentSpec, segments_for


class Operation(str, enum.Enum):
    BROADCAST = "broadcast"
    SCATTER = "scatter"


class BroadcastStrategy(enum.Enum):
    FLAT_TREE = "FlatTree"
    FLAT_TREE_RENDEZVOUS = "FlatTreeRendezvous"
    SEGMENTED_FLAT_TREE = "SegmentedFlatTree"
    CHAIN = "Chain"
    CHAIN_RENDEZVOUS = "ChainRendezvous"
    SEGMENTED_CHAIN = "SegmentedChain"
    BINARY_TREE = "BinaryTree"
    BINOMIAL_TREE = "BinomialTree"
    BINOMIAL_TREE_RENDEZVOUS = "BinomialTreeRendezvous"
    SEGMENTED_BINOMIAL_TREE = "SegmentedBinomialTree"

    @property
    def segmented(self) -> bool:
        return self in _SEGMENTED

    @property
    def rendezvous(self) -> bool:
        return self in _RENDEZVOUS

    @property
    def unsegmented(self) -> "BroadcastStrategy":
        """The plain strategy a segmented variant degenerates to at k = 1."""
        return _UNSEGMENTED.get(self, self)


class ScatterStrategy(enum.Enum):
    FLAT_TREE = "FlatTree"
    CHAIN = "Chain"
    BINOMIAL_TREE = "BinomialTree"

    @property
    def segmented(self) -> bool:
        return False

    @property
    def rendezvous(self) -> bool:
        return False


Strategy = Union[BroadcastStrategy, ScatterStrategy]

_SEGMENTED = frozenset(
    {
        BroadcastStrategy.SEGMENTED_FLAT_TREE,
        BroadcastStrategy.SEGMENTED_CHAIN,
        BroadcastStrategy.SEGMENTED_BINOMIAL_TREE,
    }
)
_RENDEZVOUS = frozenset(
    {
        BroadcastStrategy.FLAT_TREE_RENDEZVOUS,
        BroadcastStrategy.CHAIN_RENDEZVOUS,
        BroadcastStrategy.BINOMIAL_TREE_RENDEZVOUS,
    }
)
_UNSEGMENTED = {
    BroadcastStrategy.SEGMENTED_FLAT_TREE: BroadcastStrategy.FLAT_TREE,
    BroadcastStrategy.SEGMENTED_CHAIN: BroadcastStrategy.CHAIN,
    BroadcastStrategy.SEGMENTED_BINOMIAL_TREE: BroadcastStrategy.BINOMIAL_TREE,
}


def operation_of(strategy: Strategy) -> Operation:
    if isinstance(strategy, BroadcastStrategy):
        return Operation.BROADCAST
    return Operation.SCATTER


def strategies_for(operation: Operation) -> list[Strategy]:
    """All strategies of an operation, in table order."""
    if Operation(operation) is Operation.BROADCAST:
        return list(BroadcastStrategy)
    return list(ScatterStrategy)


def parse_strategy(operation: Operation, name: str) -> Strategy:
    """Look up a strategy by name, ignoring case and ``-``/``_`` separators."""
    key = name.replace("-", "").replace("_", "").lower()
    for strategy in strategies_for(operation):
        if strategy.value.lower() == key:
            return strategy
    names = ", ".join(s.value for s in strategies_for(operation))
    raise ValueError(f"unknown {Operation(operation).value} strategy {name!r} (expected one of {names})")


def floor_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"log2 undefined for {n}")
    return n.bit_length() - 1


def ceil_log2(n: int) -> int:
    if n < 1:
        raise ValueError(f"log2 undefined for {n}")
    return (n - 1).bit_length()


@dataclass(frozen=True)
class Prediction:
    strategy: Strategy
    nprocs: int
    message_size: int
    segment: Optional[SegmentSpec]
    time: float
    is_upper_bound: bool = False

    @property
    def operation(self) -> Operation:
        return operation_of(self.strategy)


def _check_common(nprocs: int, message_size: int) -> None:
    if not isinstance(nprocs, int) or nprocs < 2:
        raise ValueError(f"nprocs must be an integer >= 2, got {nprocs!r}")
    if not isinstance(message_size, int) or message_size < 1:
        raise ValueError(f"message size must be an integer >= 1, got {message_size!r}")


def predict_broadcast(
    strategy: BroadcastStrategy,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> Prediction:
    """Predicted broadcast completion time (seconds) for one strategy.

    Segmented strategies require ``segment_size``; the others reject it.
    Segment counts use ceiling division and every segment, including a short
    final one, is costed at g(s).
    """
    strategy = BroadcastStrategy(strategy)
    _check_common(nprocs, message_size)
    if strategy.segmented != (segment_size is not None):
        if strategy.segmented:
            raise ValueError(f"{strategy.value} requires a segment size")
        raise ValueError(f"{strategy.value} does not take a segment size")

    P, m, L, g = nprocs, message_size, params.latency, params.gap
    lo, hi = floor_log2(P), ceil_log2(P)
    segment = None
    S = BroadcastStrategy

    if strategy is S.FLAT_TREE:
        t = (P - 1) * g(m) + L
    elif strategy is S.FLAT_TREE_RENDEZVOUS:
        t = (P - 1) * g(m) + 2 * g(1) + 3 * L
    elif strategy is S.CHAIN:
        t = (P - 1) * (g(m) + L)
    elif strategy is S.CHAIN_RENDEZVOUS:
        t = (P - 1) * (g(m) + 2 * g(1) + 3 * L)
    elif strategy is S.BINARY_TREE:
        t = hi * (2 * g(m) + L)
    elif strategy is S.BINOMIAL_TREE:
        t = lo * g(m) + hi * L
    elif strategy is S.BINOMIAL_TREE_RENDEZVOUS:
        t = lo * g(m) + hi * (2 * g(1) + 3 * L)
    else:
        segment = segments_for(m, segment_size)
        s, k = segment.segment_size, segment.segment_count
        if strategy is S.SEGMENTED_FLAT_TREE:
            t = (P - 1) * (g(s) * k) + L
        elif strategy is S.SEGMENTED_CHAIN:
            t = (P - 1) * (g(s) + L) + g(s) * (k - 1)
        else:
            t = lo * g(s) * k + hi * L

    return Prediction(
        strategy=strategy,
        nprocs=P,
        message_size=m,
        segment=segment,
        time=t,
        is_upper_bound=strategy is S.BINARY_TREE,
    )


def predict_scatter(
    strategy: ScatterStrategy,
    params: PLogPParams,
    nprocs: int,
    block_size: int,
) -> Prediction:
    """Predicted scatter completion time; ``block_size`` is the per-process block."""
    strategy = ScatterStrategy(strategy)
    _check_common(nprocs, block_size)
    P, m, L, g = nprocs, block_size, params.latency, params.gap

    if strategy is ScatterStrategy.FLAT_TREE:
        t = (P - 1) * g(m) + L
    elif strategy is ScatterStrategy.CHAIN:
        t = sum(g(j * m) for j in range(1, P)) + (P - 1) * L
    else:
        rounds = ceil_log2(P)
        t = sum(g((1 << j) * m) for j in range(rounds)) + rounds * L

    return Prediction(strategy=strategy, nprocs=P, message_size=m, segment=None, time=t)


def predict(
    strategy: Strategy,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    segment_size: Optional[int] = None,
) -> Prediction:
    """Dispatch to :func:`predict_broadcast` or :func:`predict_scatter`."""
    if isinstance(strategy, BroadcastStrategy):
        return predict_broadcast(strategy, params, nprocs, message_size, segment_size)
    if segment_size is not None:
        raise ValueError("scatter strategies do not take a segment size")
    return predict_scatter(strategy, params, nprocs, message_size)
