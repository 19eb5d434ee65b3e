"""Segment-size search and best-strategy selection over the closed-form models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .models import (
    BroadcastStrategy,
    Operation,
    Prediction,
    Strategy,
    predict,
    predict_broadcast,
    strategies_for,
)
from .params import PLogPParams

DEFAULT_BASE_DATATYPE = 4


def candidate_segment_sizes(
    params: PLogPParams, message_size: int, base_datatype: int = DEFAULT_BASE_DATATYPE
) -> list[int]:
    """Ascending candidate segment sizes for a message of ``message_size`` bytes.

    Powers of two in ``[base_datatype, m]``, gap-table samples in the same
    range, and ``m`` itself.
    """
    if base_datatype < 1:
        raise ValueError(f"base datatype size must be >= 1, got {base_datatype}")
    m = message_size
    cands = {m}
    p = 1
    while p <= m:
        if p >= base_datatype:
            cands.add(p)
        p <<= 1
    cands.update(s for s in params.gaps.sizes if base_datatype <= s <= m)
    return sorted(cands)


def optimize_segment(
    strategy: BroadcastStrategy,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    base_datatype: int = DEFAULT_BASE_DATATYPE,
) -> tuple[int, float]:
    """Segment size minimising the predicted time of a segmented broadcast.

    Ties go to the larger segment, so when segmentation does not help the
    whole message (k = 1) is returned.
    """
    strategy = BroadcastStrategy(strategy)
    if not strategy.segmented:
        raise ValueError(f"{strategy.value} is not a segmented strategy")
    best_s, best_t = None, None
    for s in reversed(candidate_segment_sizes(params, message_size, base_datatype)):
        t = predict_broadcast(strategy, params, nprocs, message_size, s).time
        if best_t is None or t < best_t:
            best_s, best_t = s, t
    return best_s, best_t


@dataclass(frozen=True)
class TuneResult:
    ranked: tuple[Prediction, ...]
    candidates_evaluated: int

    @property
    def best(self) -> Prediction:
        return self.ranked[0]


def _rank_key(pred: Prediction, order: dict) -> tuple:
    s = pred.segment.segment_size if pred.segment else pred.message_size
    return (pred.time, order[pred.strategy], -s)


def _resolve_strategies(operation: Operation, strategy_filter) -> list[Strategy]:
    allowed = strategies_for(operation)
    if strategy_filter is None:
        return allowed
    wanted = set(strategy_filter)
    stray = [s for s in wanted if s not in allowed]
    if stray:
        raise ValueError(f"strategies {stray} do not belong to {Operation(operation).value}")
    return [s for s in allowed if s in wanted]


def _best_prediction(
    strategy: Strategy, params, nprocs, message_size, base_datatype
) -> tuple[Prediction, int]:
    if isinstance(strategy, BroadcastStrategy) and strategy.segmented:
        s, _ = optimize_segment(strategy, params, nprocs, message_size, base_datatype)
        n = len(candidate_segment_sizes(params, message_size, base_datatype))
        return predict_broadcast(strategy, params, nprocs, message_size, s), n
    return predict(strategy, params, nprocs, message_size), 1


def select_best(
    operation: Operation,
    params: PLogPParams,
    nprocs: int,
    message_size: int,
    strategy_filter: Optional[Iterable[Strategy]] = None,
    base_datatype: int = DEFAULT_BASE_DATATYPE,
    exclude_bounds: bool = False,
) -> TuneResult:
    """Rank every allowed strategy by predicted time, best first.

    Segmented strategies are evaluated at their optimal segment size. The
    binary tree competes with its upper bound unless ``exclude_bounds``.
    """
    operation = Operation(operation)
    strategies = _resolve_strategies(operation, strategy_filter)
    if exclude_bounds:
        strategies = [s for s in strategies if s is not BroadcastStrategy.BINARY_TREE]
    if not strategies:
        raise ValueError("no strategies left to evaluate")
    order = {s: i for i, s in enumerate(strategies_for(operation))}
    preds, evaluated = [], 0
    for strategy in strategies:
        pred, n = _best_prediction(strategy, params, nprocs, message_size, base_datatype)
        preds.append(pred)
        evaluated += n
    preds.sort(key=lambda p: _rank_key(p, order))
    return TuneResult(ranked=tuple(preds), candidates_evaluated=evaluated)


@dataclass(frozen=True)
class SweepPoint:
    message_size: int
    predictions: dict[Strategy, Prediction]
    best: Strategy

    @property
    def times(self) -> dict[Strategy, float]:
        return {s: p.time for s, p in self.predictions.items()}


def sweep(
    operation: Operation,
    params: PLogPParams,
    nprocs: int,
    message_sizes: Sequence[int],
    strategies: Optional[Iterable[Strategy]] = None,
    base_datatype: int = DEFAULT_BASE_DATATYPE,
    segment_size: Optional[int] = None,
) -> list[SweepPoint]:
    """One SweepPoint per message size, in input order.

    Segmented strategies use ``segment_size`` when given, else the optimum.
    """
    operation = Operation(operation)
    if not message_sizes:
        raise ValueError("message size list is empty")
    chosen = _resolve_strategies(operation, strategies)
    if not chosen:
        raise ValueError("strategy set is empty")
    order = {s: i for i, s in enumerate(strategies_for(operation))}
    points = []
    for m in message_sizes:
        preds = {}
        for strategy in chosen:
            if segment_size is not None and isinstance(strategy, BroadcastStrategy) and strategy.segmented:
                preds[strategy] = predict_broadcast(strategy, params, nprocs, m, segment_size)
            else:
                preds[strategy] = _best_prediction(strategy, params, nprocs, m, base_datatype)[0]
        best = min(preds.values(), key=lambda p: _rank_key(p, order)).strategy
        points.append(SweepPoint(message_size=m, predictions=preds, best=best))
    return points
