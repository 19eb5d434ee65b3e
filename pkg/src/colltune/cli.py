"""Command-line front end: predict, tune, sweep, simulate, validate, gen-params.

Exit codes: 0 success, 1 domain/validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from typing import Optional, Sequence

from . import __version__
from .models import (
    BroadcastStrategy,
    Operation,
    parse_strategy,
    predict,
    strategies_for,
)
from .params import ParamsError, read_params, sample_sizes_pow2, save_params, synth_params
from .schedules import build_schedule
from .simulator import simulate, validate_strategy
from .tuner import DEFAULT_BASE_DATATYPE, optimize_segment, select_best, sweep

log = logging.getLogger("colltune")

REPORT_COLUMNS = (
    "operation",
    "strategy",
    "P",
    "m",
    "s",
    "k",
    "predicted_s",
    "simulated_s",
    "abs_error",
    "is_upper_bound",
)
EVENT_LOG_COLUMNS = ("event_id", "sender", "receiver", "bytes", "kind", "send_start_s", "receive_s")
EXACT_REL_TOL = 1e-9

PRESETS = {
    "fast-ethernet-100": {"overhead": 3.0e-5, "bandwidth": 1.25e7, "latency": 5.0e-5},
}
PRESET_MAX_SAMPLE = 4 * 1024 * 1024


class DomainError(Exception):
    pass


def fmt_seconds(x: float) -> str:
    return f"{x:.5e}"


def _round6(x: float) -> float:
    return float(fmt_seconds(x))


def report_row(pred, simulated=None, **extra) -> dict:
    seg = pred.segment
    row = {
        "operation": pred.operation.value,
        "strategy": pred.strategy.value,
        "P": pred.nprocs,
        "m": pred.message_size,
        "s": seg.segment_size if seg else None,
        "k": seg.segment_count if seg else None,
        "predicted_s": pred.time,
        "simulated_s": simulated,
        "abs_error": abs(simulated - pred.time) if simulated is not None else None,
        "is_upper_bound": pred.is_upper_bound,
    }
    row.update(extra)
    return row


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_seconds(value)
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return _round6(value)
    return value


def write_report(rows: Sequence[dict], columns: Sequence[str], fmt: str, out) -> None:
    if fmt == "json":
        doc = [{c: _json_value(row.get(c)) for c in columns} for row in rows]
        out.write(json.dumps(doc, indent=2) + "\n")
        return
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_cell(row.get(c)) for c in columns])


# argument types -------------------------------------------------------------


def _int_at_least(lo: int, what: str):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"{what} must be an integer, got {text!r}") from None
        if value < lo:
            raise argparse.ArgumentTypeError(f"{what} must be >= {lo}, got {value}")
        return value

    return parse


def _positive_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value > 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be positive and finite, got {text}")
    return value


def _nonneg_float(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not value >= 0 or value == float("inf"):
        raise argparse.ArgumentTypeError(f"must be non-negative and finite, got {text}")
    return value


def _size_list(text: str) -> list[int]:
    parse = _int_at_least(1, "message size")
    return [parse(t) for t in text.split(",") if t.strip()]


def _size_range(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX:FACTOR, got {text!r}")
    lo = _int_at_least(1, "range minimum")(parts[0])
    hi = _int_at_least(1, "range maximum")(parts[1])
    factor = _int_at_least(2, "range factor")(parts[2])
    if hi < lo:
        raise argparse.ArgumentTypeError(f"range maximum {hi} below minimum {lo}")
    sizes = []
    m = lo
    while m <= hi:
        sizes.append(m)
        m *= factor
    return sizes


def _nprocs_range(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected MIN:MAX, got {text!r}")
    lo = _int_at_least(2, "nprocs")(parts[0])
    hi = _int_at_least(2, "nprocs")(parts[1])
    if hi < lo:
        raise argparse.ArgumentTypeError(f"range maximum {hi} below minimum {lo}")
    return list(range(lo, hi + 1))


# parser ---------------------------------------------------------------------


def _common(p: argparse.ArgumentParser, nprocs_required: bool = True) -> None:
    p.add_argument("--op", required=True, choices=[o.value for o in Operation])
    p.add_argument("--params", required=True, metavar="FILE", help="pLogP parameter file (JSON)")
    p.add_argument(
        "--nprocs", required=nprocs_required, type=_int_at_least(2, "nprocs"), metavar="N"
    )
    p.add_argument(
        "--strategy",
        action="append",
        metavar="NAME",
        help="strategy name; repeat or comma-separate (default: all)",
    )
    p.add_argument("--segment-size", type=_int_at_least(1, "segment size"), metavar="BYTES")
    p.add_argument(
        "--base-datatype",
        type=_int_at_least(1, "base datatype size"),
        default=DEFAULT_BASE_DATATYPE,
        metavar="BYTES",
        help="smallest segment candidate (default %(default)s)",
    )
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="colltune",
        description="pLogP models, tuning and simulation for broadcast and scatter.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("predict", help="closed-form completion times")
    _common(p)
    p.add_argument("--msg-size", required=True, type=_int_at_least(1, "message size"), metavar="BYTES")

    p = sub.add_parser("tune", help="rank strategies, best first")
    _common(p)
    p.add_argument("--msg-size", required=True, type=_int_at_least(1, "message size"), metavar="BYTES")
    p.add_argument("--exclude-bounds", action="store_true", help="drop upper-bound-only models")

    p = sub.add_parser("sweep", help="predictions across message sizes")
    _common(p)
    p.add_argument("--msg-sizes", type=_size_list, metavar="LIST", help="comma-separated sizes")
    p.add_argument("--msg-range", type=_size_range, metavar="MIN:MAX:FACTOR")

    p = sub.add_parser("simulate", help="run one strategy through the event simulator")
    _common(p)
    p.add_argument("--msg-size", required=True, type=_int_at_least(1, "message size"), metavar="BYTES")
    p.add_argument("--event-log", metavar="PATH", help="write per-event timings as CSV")

    p = sub.add_parser("validate", help="compare closed forms against simulation")
    _common(p, nprocs_required=False)
    p.add_argument("--msg-size", required=True, type=_int_at_least(1, "message size"), metavar="BYTES")
    p.add_argument("--nprocs-range", type=_nprocs_range, metavar="MIN:MAX")

    p = sub.add_parser("gen-params", help="emit a synthetic affine parameter file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--overhead", type=_positive_float, metavar="SECONDS")
    p.add_argument("--bandwidth", type=_positive_float, metavar="BYTES_PER_S")
    p.add_argument("--latency", type=_nonneg_float, metavar="SECONDS")
    p.add_argument("--label", default=None)
    p.add_argument(
        "--max-size",
        type=_int_at_least(1, "max size"),
        default=PRESET_MAX_SAMPLE,
        metavar="BYTES",
        help="largest power-of-two sample (default 4 MiB)",
    )
    for name, subparser in sub.choices.items():
        subparser.set_defaults(handler=COMMANDS[name], subparser=subparser)
    return parser


# commands -------------------------------------------------------------------


def _strategies(parser, args):
    op = Operation(args.op)
    if not args.strategy:
        return strategies_for(op)
    names = [n for chunk in args.strategy for n in chunk.split(",") if n.strip()]
    try:
        chosen = {parse_strategy(op, n.strip()) for n in names}
    except ValueError as exc:
        parser.error(str(exc))
    return [s for s in strategies_for(op) if s in chosen]


def _check_segment_flag(parser, args, strategies) -> None:
    if args.segment_size is None:
        return
    if Operation(args.op) is Operation.SCATTER:
        parser.error("--segment-size does not apply to scatter")
    if not any(s.segmented for s in strategies):
        parser.error("--segment-size given but no segmented strategy selected")


def _load(args):
    try:
        return read_params(args.params)
    except OSError as exc:
        raise DomainError(f"cannot read {args.params}: {exc.strerror or exc}") from None
    except ParamsError as exc:
        raise DomainError(f"{args.params}: {exc}") from None


def _segment_for(strategy, args, params, nprocs, m):
    if not (isinstance(strategy, BroadcastStrategy) and strategy.segmented):
        return None
    if args.segment_size is not None:
        return args.segment_size
    return optimize_segment(strategy, params, nprocs, m, args.base_datatype)[0]


def cmd_predict(parser, args, out) -> int:
    strategies = _strategies(parser, args)
    _check_segment_flag(parser, args, strategies)
    params = _load(args)
    rows = []
    for strategy in strategies:
        s = _segment_for(strategy, args, params, args.nprocs, args.msg_size)
        rows.append(report_row(predict(strategy, params, args.nprocs, args.msg_size, s)))
    write_report(rows, REPORT_COLUMNS, args.format, out)
    return 0


def cmd_tune(parser, args, out) -> int:
    strategies = _strategies(parser, args)
    if args.segment_size is not None:
        parser.error("tune searches the segment size itself; drop --segment-size")
    params = _load(args)
    result = select_best(
        args.op,
        params,
        args.nprocs,
        args.msg_size,
        strategy_filter=strategies,
        base_datatype=args.base_datatype,
        exclude_bounds=args.exclude_bounds,
    )
    rows = [report_row(p, rank=i + 1) for i, p in enumerate(result.ranked)]
    write_report(rows, REPORT_COLUMNS + ("rank",), args.format, out)
    best = result.best
    log.info("best: %s at %s s", best.strategy.value, fmt_seconds(best.time))
    return 0


def cmd_sweep(parser, args, out) -> int:
    strategies = _strategies(parser, args)
    _check_segment_flag(parser, args, strategies)
    sizes = list(args.msg_sizes or []) + list(args.msg_range or [])
    if not sizes:
        parser.error("sweep needs --msg-sizes and/or --msg-range")
    sizes = sorted(set(sizes))
    params = _load(args)
    points = sweep(
        args.op,
        params,
        args.nprocs,
        sizes,
        strategies,
        base_datatype=args.base_datatype,
        segment_size=args.segment_size,
    )
    rows = []
    for point in points:
        for strategy, pred in point.predictions.items():
            rows.append(report_row(pred, best=strategy is point.best))
    write_report(rows, REPORT_COLUMNS + ("best",), args.format, out)
    return 0


def cmd_simulate(parser, args, out) -> int:
    strategies = _strategies(parser, args)
    if len(strategies) != 1:
        parser.error("simulate needs exactly one --strategy")
    _check_segment_flag(parser, args, strategies)
    (strategy,) = strategies
    params = _load(args)
    s = _segment_for(strategy, args, params, args.nprocs, args.msg_size)
    pred = predict(strategy, params, args.nprocs, args.msg_size, s)
    schedule = build_schedule(strategy, args.nprocs, args.msg_size, s)
    result = simulate(schedule, params)
    write_report([report_row(pred, simulated=result.makespan)], REPORT_COLUMNS, args.format, out)
    if args.event_log:
        timings = {t.event_id: t for t in result.event_log}
        try:
            with open(args.event_log, "w", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(EVENT_LOG_COLUMNS)
                for ev in schedule.events:
                    t = timings[ev.id]
                    writer.writerow(
                        [
                            ev.id,
                            ev.sender,
                            ev.receiver,
                            ev.payload_size,
                            ev.kind.value,
                            fmt_seconds(t.send_start),
                            fmt_seconds(t.receive_time),
                        ]
                    )
        except OSError as exc:
            raise DomainError(f"cannot write {args.event_log}: {exc.strerror or exc}") from None
    return 0


def cmd_validate(parser, args, out) -> int:
    strategies = _strategies(parser, args)
    _check_segment_flag(parser, args, strategies)
    if args.nprocs is None and args.nprocs_range is None:
        parser.error("validate needs --nprocs or --nprocs-range")
    nprocs_list = sorted(set(([args.nprocs] if args.nprocs else []) + (args.nprocs_range or [])))
    params = _load(args)
    rows, failures = [], 0
    for P in nprocs_list:
        for strategy in strategies:
            s = _segment_for(strategy, args, params, P, args.msg_size)
            rec = validate_strategy(strategy, params, P, args.msg_size, s)
            pred = predict(strategy, params, P, args.msg_size, s)
            if rec.exact_expected and rec.rel_error > EXACT_REL_TOL:
                failures += 1
            if not rec.bound_respected:
                failures += 1
            rows.append(
                report_row(
                    pred,
                    simulated=rec.simulated,
                    rel_error=rec.rel_error,
                    bound_respected=rec.bound_respected,
                    exact_expected=rec.exact_expected,
                )
            )
    columns = REPORT_COLUMNS + ("rel_error", "bound_respected", "exact_expected")
    write_report(rows, columns, args.format, out)
    if failures:
        log.error("%d case(s) disagree with the simulator beyond tolerance", failures)
        return 1
    return 0


def cmd_gen_params(parser, args, out) -> int:
    values = dict(PRESETS[args.preset]) if args.preset else {}
    for key in ("overhead", "bandwidth", "latency"):
        if getattr(args, key) is not None:
            values[key] = getattr(args, key)
    missing = [k for k in ("overhead", "bandwidth", "latency") if k not in values]
    if missing:
        parser.error("gen-params needs --preset or all of --overhead/--bandwidth/--latency "
                     f"(missing {', '.join('--' + k for k in missing)})")
    label = args.label if args.label is not None else (args.preset or "synthetic")
    params = synth_params(
        values["overhead"],
        values["bandwidth"],
        values["latency"],
        sample_sizes_pow2(args.max_size),
        label=label,
    )
    out.write(save_params(params))
    return 0


COMMANDS = {
    "predict": cmd_predict,
    "tune": cmd_tune,
    "sweep": cmd_sweep,
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "gen-params": cmd_gen_params,
}


def main(argv: Optional[Sequence[str]] = None, out=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
    )
    out = out if out is not None else sys.stdout
    buf = io.StringIO()
    try:
        code = args.handler(args.subparser, args, buf)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (DomainError, ValueError) as exc:
        print(f"colltune: error: {exc}", file=sys.stderr)
        return 1
    out.write(buf.getvalue())
    return code


if __name__ == "__main__":
    sys.exit(main())
