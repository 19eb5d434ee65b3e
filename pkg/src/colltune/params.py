"""pLogP network parameters: latency plus a sampled gap table g(m).

The gap table is interpolated piecewise-linearly between samples and
extrapolated with the slope of the last two samples beyond the largest one.

Parameter files are JSON::

    {
      "version": 1,
      "label": "fast-ethernet-100",
      "latency": 5.0e-05,
      "gaps": [[1, 3.008e-05], [2, 3.016e-05], ...]
    }

``gaps`` holds ``[size_bytes, gap_seconds]`` pairs with strictly increasing
integer sizes, the first of which must be 1.
"""

from __future__ import annotations

import bisect
import json
import math
import warnings
from dataclasses import dataclass
from typing import Iterable, Sequence, Union

FORMAT_VERSION = 1
_KNOWN_KEYS = ("version", "label", "latency", "gaps")


class ParamsError(ValueError):
    """Base class for invalid pLogP parameters."""


class ParamsSyntaxError(ParamsError):
    """The parameter file is not well-formed."""


class ParamsValidationError(ParamsError):
    """The parameter file parsed but violates an invariant."""


class NonMonotoneGapWarning(UserWarning):
    pass


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _is_number(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


@dataclass(frozen=True)
class GapTable:
    """Sampled gap function: ``entries`` is a tuple of ``(size, gap)`` pairs."""

    entries: tuple[tuple[int, float], ...]

    def __post_init__(self):
        entries = tuple((int(s), float(g)) for s, g in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ParamsValidationError("gap table is empty; g(1) required")
        for i, (size, gap) in enumerate(entries):
            if not math.isfinite(gap) or gap <= 0:
                raise ParamsValidationError(
                    f"gap entry {i} (size {size}): gap must be positive and finite, got {gap!r}"
                )
            if i and size <= entries[i - 1][0]:
                raise ParamsValidationError(
                    f"gap entry {i} (size {size}): sizes not strictly increasing "
                    f"(previous size {entries[i - 1][0]})"
                )
        if entries[0][0] != 1:
            raise ParamsValidationError(
                f"g(1) required: first gap entry has size {entries[0][0]}"
            )
        if any(b[1] < a[1] for a, b in zip(entries, entries[1:])):
            warnings.warn(
                "gap table is not monotone non-decreasing in message size",
                NonMonotoneGapWarning,
                stacklevel=3,
            )

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(s for s, _ in self.entries)

    def __call__(self, size: float) -> float:
        if size < 1:
            raise ValueError(f"message size must be >= 1, got {size!r}")
        entries = self.entries
        sizes = [s for s, _ in entries]
        i = bisect.bisect_left(sizes, size)
        if i < len(sizes) and sizes[i] == size:
            return entries[i][1]
        if len(entries) == 1:
            return entries[0][1]
        if i == len(entries):
            (s0, g0), (s1, g1) = entries[-2], entries[-1]
            slope = (g1 - g0) / (s1 - s0)
            # Decreasing tails would eventually go non-positive; hold them flat.
            return g1 + max(slope, 0.0) * (size - s1)
        (s0, g0), (s1, g1) = entries[i - 1], entries[i]
        return g0 + (g1 - g0) * (size - s0) / (s1 - s0)


@dataclass(frozen=True)
class PLogPParams:
    latency: float
    gaps: GapTable
    label: str = ""

    def __post_init__(self):
        if not _is_number(self.latency) or not math.isfinite(self.latency) or self.latency < 0:
            raise ParamsValidationError(
                f"latency must be finite and non-negative, got {self.latency!r}"
            )
        object.__setattr__(self, "latency", float(self.latency))

    def gap(self, size: float) -> float:
        return self.gaps(size)


@dataclass(frozen=True)
class SegmentSpec:
    segment_size: int
    segment_count: int

    def sizes(self, message_size: int) -> list[int]:
        """Byte size of each segment; the last one carries the remainder."""
        k, s = self.segment_count, self.segment_size
        return [s] * (k - 1) + [message_size - (k - 1) * s]


def gap_of(params: PLogPParams, size: float) -> float:
    """Gap g(size) in seconds, interpolated from the table."""
    return params.gaps(size)


def segments_for(message_size: int, segment_size: int) -> SegmentSpec:
    """Split ``message_size`` bytes into ceil(m/s) segments of ``segment_size``.

    A segment size at or above the message size is clamped to the message
    size, giving a single segment.
    """
    if message_size < 1 or segment_size < 1:
        raise ValueError(
            f"message and segment sizes must be >= 1, got m={message_size}, s={segment_size}"
        )
    if segment_size >= message_size:
        return SegmentSpec(message_size, 1)
    return SegmentSpec(segment_size, -(-message_size // segment_size))


def synth_params(
    overhead: float,
    bandwidth: float,
    latency: float,
    sample_sizes: Iterable[int],
    label: str = "",
) -> PLogPParams:
    """Affine network ``g(m) = overhead + m / bandwidth`` sampled at ``{1} | sample_sizes``."""
    if not overhead > 0:
        raise ValueError(f"overhead must be positive, got {overhead!r}")
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth!r}")
    if not latency >= 0:
        raise ValueError(f"latency must be non-negative, got {latency!r}")
    sizes = set(int(s) for s in sample_sizes)
    if not sizes:
        raise ValueError("sample_sizes must be non-empty")
    if min(sizes) < 1:
        raise ValueError("sample sizes must be >= 1")
    sizes.add(1)
    entries = tuple((s, overhead + s / bandwidth) for s in sorted(sizes))
    return PLogPParams(latency=latency, gaps=GapTable(entries), label=label)


def _fmt_seconds(x: float) -> str:
    """Shortest scientific notation that round-trips to the same float."""
    for digits in range(17):
        text = f"{x:.{digits}e}"
        if float(text) == x:
            return text
    return repr(x)


def save_params(params: PLogPParams) -> str:
    rows = ",\n".join(
        f"    [{size}, {_fmt_seconds(gap)}]" for size, gap in params.gaps.entries
    )
    return (
        "{\n"
        f'  "version": {FORMAT_VERSION},\n'
        f'  "label": {json.dumps(params.label)},\n'
        f'  "latency": {_fmt_seconds(params.latency)},\n'
        '  "gaps": [\n'
        f"{rows}\n"
        "  ]\n"
        "}\n"
    )


def load_params(text: Union[str, bytes]) -> PLogPParams:
    """Parse a parameter file. Raises ParamsSyntaxError or ParamsValidationError."""
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParamsSyntaxError(f"parameter file is not UTF-8: {exc}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParamsSyntaxError(f"malformed JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParamsSyntaxError("top level must be a JSON object")
    for key in doc:
        if key not in _KNOWN_KEYS:
            raise ParamsSyntaxError(f"unknown top-level key {key!r}")
    for key in ("version", "latency", "gaps"):
        if key not in doc:
            raise ParamsSyntaxError(f"missing required key {key!r}")
    if not _is_int(doc["version"]) or doc["version"] != FORMAT_VERSION:
        raise ParamsValidationError(
            f"unsupported version {doc['version']!r}; expected {FORMAT_VERSION}"
        )
    label = doc.get("label", "")
    if not isinstance(label, str):
        raise ParamsSyntaxError("label must be a string")
    latency = doc["latency"]
    if not _is_number(latency):
        raise ParamsSyntaxError(f"latency must be a number, got {latency!r}")
    gaps = doc["gaps"]
    if not isinstance(gaps, list):
        raise ParamsSyntaxError("gaps must be a list of [size, gap] pairs")
    entries = []
    for i, pair in enumerate(gaps):
        if not (isinstance(pair, list) and len(pair) == 2):
            raise ParamsSyntaxError(f"gap entry {i}: expected [size, gap] pair, got {pair!r}")
        size, gap = pair
        if not _is_int(size) or size < 1:
            raise ParamsValidationError(f"gap entry {i}: size must be an integer >= 1, got {size!r}")
        if not _is_number(gap):
            raise ParamsSyntaxError(f"gap entry {i} (size {size}): gap must be a number, got {gap!r}")
        entries.append((size, gap))
    return PLogPParams(latency=latency, gaps=GapTable(tuple(entries)), label=label)


def read_params(path) -> PLogPParams:
    with open(path, "rb") as fh:
        return load_params(fh.read())


def sample_sizes_pow2(max_size: int) -> Sequence[int]:
    """Powers of two from 1 up to and including ``max_size``."""
    return [1 << i for i in range(max_size.bit_length()) if (1 << i) <= max_size]
