"""Detector click streams and their two on-disk formats.

A stream is a sequence of (cycle, channel) records sorted by cycle index.
Channels: XX (trigger photon detector), XCO and XCROSS (the two analysis
ports of the paired photon). Cross-correlation streams use all three;
autocorrelation streams carry only the two X ports.

CSV format: header line ``cycle,channel`` then one ``<u64>,<label>`` row per
record with labels XX, XCO, XCROSS.

Binary format: 5-byte magic ``CTEV1`` followed by packed little-endian
records of u64 cycle + u8 channel code (0=XX, 1=XCO, 2=XCROSS).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import EventParseError

BINARY_MAGIC = b"CTEV1"
_RECORD_DTYPE = np.dtype([("cycle", "<u8"), ("channel", "u1")])
CSV_HEADER = "cycle,channel"
FORMATS = ("csv", "binary")


class Channel(IntEnum):
    XX = 0
    X_CO = 1
    X_CROSS = 2

    @property
    def file_label(self) -> str:
        return _CHANNEL_LABELS[int(self)]


_CHANNEL_LABELS = {0: "XX", 1: "XCO", 2: "XCROSS"}
_LABEL_CODES = {label: code for code, label in _CHANNEL_LABELS.items()}


@dataclass
class EventStream:
    """In-memory click stream; cycles must be non-decreasing."""

    cycles: np.ndarray
    channels: np.ndarray
    config: object | None = field(default=None, compare=False)

    def __post_init__(self):
        self.cycles = np.asarray(self.cycles, dtype=np.uint64)
        self.channels = np.asarray(self.channels, dtype=np.uint8)
        if self.cycles.shape != self.channels.shape or self.cycles.ndim != 1:
            raise ValueError("cycles and channels must be equal-length 1-D arrays")
        if self.cycles.size and np.any(np.diff(self.cycles.astype(np.int64)) < 0):
            raise ValueError("cycle indices must be non-decreasing")
        if self.channels.size and self.channels.max() > 2:
            raise ValueError("channel codes must be 0, 1 or 2")

    def __len__(self) -> int:
        return int(self.cycles.size)

    def counts_by_channel(self) -> dict[str, int]:
        return {
            _CHANNEL_LABELS[code]: int(np.count_nonzero(self.channels == code)) for code in (0, 1, 2)
        }


def write_events(stream: EventStream, path, fmt: str = "binary") -> None:
    """Write a stream to disk in one of the two formats."""
    if fmt == "csv":
        _write_csv(stream, path)
    elif fmt == "binary":
        _write_binary(stream, path)
    else:
        raise ValueError(f"unknown event format {fmt!r}; expected 'csv' or 'binary'")


def _write_csv(stream: EventStream, path) -> None:
    with open(path, "w", newline="\n") as f:
        f.write(CSV_HEADER + "\n")
        for cycle, code in zip(stream.cycles.tolist(), stream.channels.tolist()):
            f.write(f"{cycle},{_CHANNEL_LABELS[code]}\n")


def _write_binary(stream: EventStream, path) -> None:
    records = np.empty(len(stream), dtype=_RECORD_DTYPE)
    records["cycle"] = stream.cycles
    records["channel"] = stream.channels
    with open(path, "wb") as f:
        f.write(BINARY_MAGIC)
        f.write(records.tobytes())


def iter_event_blocks(path, fmt: str = "binary", block_records: int = 1 << 16) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield (cycles, channels) blocks from a file without loading it whole.

    Blocks preserve record order; malformed content raises EventParseError
    with the byte offset of the fault. Cycle monotonicity is verified across
    block boundaries.
    """
    if fmt == "csv":
        yield from _iter_csv(path, block_records)
    elif fmt == "binary":
        yield from _iter_binary(path, block_records)
    else:
        raise ValueError(f"unknown event format {fmt!r}; expected 'csv' or 'binary'")


def _iter_csv(path, block_records: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    name = str(path)
    with open(path, "rb") as f:
        offset = 0
        header = f.readline()
        if not header:
            raise EventParseError(name, 0, "empty file: missing 'cycle,channel' header")
        if header.decode("ascii", errors="replace").strip() != CSV_HEADER:
            raise EventParseError(name, 0, f"bad header {header!r}; expected '{CSV_HEADER}'")
        offset += len(header)

        cycles: list[int] = []
        codes: list[int] = []
        last_cycle = -1
        for raw in f:
            line_offset = offset
            offset += len(raw)
            line = raw.decode("ascii", errors="replace").strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 2:
                raise EventParseError(name, line_offset, f"expected 'cycle,channel', got {line!r}")
            try:
                cycle = int(parts[0])
            except ValueError:
                raise EventParseError(name, line_offset, f"cycle {parts[0]!r} is not an integer") from None
            if cycle < 0:
                raise EventParseError(name, line_offset, f"cycle {cycle} is negative")
            label = parts[1].strip()
            if label not in _LABEL_CODES:
                raise EventParseError(name, line_offset, f"unknown channel {label!r}")
            if cycle < last_cycle:
                raise EventParseError(
                    name, line_offset, f"cycle {cycle} breaks non-decreasing order (previous {last_cycle})"
                )
            last_cycle = cycle
            cycles.append(cycle)
            codes.append(_LABEL_CODES[label])
            if len(cycles) >= block_records:
                yield np.array(cycles, dtype=np.uint64), np.array(codes, dtype=np.uint8)
                cycles, codes = [], []
        if cycles:
            yield np.array(cycles, dtype=np.uint64), np.array(codes, dtype=np.uint8)


def _iter_binary(path, block_records: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    name = str(path)
    rec_size = _RECORD_DTYPE.itemsize
    with open(path, "rb") as f:
        magic = f.read(len(BINARY_MAGIC))
        if magic != BINARY_MAGIC:
            raise EventParseError(name, 0, f"bad magic {magic!r}; expected {BINARY_MAGIC!r}")
        offset = len(BINARY_MAGIC)
        last_cycle = -1
        while True:
            buf = f.read(rec_size * block_records)
            if not buf:
                break
            tail = len(buf) % rec_size
            if tail:
                raise EventParseError(
                    name, offset + len(buf) - tail, f"truncated record: {tail} trailing byte(s)"
                )
            records = np.frombuffer(buf, dtype=_RECORD_DTYPE)
            bad = np.nonzero(records["channel"] > 2)[0]
            if bad.size:
                i = int(bad[0])
                raise EventParseError(
                    name, offset + i * rec_size + 8, f"invalid channel code {int(records['channel'][i])}"
                )
            cycles = records["cycle"].astype(np.int64)
            if cycles.size:
                prev = np.concatenate(([last_cycle], cycles[:-1]))
                drops = np.nonzero(cycles < prev)[0]
                if drops.size:
                    i = int(drops[0])
                    raise EventParseError(
                        name,
                        offset + i * rec_size,
                        f"cycle {int(cycles[i])} breaks non-decreasing order (previous {int(prev[i])})",
                    )
                last_cycle = int(cycles[-1])
            yield records["cycle"].astype(np.uint64), records["channel"].astype(np.uint8)
            offset += len(buf)


def parse_events(path, fmt: str = "binary") -> EventStream:
    """Read a whole event file into an EventStream (exact record sequence)."""
    parts = list(iter_event_blocks(path, fmt=fmt))
    if not parts:
        return EventStream(np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.uint8))
    cycles = np.concatenate([p[0] for p in parts])
    channels = np.concatenate([p[1] for p in parts])
    return EventStream(cycles, channels)


def detect_format(path) -> str:
    """Guess the format from the leading bytes (magic vs CSV header)."""
    with open(path, "rb") as f:
        head = f.read(len(BINARY_MAGIC))
    return "binary" if head == BINARY_MAGIC else "csv"


def stream_path(directory, label: str, fmt: str) -> Path:
    """Canonical per-setting event file name inside a run directory."""
    ext = "csv" if fmt == "csv" else "bin"
    return Path(directory) / f"events_{label}.{ext}"
