"""Binary waterfall recording format, version 1.

Little-endian layout:

    offset  size  field
    0       4     magic "POTD"
    4       2     u16 version (1)
    6       2     u16 reserved (0)
    8       4     u32 n_bins
    12      4     f32 bin_size_m
    16      4     f32 pulse_rate_hz
    20      8     u64 n_traces (0 while a recording is still open)
    28      ...   traces, each n_bins consecutive f32 values

The header is 28 bytes. A writer emits n_traces = 0 up front and
backfills the true count on close when the target is seekable, so a
crash leaves a file that is still readable to its last complete trace.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from fibersense.errors import FormatError

MAGIC = b"POTD"
VERSION = 1
_HEADER = struct.Struct("<4sHHIffQ")
HEADER_SIZE = _HEADER.size  # 28
_BYTES_PER_VALUE = 4


@dataclass(frozen=True)
class PotdHeader:
    n_bins: int
    bin_size_m: float
    pulse_rate_hz: float
    n_traces: int

    def pack(self) -> bytes:
        return _HEADER.pack(
            MAGIC, VERSION, 0, self.n_bins, self.bin_size_m, self.pulse_rate_hz, self.n_traces
        )


def parse_header(raw: bytes) -> PotdHeader:
    if len(raw) < HEADER_SIZE:
        raise FormatError(
            f"file too short for a header: {len(raw)} bytes, need {HEADER_SIZE}", offset=0
        )
    magic, version, _, n_bins, bin_size, rate, n_traces = _HEADER.unpack(raw[:HEADER_SIZE])
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}", offset=0)
    if version != VERSION:
        raise FormatError(f"unsupported version {version}", offset=4)
    if n_bins == 0:
        raise FormatError("header declares zero bins", offset=8)
    if not (bin_size > 0 and rate > 0):
        raise FormatError("header has non-positive geometry", offset=12)
    return PotdHeader(n_bins=n_bins, bin_size_m=bin_size, pulse_rate_hz=rate, n_traces=n_traces)


class PotdWriter:
    """Streaming writer; traces go out as float32 rows as they arrive."""

    def __init__(self, path, n_bins: int, bin_size_m: float, pulse_rate_hz: float):
        self.path = path
        self.n_bins = n_bins
        self._traces_written = 0
        self._fh = open(path, "wb")
        self._fh.write(
            PotdHeader(
                n_bins=n_bins, bin_size_m=bin_size_m, pulse_rate_hz=pulse_rate_hz, n_traces=0
            ).pack()
        )

    def write_traces(self, samples) -> None:
        arr = np.ascontiguousarray(samples, dtype="<f4")
        if arr.ndim != 2 or arr.shape[1] != self.n_bins:
            raise ValueError(f"expected (n, {self.n_bins}) samples, got {arr.shape}")
        self._fh.write(arr.tobytes())
        self._traces_written += arr.shape[0]

    @property
    def traces_written(self) -> int:
        return self._traces_written

    def close(self) -> None:
        if self._fh.closed:
            return
        self._fh.flush()
        if self._fh.seekable():
            self._fh.seek(20)
            self._fh.write(struct.pack("<Q", self._traces_written))
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class PotdReader:
    """Sequential reader yielding trace batches as float32 arrays."""

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "rb")
        self.header = parse_header(self._fh.read(HEADER_SIZE))
        self._trace_bytes = self.header.n_bins * _BYTES_PER_VALUE
        self._traces_read = 0

    @property
    def traces_read(self) -> int:
        return self._traces_read

    def read_traces(self, n: int):
        """Up to n traces; empty array at EOF; partial trailing row is an error."""
        raw = self._fh.read(n * self._trace_bytes)
        full, leftover = divmod(len(raw), self._trace_bytes)
        if leftover:
            offset = HEADER_SIZE + (self._traces_read + full) * self._trace_bytes
            raise FormatError(
                f"truncated trace: {leftover} bytes of a "
                f"{self._trace_bytes}-byte row at offset {offset}",
                offset=offset,
            )
        arr = np.frombuffer(raw, dtype="<f4").reshape(full, self.header.n_bins)
        self._traces_read += full
        return arr

    def blocks(self, block_size: int):
        """Iterate (first_trace_index, samples) batches of block_size traces."""
        while True:
            start = self._traces_read
            arr = self.read_traces(block_size)
            if arr.shape[0] == 0:
                return
            yield start, arr

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
