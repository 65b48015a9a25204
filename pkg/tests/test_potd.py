import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fibersense.errors import FormatError
from fibersense.pipeline.potd import (
    HEADER_SIZE,
    PotdHeader,
    PotdReader,
    PotdWriter,
    parse_header,
)


def test_header_is_28_bytes():
    hdr = PotdHeader(n_bins=1000, bin_size_m=1.0, pulse_rate_hz=1000.0, n_traces=0)
    assert HEADER_SIZE == 28
    assert len(hdr.pack()) == 28


def test_header_round_trip():
    hdr = PotdHeader(n_bins=512, bin_size_m=0.5, pulse_rate_hz=2000.0, n_traces=12345)
    parsed = parse_header(hdr.pack())
    assert parsed == hdr


def test_header_field_layout_frozen():
    raw = PotdHeader(n_bins=7, bin_size_m=2.0, pulse_rate_hz=100.0, n_traces=9).pack()
    assert raw[:4] == b"POTD"
    assert struct.unpack_from("<H", raw, 4)[0] == 1
    assert struct.unpack_from("<I", raw, 8)[0] == 7
    assert struct.unpack_from("<f", raw, 12)[0] == 2.0
    assert struct.unpack_from("<f", raw, 16)[0] == 100.0
    assert struct.unpack_from("<Q", raw, 20)[0] == 9


def test_bad_magic_rejected_at_offset_zero():
    raw = b"XOTD" + PotdHeader(4, 1.0, 1000.0, 0).pack()[4:]
    with pytest.raises(FormatError) as err:
        parse_header(raw)
    assert err.value.offset == 0


def test_bad_version_rejected_at_offset_four():
    good = bytearray(PotdHeader(4, 1.0, 1000.0, 0).pack())
    struct.pack_into("<H", good, 4, 2)
    with pytest.raises(FormatError) as err:
        parse_header(bytes(good))
    assert err.value.offset == 4


def test_write_read_round_trip_bit_exact(tmp_path):
    path = tmp_path / "w.potd"
    rng = np.random.Generator(np.random.PCG64(8))
    data = rng.normal(0, 0.1, (250, 40)).astype(np.float32)
    with PotdWriter(path, n_bins=40, bin_size_m=1.0, pulse_rate_hz=1000.0) as writer:
        writer.write_traces(data[:100])
        writer.write_traces(data[100:])
    assert path.stat().st_size == 28 + 250 * 40 * 4

    with PotdReader(path) as reader:
        assert reader.header.n_traces == 250
        assert reader.header.n_bins == 40
        got = reader.read_traces(250)
        assert got.dtype == np.float32
        np.testing.assert_array_equal(got, data)
        assert reader.read_traces(10).shape == (0, 40)


def test_block_iteration_with_partial_tail(tmp_path):
    path = tmp_path / "b.potd"
    data = np.arange(250 * 8, dtype=np.float32).reshape(250, 8)
    with PotdWriter(path, n_bins=8, bin_size_m=1.0, pulse_rate_hz=100.0) as writer:
        writer.write_traces(data)
    with PotdReader(path) as reader:
        batches = list(reader.blocks(100))
    assert [start for start, _ in batches] == [0, 100, 200]
    assert [arr.shape[0] for _, arr in batches] == [100, 100, 50]
    np.testing.assert_array_equal(np.vstack([arr for _, arr in batches]), data)


def test_truncated_trace_names_offset(tmp_path):
    path = tmp_path / "t.potd"
    with PotdWriter(path, n_bins=10, bin_size_m=1.0, pulse_rate_hz=100.0) as writer:
        writer.write_traces(np.zeros((3, 10), dtype=np.float32))
    whole = path.read_bytes()
    cut = 28 + 2 * 40 + 13  # 13 bytes into the third row
    path.write_bytes(whole[:cut])
    with PotdReader(path) as reader:
        with pytest.raises(FormatError, match=str(28 + 2 * 40)) as err:
            reader.read_traces(100)
    assert err.value.offset == 28 + 2 * 40


def test_writer_rejects_wrong_width(tmp_path):
    with PotdWriter(tmp_path / "x.potd", 10, 1.0, 100.0) as writer:
        with pytest.raises(ValueError):
            writer.write_traces(np.zeros((5, 9), dtype=np.float32))


def test_short_file_rejected(tmp_path):
    path = tmp_path / "s.potd"
    path.write_bytes(b"POTD\x01\x00")
    with pytest.raises(FormatError):
        PotdReader(path)


@settings(max_examples=100, deadline=None)
@given(
    st.integers(1, 12),
    st.integers(0, 40),
    st.integers(0, 2**32 - 1),
)
def test_round_trip_property(tmp_path_factory, n_bins, n_traces, seed):
    path = tmp_path_factory.mktemp("potd") / "p.potd"
    rng = np.random.Generator(np.random.PCG64(seed))
    data = rng.normal(0, 1, (n_traces, n_bins)).astype(np.float32)
    with PotdWriter(path, n_bins=n_bins, bin_size_m=0.25, pulse_rate_hz=500.0) as writer:
        writer.write_traces(data)
    with PotdReader(path) as reader:
        got = reader.read_traces(n_traces + 5)
        assert reader.header.n_traces == n_traces
    np.testing.assert_array_equal(got, data)
