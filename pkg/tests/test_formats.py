"""Tests for the binary sketch, baseline and index formats."""

import struct

import pytest

from fastsketch.baselines import densify_rotation, oph_sketch
from fastsketch.errors import FormatError
from fastsketch.formats import (
    decode_baseline,
    decode_index,
    decode_sketch,
    encode_baseline,
    encode_index,
    encode_sketch,
    read_index,
    read_sketch,
    write_index,
    write_sketch,
)
from fastsketch.lsh import build_index, query
from fastsketch.sketch import fill_sketch


@pytest.fixture
def index():
    collection = [("alpha", range(0, 30)), ("beta", range(20, 50)), ("γ", [7, 99, 1 << 63])]
    return build_index(collection, 0.5, 0.25, seed=17)


class TestSketchFormat:
    def test_layout(self, hasher):
        sketch = fill_sketch([1, 2, 3], 4, hasher)
        data = encode_sketch(sketch)
        assert data[:4] == b"FSK1"
        assert len(data) == 16 + 4 * 12
        assert struct.unpack_from("<IQ", data, 4) == (4, hasher.seed)

    def test_roundtrip(self, hasher, tmp_path):
        sketch = fill_sketch(range(100), 32, hasher)
        path = tmp_path / "a.fsk"
        write_sketch(path, sketch)
        assert read_sketch(path) == sketch

    def test_bad_magic(self, hasher):
        data = b"XXXX" + encode_sketch(fill_sketch([1], 4, hasher))[4:]
        with pytest.raises(FormatError) as excinfo:
            decode_sketch(data)
        assert excinfo.value.offset == 0

    def test_truncated(self, hasher):
        data = encode_sketch(fill_sketch([1], 4, hasher))
        with pytest.raises(FormatError) as excinfo:
            decode_sketch(data[:-3])
        assert excinfo.value.offset == 16 + 3 * 12

    def test_trailing_bytes(self, hasher):
        data = encode_sketch(fill_sketch([1], 4, hasher)) + b"\0"
        with pytest.raises(FormatError):
            decode_sketch(data)

    def test_round_past_sentinel(self, hasher):
        data = bytearray(encode_sketch(fill_sketch([1], 4, hasher)))
        struct.pack_into("<I", data, 16, 9)
        with pytest.raises(FormatError) as excinfo:
            decode_sketch(bytes(data))
        assert excinfo.value.offset == 16

    def test_late_round_in_wrong_bin(self, hasher):
        data = bytearray(encode_sketch(fill_sketch([1], 4, hasher)))
        struct.pack_into("<I", data, 16 + 12, 4)
        with pytest.raises(FormatError) as excinfo:
            decode_sketch(bytes(data))
        assert excinfo.value.offset == 16 + 12

    def test_late_round_in_its_own_bin(self, hasher):
        data = bytearray(encode_sketch(fill_sketch([1], 4, hasher)))
        struct.pack_into("<I", data, 16 + 12, 5)
        assert decode_sketch(bytes(data)).entries[1].round == 5

    def test_zero_t(self):
        with pytest.raises(FormatError):
            decode_sketch(struct.pack("<4sIQ", b"FSK1", 0, 0))


class TestBaselineFormat:
    def test_roundtrip_with_empty_bins(self, hasher):
        sketch = oph_sketch([5, 6], 16, hasher)
        decoded = decode_baseline(encode_baseline(sketch))
        assert decoded.empties == sketch.empties
        assert decoded.filled_bins == sketch.filled_bins
        assert all(decoded.entries[j] == sketch.entries[j] for j in sketch.filled_bins)

    def test_roundtrip_densified(self, hasher):
        sketch = densify_rotation(oph_sketch([5, 6, 7], 16, hasher), hasher)
        assert decode_baseline(encode_baseline(sketch)) == sketch

    def test_wrong_magic(self, hasher):
        with pytest.raises(FormatError):
            decode_baseline(encode_sketch(fill_sketch([1], 4, hasher)))


class TestIndexFormat:
    def test_roundtrip(self, index, tmp_path):
        path = tmp_path / "idx.fsli"
        write_index(path, index)
        loaded = read_index(path)
        assert loaded.params == index.params
        assert loaded.sig == index.sig
        assert loaded.ids == index.ids
        assert loaded.sets == index.sets
        assert loaded.buckets == index.buckets
        assert loaded.sep_sketches == index.sep_sketches

    def test_loaded_index_answers_queries(self, index):
        loaded = decode_index(encode_index(index))
        assert query(loaded, range(0, 30)) == query(index, range(0, 30))

    def test_bad_magic(self, index):
        with pytest.raises(FormatError) as excinfo:
            decode_index(b"NOPE" + encode_index(index)[4:])
        assert excinfo.value.offset == 0

    def test_bad_version(self, index):
        data = bytearray(encode_index(index))
        struct.pack_into("<H", data, 4, 99)
        with pytest.raises(FormatError) as excinfo:
            decode_index(bytes(data))
        assert excinfo.value.offset == 4

    def test_bad_thresholds(self, index):
        data = bytearray(encode_index(index))
        struct.pack_into("<d", data, 6, 0.1)
        with pytest.raises(FormatError):
            decode_index(bytes(data))

    @pytest.mark.parametrize("cut", [3, 10, 100])
    def test_truncated(self, index, cut):
        data = encode_index(index)
        with pytest.raises(FormatError):
            decode_index(data[:-cut])

    def test_trailing_bytes(self, index):
        with pytest.raises(FormatError):
            decode_index(encode_index(index) + b"\0\0")
