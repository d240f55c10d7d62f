"""Tests for the Exp-Golomb run/level coder."""
import numpy as np
import pytest

from lnrm_codec.codec.entropy import (
    EOB_BITS,
    BitReader,
    BitWriter,
    decode_block,
    encode_block,
    encode_side_info,
    rate_of,
    se_length,
    side_info_bits,
    signed_to_unsigned,
    ue_length,
    unsigned_to_signed,
    zigzag_order,
)
from lnrm_codec.codec.quant import quantize_array, step_of
from lnrm_codec.codec.transform import forward_batch
from lnrm_codec.lib.errors import FormatError, LengthError
from lnrm_codec.lib.models import CodingChoice, Partition


def _bits(writer: BitWriter) -> str:
    data = writer.getvalue()
    return "".join(f"{b:08b}" for b in data)[:writer.bit_count]


def _make_sparse_levels(rng, size, count, low=-9, high=9):
    """Random levels with roughly half the entries zero, like quantized residuals."""
    levels = rng.integers(low, high + 1, size=(count, size, size))
    levels[rng.random(levels.shape) < 0.5] = 0
    return levels


class TestExpGolomb:
    def test_unsigned_codewords(self):
        writer = BitWriter()
        for value in (0, 1, 2):
            writer.write_ue(value)
        assert _bits(writer) == "1" + "010" + "011"

    def test_signed_mapping(self):
        assert [signed_to_unsigned(v) for v in (0, 1, -1, 2, -2)] == [0, 1, 2, 3, 4]
        assert [unsigned_to_signed(c) for c in range(5)] == [0, 1, -1, 2, -2]

    def test_lengths(self):
        assert [ue_length(v) for v in (0, 1, 2, 3, 6, 7)] == [1, 3, 3, 5, 5, 7]
        assert se_length(-1) == 3

    def test_reader_round_trip(self):
        values = list(range(-40, 41))
        writer = BitWriter()
        for v in values:
            writer.write_se(v)
            writer.write_ue(abs(v))
        reader = BitReader(writer.getvalue())
        for v in values:
            assert reader.read_se() == v
            assert reader.read_ue() == abs(v)

    def test_padding_is_zero(self):
        writer = BitWriter()
        writer.write(0b101, 3)
        assert writer.getvalue() == bytes([0b10100000])

    def test_reading_past_end(self):
        reader = BitReader(b"\x00")
        with pytest.raises(LengthError):
            reader.read_ue()


class TestZigzag:
    def test_jpeg_order_for_4x4(self):
        expected = [0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15]
        assert zigzag_order(4).tolist() == expected

    def test_16x16_is_a_permutation(self):
        order = zigzag_order(16)
        assert sorted(order.tolist()) == list(range(256))
        assert order[:3].tolist() == [0, 1, 16]


class TestBlocks:
    def test_zero_block_is_eob(self):
        writer = BitWriter()
        assert encode_block(writer, np.zeros((4, 4), dtype=np.int64), 4) == EOB_BITS
        assert _bits(writer) == "11"
        assert rate_of(np.zeros((16, 16)), 16) == EOB_BITS == 2

    def test_single_dc_level(self):
        levels = np.zeros((4, 4), dtype=np.int64)
        levels[0, 0] = 1
        writer = BitWriter()
        bits = encode_block(writer, levels, 4)
        # ue(0) se(1) then EOB
        assert _bits(writer) == "1" + "010" + "11"
        assert bits == 6
        assert np.array_equal(decode_block(BitReader(writer.getvalue()), 4), levels)

    @pytest.mark.parametrize("size", [4, 16])
    def test_random_round_trip_and_rate(self, size):
        rng = np.random.default_rng(size)
        count = 10_000 if size == 4 else 500
        writer = BitWriter()
        blocks = _make_sparse_levels(rng, size, count)
        for block in blocks:
            start = writer.bit_count
            bits = encode_block(writer, block, size)
            assert bits == writer.bit_count - start
            assert rate_of(block, size) == bits
        reader = BitReader(writer.getvalue())
        for block in blocks:
            assert np.array_equal(decode_block(reader, size), block)

    def test_large_levels(self):
        levels = np.zeros((4, 4), dtype=np.int64)
        levels[3, 3] = -70000
        levels[0, 1] = 123456
        writer = BitWriter()
        assert encode_block(writer, levels, 4) == rate_of(levels, 4)
        assert np.array_equal(decode_block(BitReader(writer.getvalue()), 4), levels)

    def test_coarser_step_costs_fewer_bits(self):
        rng = np.random.default_rng(9)
        coeffs = forward_batch(rng.normal(scale=30.0, size=(300, 4, 4)))
        rates = []
        for qp in (22, 28, 34, 40):
            levels = quantize_array(coeffs, step_of(qp))
            rates.append(sum(rate_of(b, 4) for b in levels))
        assert rates == sorted(rates, reverse=True)

    def test_run_overflow(self):
        writer = BitWriter()
        writer.write_ue(16)
        writer.write_se(1)
        with pytest.raises(FormatError):
            decode_block(BitReader(writer.getvalue()), 4)

    def test_zero_level_with_run(self):
        writer = BitWriter()
        writer.write_ue(3)
        writer.write_se(0)
        with pytest.raises(FormatError):
            decode_block(BitReader(writer.getvalue()), 4)


class TestSideInfo:
    def test_bits(self):
        assert side_info_bits(CodingChoice(Partition.MB16, 0)) == 2
        assert side_info_bits(CodingChoice(Partition.SUB4, -1)) == 4
        assert side_info_bits(CodingChoice(Partition.SUB4, 4)) == 1 + 7

    def test_written_layout(self):
        writer = BitWriter()
        bits = encode_side_info(writer, CodingChoice(Partition.SUB4, 1))
        assert bits == 4
        assert _bits(writer) == "1" + "010"
