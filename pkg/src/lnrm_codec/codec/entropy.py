"""
Run-length + Exp-Golomb coding of quantized blocks.

Each block is scanned in zigzag order and coded as (ue(run), se(level)) pairs
for its nonzero levels, closed by EOB = ue(0) se(0), which no real pair can
produce because coded levels are never zero.
"""
from functools import lru_cache

import numpy as np

from lnrm_codec.lib.errors import FormatError, LengthError
from lnrm_codec.lib.models import CodingChoice

EOB_BITS = 2
PARTITION_FLAG_BITS = 1
MAX_GOLOMB_PREFIX = 48


def ue_length(value: int) -> int:
    """Bits of the unsigned Exp-Golomb code of value >= 0."""
    return 2 * (value + 1).bit_length() - 1


def signed_to_unsigned(value: int) -> int:
    """Standard interleave 0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ..."""
    return 2 * value - 1 if value > 0 else -2 * value


def unsigned_to_signed(code: int) -> int:
    return (code + 1) // 2 if code % 2 else -(code // 2)


def se_length(value: int) -> int:
    return ue_length(signed_to_unsigned(value))


@lru_cache(maxsize=None)
def zigzag_order(size: int) -> np.ndarray:
    """
    Raster indices of a size x size block in zigzag order.

    Anti-diagonal d = row + col is walked with row increasing for odd d and
    decreasing for even d (JPEG order for 4x4, same rule for 16x16).
    """
    order = []
    for d in range(2 * size - 1):
        rows = range(max(0, d - size + 1), min(d, size - 1) + 1)
        if d % 2 == 0:
            rows = reversed(rows)
        order.extend(r * size + (d - r) for r in rows)
    result = np.array(order, dtype=np.int64)
    result.setflags(write=False)
    return result


class BitWriter:
    """MSB-first bit sink backed by a bytearray."""

    def __init__(self):
        self._buffer = bytearray()
        self._acc = 0
        self._acc_bits = 0
        self.bit_count = 0

    def write(self, value: int, nbits: int):
        if nbits <= 0:
            return
        self._acc = (self._acc << nbits) | (value & ((1 << nbits) - 1))
        self._acc_bits += nbits
        self.bit_count += nbits
        while self._acc_bits >= 8:
            self._acc_bits -= 8
            self._buffer.append((self._acc >> self._acc_bits) & 0xFF)
        self._acc &= (1 << self._acc_bits) - 1

    def write_bit(self, bit: int):
        self.write(1 if bit else 0, 1)

    def write_ue(self, value: int) -> int:
        if value < 0:
            raise ValueError(f"ue() needs a non-negative value, got {value}")
        length = ue_length(value)
        # leading zeros are implied by the field width
        self.write(value + 1, length)
        return length

    def write_se(self, value: int) -> int:
        return self.write_ue(signed_to_unsigned(value))

    def getvalue(self) -> bytes:
        """Bytes written so far; a partial last byte is zero-padded."""
        if self._acc_bits:
            return bytes(self._buffer) + bytes([(self._acc << (8 - self._acc_bits)) & 0xFF])
        return bytes(self._buffer)


class BitReader:
    """MSB-first bit source over a bytes object."""

    def __init__(self, data: bytes, byte_offset: int = 0):
        self._data = data
        self._pos = byte_offset * 8
        self._end = len(data) * 8

    @property
    def bit_position(self) -> int:
        return self._pos

    @property
    def byte_offset(self) -> int:
        return self._pos // 8

    def bits_left(self) -> int:
        return self._end - self._pos

    def read_bit(self) -> int:
        if self._pos >= self._end:
            raise LengthError("Unexpected end of bitstream", offset=len(self._data))
        byte = self._data[self._pos >> 3]
        bit = (byte >> (7 - (self._pos & 7))) & 1
        self._pos += 1
        return bit

    def read(self, nbits: int) -> int:
        value = 0
        for _ in range(nbits):
            value = (value << 1) | self.read_bit()
        return value

    def read_ue(self) -> int:
        zeros = 0
        while self.read_bit() == 0:
            zeros += 1
            if zeros > MAX_GOLOMB_PREFIX:
                raise FormatError("Exp-Golomb prefix too long", offset=self.byte_offset)
        return ((1 << zeros) | self.read(zeros)) - 1

    def read_se(self) -> int:
        return unsigned_to_signed(self.read_ue())


def _bit_lengths(values: np.ndarray) -> np.ndarray:
    # frexp exponent == int.bit_length() for positive integers below 2**53
    return np.frexp(values.astype(np.float64))[1].astype(np.int64)


def rate_of(levels: np.ndarray, size: int) -> int:
    """Exact bit count encode_block would produce for these levels; touches no stream."""
    scan = np.asarray(levels, dtype=np.int64).reshape(-1)[zigzag_order(size)]
    nonzero = np.flatnonzero(scan)
    if nonzero.size == 0:
        return EOB_BITS
    runs = np.diff(nonzero, prepend=-1) - 1
    values = scan[nonzero]
    codes = np.where(values > 0, 2 * values - 1, -2 * values)
    bits = 2 * _bit_lengths(runs + 1) - 1
    bits += 2 * _bit_lengths(codes + 1) - 1
    return int(bits.sum()) + EOB_BITS


def encode_block(writer: BitWriter, levels: np.ndarray, size: int) -> int:
    """Appends one block to `writer`; returns the number of bits produced."""
    scan = np.asarray(levels, dtype=np.int64).reshape(-1)[zigzag_order(size)]
    start = writer.bit_count
    run = 0
    for level in scan.tolist():
        if level == 0:
            run += 1
            continue
        writer.write_ue(run)
        writer.write_se(level)
        run = 0
    writer.write_ue(0)
    writer.write_se(0)
    return writer.bit_count - start


def decode_block(reader: BitReader, size: int) -> np.ndarray:
    """Reads one block written by encode_block; returns (size, size) int64 levels."""
    count = size * size
    scan = np.zeros(count, dtype=np.int64)
    pos = 0
    while True:
        start = reader.byte_offset
        run = reader.read_ue()
        level = reader.read_se()
        if level == 0:
            if run == 0:
                break
            raise FormatError("Zero level inside a run/level pair", offset=start)
        pos += run
        if pos >= count:
            raise FormatError(f"Run overflows a {size}x{size} block", offset=start)
        scan[pos] = level
        pos += 1
    levels = np.zeros(count, dtype=np.int64)
    levels[zigzag_order(size)] = scan
    return levels.reshape(size, size)


def side_info_bits(choice: CodingChoice) -> int:
    """Partition flag plus se(delta QP)."""
    return PARTITION_FLAG_BITS + se_length(choice.delta_qp)


def encode_side_info(writer: BitWriter, choice: CodingChoice) -> int:
    writer.write_bit(int(choice.partition))
    return PARTITION_FLAG_BITS + writer.write_se(choice.delta_qp)
