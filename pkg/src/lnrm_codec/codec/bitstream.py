"""
LNRMC1 bitstream container.

    offset  size  field
    0       6     magic b"LNRMC1"
    6       2     width (little-endian u16)
    8       2     height
    10      1     plane count (1 or 3)
    11      1     base QP
    12      1     chroma QP offset

followed by an MSB-first payload: for every plane, for every macroblock in
raster order, the partition flag, se(delta QP) and the run/level blocks. The
last byte is zero-padded.
"""
import struct
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from lnrm_codec.codec.entropy import BitReader, BitWriter, decode_block, encode_block, encode_side_info
from lnrm_codec.codec.quant import DELTA_QP_RANGE, QP_MAX, QP_MIN
from lnrm_codec.lib.errors import ContractError, FormatError, LengthError
from lnrm_codec.lib.models import MB_SIZE, CodingChoice, Partition

MAGIC = b"LNRMC1"
HEADER = struct.Struct("<6sHHBBB")
HEADER_BITS = 8 * HEADER.size
CHROMA_QP_OFFSET = 3
# width and height are u16 fields
HEADER_DIM_MAX = 0xFFFF


@dataclass(frozen=True)
class BitstreamHeader:
    width: int
    height: int
    plane_count: int
    base_qp: int
    chroma_qp_offset: int = CHROMA_QP_OFFSET

    def __post_init__(self):
        if self.plane_count not in (1, 3):
            raise ContractError(f"Plane count must be 1 or 3, got {self.plane_count}")
        if not QP_MIN <= self.base_qp <= QP_MAX:
            raise ContractError(f"Base QP must lie in [{QP_MIN}, {QP_MAX}], got {self.base_qp}")
        if not 0 < self.width <= HEADER_DIM_MAX or not 0 < self.height <= HEADER_DIM_MAX:
            raise ContractError(f"Frame {self.width}x{self.height} does not fit the header (sides 1..{HEADER_DIM_MAX})")

    def plane_qp(self, plane: int) -> int:
        return plane_qp(self.base_qp, plane, self.chroma_qp_offset)

    def pack(self) -> bytes:
        return HEADER.pack(MAGIC, self.width, self.height, self.plane_count, self.base_qp, self.chroma_qp_offset)

    @classmethod
    def unpack(cls, data: bytes) -> "BitstreamHeader":
        if len(data) < HEADER.size:
            if not MAGIC.startswith(bytes(data[:len(MAGIC)])):
                raise FormatError("Bad magic, not an LNRMC1 bitstream", offset=0)
            raise LengthError(f"Bitstream header needs {HEADER.size} bytes, got {len(data)}", offset=len(data))
        magic, width, height, plane_count, base_qp, offset = HEADER.unpack_from(data)
        if magic != MAGIC:
            raise FormatError("Bad magic, not an LNRMC1 bitstream", offset=0)
        if width == 0 or height == 0 or width % MB_SIZE or height % MB_SIZE:
            raise FormatError(f"Frame size {width}x{height} is not a positive multiple of {MB_SIZE}", offset=6)
        if plane_count not in (1, 3):
            raise FormatError(f"Unsupported plane count {plane_count}", offset=10)
        if base_qp > QP_MAX:
            raise FormatError(f"Base QP {base_qp} out of range", offset=11)
        return cls(width, height, plane_count, base_qp, offset)


def plane_qp(base_qp: int, plane: int, chroma_offset: int = CHROMA_QP_OFFSET) -> int:
    """Luma uses the base QP; chroma planes add the offset (clamped to the QP range)."""
    qp = base_qp if plane == 0 else base_qp + chroma_offset
    return min(max(qp, QP_MIN), QP_MAX)


def write_macroblock(writer: BitWriter, choice: CodingChoice, levels: np.ndarray) -> int:
    """Side information followed by every block of the macroblock; returns bits written."""
    size = choice.partition.block_size
    bits = encode_side_info(writer, choice)
    for block in levels:
        bits += encode_block(writer, block, size)
    return bits


def read_macroblock(reader: BitReader):
    """Inverse of write_macroblock: returns (CodingChoice, levels of shape (n, s, s))."""
    start = reader.byte_offset
    partition = Partition(reader.read_bit())
    delta_qp = reader.read_se()
    if delta_qp not in DELTA_QP_RANGE:
        raise FormatError(f"Delta QP {delta_qp} outside [-4, 4]", offset=start)
    size = partition.block_size
    count = (MB_SIZE // size) ** 2
    levels = np.stack([decode_block(reader, size) for _ in range(count)])
    return CodingChoice(partition, delta_qp), levels


def check_trailer(reader: BitReader, data: bytes):
    """After the last macroblock only zero padding inside the final byte may remain."""
    left = reader.bits_left()
    if left >= 8:
        raise FormatError(f"{left // 8} trailing byte(s) after the last macroblock", offset=reader.byte_offset + 1)
    if left and reader.read(left) != 0:
        raise FormatError("Non-zero padding bits", offset=len(data) - 1)


def assemble(header: BitstreamHeader,
             macroblocks: List[List[Tuple[CodingChoice, np.ndarray]]]) -> Tuple[bytes, List[List[int]]]:
    """
    Serializes a frame.

    Args:
        macroblocks: Per plane, the (CodingChoice, levels) of each macroblock in raster order.

    Returns:
        (stream bytes, payload bits spent per macroblock indexed [plane][macroblock])
    """
    writer = BitWriter()
    mb_bits = [[write_macroblock(writer, choice, levels) for choice, levels in plane] for plane in macroblocks]
    return header.pack() + writer.getvalue(), mb_bits
