import logging

import numpy as np

from lnrm_codec.codec.bitstream import HEADER, BitstreamHeader, check_trailer, read_macroblock
from lnrm_codec.codec.entropy import BitReader
from lnrm_codec.codec.quant import QuantParams, dequantize_array
from lnrm_codec.codec.transform import inverse_batch, merge_macroblock
from lnrm_codec.lib.models import MB_SIZE, CodingChoice, Frame
from lnrm_codec.lib.utils import iter_macroblocks, round_half_away

logger = logging.getLogger("lnrm_codec")

RESIDUAL_OFFSET = 128.0


def reconstruct_macroblock(levels: np.ndarray, choice: CodingChoice, plane_qp: int) -> np.ndarray:
    """Unclamped 16x16 reconstruction (offset included) from quantized levels."""
    step = QuantParams(plane_qp, choice.delta_qp).step
    residual = merge_macroblock(inverse_batch(dequantize_array(levels, step)), choice.partition)
    return residual + RESIDUAL_OFFSET


def to_samples(values: np.ndarray) -> np.ndarray:
    """Clamp to [0, 255] and round half away from zero."""
    return round_half_away(np.clip(values, 0.0, 255.0)).astype(np.uint8)


def decode(data: bytes) -> Frame:
    """
    Decodes an LNRMC1 bitstream.

    Raises:
        FormatError: bad magic, malformed syntax or trailing data (with the byte offset).
        LengthError: the stream ends early.
    """
    data = bytes(data)
    header = BitstreamHeader.unpack(data)
    reader = BitReader(data, HEADER.size)
    planes = np.zeros((header.plane_count, header.height, header.width), dtype=np.float64)
    for plane in range(header.plane_count):
        qp = header.plane_qp(plane)
        for _, row, col in iter_macroblocks(header.height, header.width):
            choice, levels = read_macroblock(reader)
            planes[plane, row:row + MB_SIZE, col:col + MB_SIZE] = reconstruct_macroblock(levels, choice, qp)
    check_trailer(reader, data)
    logger.debug(f"Decoded {header.width}x{header.height}x{header.plane_count} from {len(data)} bytes")
    return Frame(to_samples(planes))
