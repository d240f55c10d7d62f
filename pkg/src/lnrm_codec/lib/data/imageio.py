"""PGM/PPM frames and LNRMG1 gradient files."""
import logging
import os
import struct
from typing import List, Tuple, Union

import numpy as np

from lnrm_codec.lib.errors import FormatError, GradientValueError, LengthError
from lnrm_codec.lib.models import Frame, GradientField

logger = logging.getLogger("lnrm_codec")

PathLike = Union[str, os.PathLike]

NETPBM_PLANES = {b"P5": 1, b"P6": 3}
NETPBM_MAXVAL = 255

GRADIENT_MAGIC = b"LNRMG1\n"
# width, height, plane count, base score
GRADIENT_HEADER = struct.Struct("<IIBd")


def _read_header_tokens(data: bytes, count: int) -> Tuple[List[bytes], int]:
    """
    Reads `count` whitespace-separated header tokens, skipping '#' comments.

    Returns:
        (tokens, offset of the first raster byte).
    """
    tokens = []
    pos = 0
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise FormatError("Header ended early", offset=pos)
        if data[pos:pos + 1] == b"#":
            end = data.find(b"\n", pos)
            pos = len(data) if end < 0 else end + 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
            pos += 1
        tokens.append(data[start:pos])
    # exactly one whitespace byte separates maxval from the raster
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError("Missing whitespace after header", offset=pos)
    return tokens, pos + 1


def parse_netpbm(data: bytes) -> Frame:
    """Decodes a binary PGM (P5) or PPM (P6) image held in memory."""
    tokens, raster_start = _read_header_tokens(data, 4)
    magic, width_tok, height_tok, maxval_tok = tokens
    if magic not in NETPBM_PLANES:
        raise FormatError(f"Unsupported magic {magic!r}; expected P5 or P6", offset=0)
    try:
        width, height, maxval = int(width_tok), int(height_tok), int(maxval_tok)
    except ValueError:
        raise FormatError(f"Non-numeric header fields: {width_tok!r} {height_tok!r} {maxval_tok!r}")
    if width <= 0 or height <= 0:
        raise FormatError(f"Invalid dimensions {width}x{height}")
    if maxval != NETPBM_MAXVAL:
        raise FormatError(f"Only 8-bit images are supported (maxval {maxval})")

    n_planes = NETPBM_PLANES[magic]
    expected = width * height * n_planes
    raster = data[raster_start:raster_start + expected]
    if len(raster) < expected:
        raise LengthError(f"Raster has {len(raster)} bytes, expected {expected}", offset=raster_start)

    samples = np.frombuffer(raster, dtype=np.uint8).reshape(height, width, n_planes)
    return Frame(np.transpose(samples, (2, 0, 1)))


def load_frame(path: PathLike) -> Frame:
    """
    Loads a PGM (one plane) or PPM (three full-resolution planes) file.

    Samples are kept exactly as stored: no colour conversion, no subsampling.
    """
    with open(path, "rb") as f:
        data = f.read()
    frame = parse_netpbm(data)
    logger.debug(f"Loaded {path}: {frame.width}x{frame.height}, {frame.plane_count} plane(s)")
    return frame


def encode_netpbm(frame: Frame) -> bytes:
    magic = b"P5" if frame.plane_count == 1 else b"P6"
    header = magic + f"\n{frame.width} {frame.height}\n{NETPBM_MAXVAL}\n".encode("ascii")
    raster = np.transpose(frame.planes, (1, 2, 0)).tobytes()
    return header + raster


def save_frame(frame: Frame, path: PathLike):
    """Writes a frame as PGM (1 plane) or PPM (3 planes)."""
    with open(path, "wb") as f:
        f.write(encode_netpbm(frame))


def save_map(values: np.ndarray, path: PathLike):
    """Writes a 2-D array scaled to 0..255 as a PGM (for bit-allocation maps)."""
    values = np.asarray(values, dtype=np.float64)
    peak = values.max() if values.size else 0.0
    scaled = np.zeros(values.shape) if peak <= 0 else values / peak * 255.0
    pixels = np.clip(np.floor(scaled + 0.5), 0, 255).astype(np.uint8)
    header = f"P5\n{pixels.shape[1]} {pixels.shape[0]}\n{NETPBM_MAXVAL}\n".encode("ascii")
    with open(path, "wb") as f:
        f.write(header + pixels.tobytes())


def encode_gradient(field: GradientField) -> bytes:
    header = GRADIENT_HEADER.pack(field.width, field.height, field.plane_count, field.base_score)
    payload = field.values.astype("<f4").tobytes()
    return GRADIENT_MAGIC + header + payload


def decode_gradient(data: bytes) -> GradientField:
    if not data.startswith(GRADIENT_MAGIC):
        raise FormatError(f"Bad gradient magic {data[:len(GRADIENT_MAGIC)]!r}", offset=0)
    pos = len(GRADIENT_MAGIC)
    if len(data) < pos + GRADIENT_HEADER.size:
        raise LengthError("Gradient header is truncated", offset=len(data))
    width, height, n_planes, base_score = GRADIENT_HEADER.unpack_from(data, pos)
    pos += GRADIENT_HEADER.size
    expected = n_planes * width * height * 4
    payload = data[pos:pos + expected]
    if len(payload) < expected:
        raise LengthError(f"Gradient payload has {len(payload)} bytes, expected {expected}", offset=len(data))
    values = np.frombuffer(payload, dtype="<f4").reshape(n_planes, height, width)
    if not np.all(np.isfinite(values)) or not np.isfinite(base_score):
        raise GradientValueError("Gradient file contains NaN or Inf values")
    return GradientField(values.astype(np.float32), base_score)


def write_gradient(field: GradientField, path: PathLike):
    """
    Writes a gradient field in the LNRMG1 format.

    Layout: magic "LNRMG1\\n", little-endian u32 width, u32 height, u8 plane count,
    f64 base score, then plane-major row-major f32 values.
    """
    with open(path, "wb") as f:
        f.write(encode_gradient(field))
    logger.debug(f"Gradient written: {path}")


def read_gradient(path: PathLike) -> GradientField:
    """Reads an LNRMG1 gradient file (see write_gradient)."""
    with open(path, "rb") as f:
        data = f.read()
    return decode_gradient(data)
