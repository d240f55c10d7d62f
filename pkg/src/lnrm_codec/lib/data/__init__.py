"""Frame and gradient file formats."""

from lnrm_codec.lib.data.imageio import (
    load_frame,
    save_frame,
    save_map,
    parse_netpbm,
    encode_netpbm,
    read_gradient,
    write_gradient,
    encode_gradient,
    decode_gradient,
)

__all__ = [
    "load_frame",
    "save_frame",
    "save_map",
    "parse_netpbm",
    "encode_netpbm",
    "read_gradient",
    "write_gradient",
    "encode_gradient",
    "decode_gradient",
]
