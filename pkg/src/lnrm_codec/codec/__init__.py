"""Block-transform codec with metric-aware rate-distortion optimization."""

from lnrm_codec.codec.rdo import RdoConfig, RdoMode, select_choice, sse_cost, lnrm_reg_cost, compute_tau_tilde, compute_lambda
from lnrm_codec.codec.encoder import EncodeReport, encode, bits_map
from lnrm_codec.codec.decoder import decode

__all__ = [
    "RdoConfig",
    "RdoMode",
    "select_choice",
    "sse_cost",
    "lnrm_reg_cost",
    "compute_tau_tilde",
    "compute_lambda",
    "EncodeReport",
    "encode",
    "bits_map",
    "decode",
]
