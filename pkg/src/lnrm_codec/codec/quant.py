"""Uniform scalar quantization with step Delta(QP) = 2^((QP - 4) / 6)."""
import math
from dataclasses import dataclass, field

import numpy as np

from lnrm_codec.codec.transform import CoeffBlock
from lnrm_codec.lib.errors import ContractError
from lnrm_codec.lib.utils import round_half_away

QP_MIN = 0
QP_MAX = 51
DELTA_QP_RANGE = tuple(range(-4, 5))

# 2^(r/6) for r = 0..5; Delta is built with ldexp so Delta(qp + 6) == 2 * Delta(qp) exactly
_SIXTH_ROOTS = tuple(2.0 ** (r / 6.0) for r in range(6))


def step_of(qp: int) -> float:
    """Quantizer step for an effective QP in [0, 51]."""
    if not isinstance(qp, (int, np.integer)) or not QP_MIN <= qp <= QP_MAX:
        raise ContractError(f"QP must be an integer in [{QP_MIN}, {QP_MAX}], got {qp!r}")
    octave, rest = divmod(int(qp) - 4, 6)
    return math.ldexp(_SIXTH_ROOTS[rest], octave)


def clamp_qp(qp: int) -> int:
    return min(max(int(qp), QP_MIN), QP_MAX)


@dataclass(frozen=True)
class QuantParams:
    """Base QP plus macroblock delta QP; `step` is derived from the clamped sum."""
    qp: int
    delta_qp: int = 0
    step: float = field(init=False)

    def __post_init__(self):
        if self.delta_qp not in DELTA_QP_RANGE:
            raise ContractError(f"delta_qp must lie in [-4, 4], got {self.delta_qp}")
        object.__setattr__(self, "step", step_of(self.effective_qp))

    @property
    def effective_qp(self) -> int:
        return clamp_qp(self.qp + self.delta_qp)


def quantize_array(coeffs: np.ndarray, step: float) -> np.ndarray:
    """Integer levels round(c / step), ties away from zero, as int64."""
    return round_half_away(np.asarray(coeffs, dtype=np.float64) / step).astype(np.int64)


def dequantize_array(levels: np.ndarray, step: float) -> np.ndarray:
    return np.asarray(levels, dtype=np.float64) * step


def quantize(coeffs: CoeffBlock, step: float) -> np.ndarray:
    """Levels of a coefficient block, shape (size, size)."""
    if not step > 0:
        raise ContractError(f"Quantizer step must be positive, got {step}")
    return quantize_array(coeffs.coeffs, step)


def dequantize(levels: np.ndarray, step: float) -> CoeffBlock:
    """Reconstructed coefficients z_hat = step * level."""
    levels = np.asarray(levels)
    size = int(round(math.sqrt(levels.size)))
    return CoeffBlock(size, dequantize_array(levels, step))
