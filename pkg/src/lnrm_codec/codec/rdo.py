"""
Per-macroblock rate-distortion optimization.

Three distortion modes share the same option set (2 partitions x 9 delta QPs)
and the same exact rate:

    SSE       d = ||z_hat - z||^2,                   lambda = c 2^((QP-12)/3)
    LNRM_REG  d = t^T (z_hat - z) + tau ||z_hat - z||^2, lambda = tau c 2^((QP-12)/3)
    DIRECT    d = b(x_hat) - b(x) + tau ||z_hat - z||^2 (caller-supplied metric change)

All terms are evaluated on transform coefficients; the DCT is orthonormal, so
they equal their pixel-domain counterparts. tau = alpha * tau_tilde with
tau_tilde = (2 / sqrt(n_p)) ||grad b(x)||_2 / Delta(QP), computed once per frame.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from lnrm_codec.codec.entropy import rate_of, side_info_bits
from lnrm_codec.codec.quant import DELTA_QP_RANGE, QP_MAX, QP_MIN, QuantParams, dequantize_array, quantize_array, step_of
from lnrm_codec.codec.transform import CoeffBlock, transform_macroblock
from lnrm_codec.lib.errors import ConfigurationError, ContractError
from lnrm_codec.lib.models import MB_SIZE, BlockCost, CodingChoice, GradientField, Partition

logger = logging.getLogger("lnrm_codec")

DEFAULT_C = 0.85
DEFAULT_ALPHA = 1.0
ALPHA_PRESETS = (2.0, 1.0, 0.5)

# 2^(r/3) for r = 0..2; lambda(qp + 3) == 2 * lambda(qp) exactly
_THIRD_ROOTS = tuple(2.0 ** (r / 3.0) for r in range(3))

OPTION_SET: Tuple[CodingChoice, ...] = tuple(
    CodingChoice(partition, dqp) for partition in (Partition.MB16, Partition.SUB4) for dqp in DELTA_QP_RANGE
)


class RdoMode(str, Enum):
    SSE = "sse"
    LNRM_REG = "lnrm"
    DIRECT = "direct"

    @property
    def uses_metric(self) -> bool:
        return self is not RdoMode.SSE


@dataclass(frozen=True)
class RdoConfig:
    """
    Encoder RDO parameters.

    Attributes:
        qp: Base (luma) QP; lambda and tau_tilde are derived from it.
        mode: Distortion mode.
        c: Lagrangian constant.
        alpha: SSE regularization scale, tau = alpha * tau_tilde.
        tau_override: Explicit tau; bypasses alpha and allows a zero gradient.
        tau_tilde, tau, lam: Derived by finalize(); None until then.
    """
    qp: int
    mode: RdoMode = RdoMode.SSE
    c: float = DEFAULT_C
    alpha: float = DEFAULT_ALPHA
    tau_override: Optional[float] = None
    tau_tilde: Optional[float] = None
    tau: Optional[float] = None
    lam: Optional[float] = None
    gradient_norm: Optional[float] = None

    def __post_init__(self):
        if not QP_MIN <= self.qp <= QP_MAX:
            raise ContractError(f"QP must lie in [{QP_MIN}, {QP_MAX}], got {self.qp}")
        if not self.c > 0:
            raise ContractError(f"c must be positive, got {self.c}")
        if not self.alpha > 0:
            raise ContractError(f"alpha must be positive, got {self.alpha}")
        if self.tau_override is not None and not self.tau_override > 0:
            raise ContractError(f"tau must be positive, got {self.tau_override}")
        object.__setattr__(self, "mode", RdoMode(self.mode))

    @property
    def finalized(self) -> bool:
        return self.lam is not None

    @property
    def step(self) -> float:
        return step_of(self.qp)

    def finalize(self, gradient: Optional[GradientField] = None, n_p: Optional[int] = None) -> "RdoConfig":
        """
        Derives tau_tilde, tau and lambda for one frame.

        Args:
            gradient: Metric gradient at the input frame (required unless mode is SSE).
            n_p: Entry count the gradient norm runs over; defaults to gradient.values.size.

        Raises:
            ConfigurationError: metric mode without gradient, or a zero gradient
                without an explicit tau.
        """
        if self.mode is RdoMode.SSE:
            finalized = replace(self, tau_tilde=None, tau=None, lam=None)
            return replace(finalized, lam=compute_lambda(finalized))

        if gradient is None:
            raise ConfigurationError(f"Mode '{self.mode.value}' needs a metric or an external gradient")
        n_p = gradient.values.size if n_p is None else n_p
        norm = gradient.norm()
        tau_tilde = compute_tau_tilde(norm, self.step, n_p)
        if self.tau_override is not None:
            tau = float(self.tau_override)
        elif tau_tilde > 0:
            tau = self.alpha * tau_tilde
        else:
            raise ConfigurationError(
                "The metric gradient is zero for this frame, so tau cannot be derived; "
                "use --mode sse (or pass an explicit --tau)"
            )
        finalized = replace(self, tau_tilde=tau_tilde, tau=tau, gradient_norm=norm)
        return replace(finalized, lam=compute_lambda(finalized))


def lagrangian_base(qp: int, c: float = DEFAULT_C) -> float:
    """c * 2^((qp - 12) / 3), exact under qp -> qp + 3."""
    octave, rest = divmod(int(qp) - 12, 3)
    return c * math.ldexp(_THIRD_ROOTS[rest], octave)


def compute_lambda(config: RdoConfig) -> float:
    """Lagrange multiplier: SSE mode uses the classic law, metric modes scale it by tau."""
    base = lagrangian_base(config.qp, config.c)
    if config.mode is RdoMode.SSE:
        return base
    if config.tau is None:
        raise ConfigurationError("tau is not set; call RdoConfig.finalize() first")
    return config.tau * base


def compute_tau_tilde(gradient: Union[GradientField, float], step: float, n_p: int) -> float:
    """Normalized regularization weight (2 / sqrt(n_p)) * ||grad b||_2 / step."""
    if n_p <= 0 or not step > 0:
        raise ContractError(f"compute_tau_tilde needs n_p > 0 and step > 0 (got {n_p}, {step})")
    norm = gradient.norm() if isinstance(gradient, GradientField) else float(gradient)
    return (2.0 / math.sqrt(n_p)) * norm / step


def worst_case_terms(gradient: GradientField, step: float, n_p: Optional[int] = None) -> Tuple[float, float]:
    """
    Largest achievable LNRM and SSE under uniform quantization with `step`.

    The error norm is at most sqrt(n_p) * step / 2; by Cauchy-Schwarz the LNRM
    peaks at ||grad b||_2 times that norm when the error aligns with the gradient.
    """
    n_p = gradient.values.size if n_p is None else n_p
    max_error_norm = math.sqrt(n_p) * step / 2.0
    return gradient.norm() * max_error_norm, max_error_norm * max_error_norm


def _coeffs(block) -> np.ndarray:
    return block.coeffs if isinstance(block, CoeffBlock) else np.asarray(block, dtype=np.float64)


def sse_cost(z, z_hat) -> float:
    """||z_hat - z||^2."""
    error = _coeffs(z_hat) - _coeffs(z)
    return float(np.sum(error * error))


def lnrm_reg_cost(z, z_hat, t, tau: float) -> float:
    """t^T (z_hat - z) + tau ||z_hat - z||^2; negative values are legitimate."""
    if not tau > 0:
        raise ContractError(f"tau must be positive, got {tau}")
    error = _coeffs(z_hat) - _coeffs(z)
    return float(np.sum(_coeffs(t) * error)) + tau * float(np.sum(error * error))


@dataclass
class MacroblockContext:
    """Coefficients z and transform-domain gradient t of one macroblock, per partition."""
    coeffs: dict
    grads: Optional[dict]

    @classmethod
    def build(cls, residual: np.ndarray, grad_mb: Optional[np.ndarray] = None) -> "MacroblockContext":
        residual = np.asarray(residual, dtype=np.float64)
        if residual.shape != (MB_SIZE, MB_SIZE):
            raise ContractError(f"Macroblock must be {MB_SIZE}x{MB_SIZE}, got {residual.shape}")
        coeffs = {p: transform_macroblock(residual, p) for p in Partition}
        grads = None
        if grad_mb is not None:
            grad_mb = np.asarray(grad_mb, dtype=np.float64)
            if grad_mb.shape != residual.shape:
                raise ContractError(f"Gradient slice {grad_mb.shape} does not match macroblock {residual.shape}")
            grads = {p: transform_macroblock(grad_mb, p) for p in Partition}
        return cls(coeffs, grads)


DirectDistortion = Callable[[CodingChoice, np.ndarray], float]


def evaluate_choice(ctx: MacroblockContext, choice: CodingChoice, config: RdoConfig, plane_qp: Optional[int] = None,
                    direct_distortion: Optional[DirectDistortion] = None) -> Tuple[BlockCost, np.ndarray]:
    """
    Cost of one option for one macroblock.

    Returns:
        (BlockCost, levels) with levels shaped (blocks, size, size).
    """
    if not config.finalized:
        raise ConfigurationError("RdoConfig must be finalized before evaluating options")
    qp = config.qp if plane_qp is None else plane_qp
    step = QuantParams(qp, choice.delta_qp).step
    size = choice.partition.block_size
    z = ctx.coeffs[choice.partition]
    levels = quantize_array(z, step)
    error = dequantize_array(levels, step) - z
    sse = float(np.sum(error * error))

    lnrm = 0.0
    if ctx.grads is not None:
        lnrm = float(np.sum(ctx.grads[choice.partition] * error))

    if config.mode is RdoMode.SSE:
        distortion = sse
    elif config.mode is RdoMode.LNRM_REG:
        if ctx.grads is None:
            raise ConfigurationError("LNRM mode needs the macroblock gradient")
        distortion = lnrm + config.tau * sse
    else:
        if direct_distortion is None:
            raise ConfigurationError("Direct mode needs a metric-change callback")
        distortion = direct_distortion(choice, levels) + config.tau * sse

    rate = side_info_bits(choice) + sum(rate_of(block, size) for block in levels)
    return BlockCost(distortion=distortion, rate_bits=rate, lam=config.lam, sse=sse, lnrm=lnrm), levels


@dataclass(frozen=True)
class MacroblockDecision:
    choice: CodingChoice
    cost: BlockCost
    levels: np.ndarray


def select_choice(mb: np.ndarray, grad_mb: Optional[np.ndarray], config: RdoConfig, plane_qp: Optional[int] = None,
                  direct_distortion: Optional[DirectDistortion] = None) -> MacroblockDecision:
    """
    Exhaustive search over the 18 options of one macroblock.

    Args:
        mb: 16x16 residual (samples minus 128).
        grad_mb: 16x16 gradient slice, or None in SSE mode.
        config: Finalized configuration.
        plane_qp: QP of the plane being coded (luma QP, or luma QP + chroma offset).
        direct_distortion: Metric change per option, DIRECT mode only.

    Ties on total cost go to the smaller |delta QP|, then MB16, then the smaller delta QP.
    """
    ctx = MacroblockContext.build(mb, grad_mb)
    best = None
    for choice in OPTION_SET:
        cost, levels = evaluate_choice(ctx, choice, config, plane_qp, direct_distortion)
        key = (cost.total, choice.tie_key())
        if best is None or key < best[0]:
            best = (key, MacroblockDecision(choice, cost, levels))
    return best[1]


def evaluate_all(mb: np.ndarray, grad_mb: Optional[np.ndarray], config: RdoConfig,
                 plane_qp: Optional[int] = None) -> List[Tuple[CodingChoice, BlockCost]]:
    """Cost of every option (diagnostics and brute-force checks)."""
    ctx = MacroblockContext.build(mb, grad_mb)
    return [(choice, evaluate_choice(ctx, choice, config, plane_qp)[0]) for choice in OPTION_SET]
