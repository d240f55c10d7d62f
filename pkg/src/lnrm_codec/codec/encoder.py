import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from lnrm_codec.codec.bitstream import HEADER_BITS, BitstreamHeader, assemble
from lnrm_codec.codec.decoder import RESIDUAL_OFFSET, reconstruct_macroblock, to_samples
from lnrm_codec.codec.rdo import MacroblockDecision, RdoConfig, RdoMode, select_choice
from lnrm_codec.lib.errors import ConfigurationError, ContractError
from lnrm_codec.lib.models import MB_SIZE, BlockCost, CodingChoice, Frame, GradientField
from lnrm_codec.lib.utils import iter_macroblocks, macroblock_grid
from lnrm_codec.metrics.base import Metric

logger = logging.getLogger("lnrm_codec")


@dataclass
class EncodeReport:
    """
    Everything the encoder decided and measured for one frame.

    Per-macroblock lists are indexed [plane][macroblock], raster order.
    """
    config: RdoConfig
    header: BitstreamHeader
    total_bits: int
    choices: List[List[CodingChoice]]
    mb_bits: List[List[int]]
    mb_costs: List[List[BlockCost]]
    reconstruction: Frame
    unclamped: np.ndarray
    gradient: Optional[GradientField] = None
    metric_name: Optional[str] = None
    gradient_calls: int = 0

    @property
    def header_bits(self) -> int:
        return HEADER_BITS

    @property
    def payload_bits(self) -> int:
        return sum(sum(bits) for bits in self.mb_bits)

    @property
    def padding_bits(self) -> int:
        return self.total_bits - self.header_bits - self.payload_bits

    @property
    def bpp(self) -> float:
        return self.total_bits / (self.header.width * self.header.height)

    @property
    def rdo_distortion(self) -> float:
        return sum(cost.distortion for plane in self.mb_costs for cost in plane)

    @property
    def transform_sse(self) -> float:
        return sum(cost.sse for plane in self.mb_costs for cost in plane)

    @property
    def transform_lnrm(self) -> float:
        return sum(cost.lnrm for plane in self.mb_costs for cost in plane)

    def choice_histogram(self) -> Dict[str, int]:
        counts = Counter(f"{c.partition.name}:{c.delta_qp:+d}" for plane in self.choices for c in plane)
        return dict(sorted(counts.items()))

    def to_dict(self) -> dict:
        cfg = self.config
        return {
            "width": self.header.width,
            "height": self.header.height,
            "planes": self.header.plane_count,
            "qp": cfg.qp,
            "mode": cfg.mode.value,
            "metric": self.metric_name,
            "c": cfg.c,
            "alpha": cfg.alpha,
            "tau_tilde": cfg.tau_tilde,
            "tau": cfg.tau,
            "lambda": cfg.lam,
            "total_bits": self.total_bits,
            "header_bits": self.header_bits,
            "payload_bits": self.payload_bits,
            "padding_bits": self.padding_bits,
            "bpp": self.bpp,
            "sse": self.transform_sse,
            "lnrm": self.transform_lnrm,
            "rdo_distortion": self.rdo_distortion,
            "choices": self.choice_histogram(),
        }


def bits_map(report: EncodeReport, plane: int = 0) -> np.ndarray:
    """Bits spent per macroblock of one plane, shape (mb_rows, mb_cols)."""
    if not 0 <= plane < report.header.plane_count:
        raise ContractError(f"Plane {plane} out of range for a {report.header.plane_count}-plane frame")
    rows, cols = macroblock_grid(report.header.height, report.header.width)
    return np.asarray(report.mb_bits[plane], dtype=np.int64).reshape(rows, cols)


def _mb(array: np.ndarray, row: int, col: int) -> np.ndarray:
    return array[row:row + MB_SIZE, col:col + MB_SIZE]


def _decide_plane(residual: np.ndarray, grad: Optional[np.ndarray], config: RdoConfig, qp: int,
                  threads: int) -> List[MacroblockDecision]:
    positions = [(row, col) for _, row, col in iter_macroblocks(*residual.shape)]

    def decide(position):
        row, col = position
        grad_mb = None if grad is None else _mb(grad, row, col)
        return select_choice(_mb(residual, row, col), grad_mb, config, qp)

    if threads > 1:
        # macroblock decisions are independent; map() keeps raster order
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(decide, positions))
    return [decide(p) for p in positions]


def _decide_plane_direct(work: np.ndarray, plane: int, original: np.ndarray, metric: Metric, base_score: float,
                         config: RdoConfig, qp: int) -> List[MacroblockDecision]:
    """Greedy raster-order search on the true metric change; `work` receives each chosen reconstruction."""
    decisions = []
    residual = original[plane] - RESIDUAL_OFFSET
    for _, row, col in iter_macroblocks(*residual.shape):
        window = _mb(work[plane], row, col)

        def metric_change(choice: CodingChoice, levels: np.ndarray) -> float:
            window[...] = to_samples(reconstruct_macroblock(levels, choice, qp))
            return metric.score(work) - base_score

        decision = select_choice(_mb(residual, row, col), None, config, qp, direct_distortion=metric_change)
        window[...] = to_samples(reconstruct_macroblock(decision.levels, decision.choice, qp))
        decisions.append(decision)
    return decisions


def encode(frame: Frame, config: RdoConfig, metric: Optional[Metric] = None, gradient: Optional[GradientField] = None,
           threads: int = 1) -> Tuple[bytes, EncodeReport]:
    """
    Encodes one frame.

    Args:
        frame: Input frame (dimensions multiple of 16).
        config: RDO parameters; derived values are filled in per frame.
        metric: No-reference metric; its gradient is taken once, before the macroblock loop.
        gradient: Precomputed gradient, used instead of metric.gradient().
        threads: Worker threads for the macroblock search (SSE and LNRM modes).

    Returns:
        (bitstream bytes, EncodeReport)

    Raises:
        ContractError: gradient dimensions differ from the frame, or the frame does not fit the header.
        ConfigurationError: metric mode without a metric, or a zero gradient.
    """
    if threads < 1:
        raise ContractError(f"threads must be >= 1, got {threads}")
    header = BitstreamHeader(frame.width, frame.height, frame.plane_count, config.qp)
    gradient_calls = 0
    if gradient is None and metric is not None:
        gradient = metric.gradient(frame)
        gradient_calls = 1
    if gradient is not None and not gradient.matches(frame):
        raise ContractError(
            f"Gradient is {gradient.width}x{gradient.height}x{gradient.plane_count}, "
            f"frame is {frame.width}x{frame.height}x{frame.plane_count}"
        )
    if config.mode is RdoMode.DIRECT:
        if metric is None or not metric.evaluates_any_frame:
            raise ConfigurationError("Direct mode needs a metric that can score arbitrary frames")

    config = config.finalize(gradient)
    logger.info(f"Encoding {frame.width}x{frame.height}x{frame.plane_count} at QP {config.qp}, "
                f"mode {config.mode.value}, lambda {config.lam:.6g}"
                + (f", tau {config.tau:.6g} (tau_tilde {config.tau_tilde:.6g})" if config.tau is not None else ""))

    original = frame.as_float()
    work = original.copy()
    base_score = metric.score(original) if config.mode is RdoMode.DIRECT else 0.0

    unclamped = np.zeros_like(original)
    choices, mb_costs, macroblocks = [], [], []
    for plane in range(frame.plane_count):
        qp = header.plane_qp(plane)
        if config.mode is RdoMode.DIRECT:
            decisions = _decide_plane_direct(work, plane, original, metric, base_score, config, qp)
        else:
            grad = None if gradient is None else gradient.values[plane].astype(np.float64)
            decisions = _decide_plane(original[plane] - RESIDUAL_OFFSET, grad, config, qp, threads)

        for decision, (_, row, col) in zip(decisions, iter_macroblocks(frame.height, frame.width)):
            _mb(unclamped[plane], row, col)[...] = reconstruct_macroblock(decision.levels, decision.choice, qp)
        choices.append([d.choice for d in decisions])
        mb_costs.append([d.cost for d in decisions])
        macroblocks.append([(d.choice, d.levels) for d in decisions])

    stream, mb_bits = assemble(header, macroblocks)
    report = EncodeReport(
        config=config,
        header=header,
        total_bits=8 * len(stream),
        choices=choices,
        mb_bits=mb_bits,
        mb_costs=mb_costs,
        reconstruction=Frame(to_samples(unclamped)),
        unclamped=unclamped,
        gradient=gradient,
        metric_name=None if metric is None else metric.name,
        gradient_calls=gradient_calls,
    )
    logger.info(f"Encoded {report.total_bits} bits ({report.bpp:.4f} bpp)")
    return stream, report
