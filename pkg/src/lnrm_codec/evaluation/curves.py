"""Rate-distortion sweeps and their CSV form."""
import csv
import io
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, List, Optional, Sequence, TextIO

import numpy as np

from lnrm_codec.codec.decoder import decode
from lnrm_codec.codec.encoder import encode
from lnrm_codec.codec.rdo import RdoConfig
from lnrm_codec.lib.errors import CodecError, ContractError, FormatError
from lnrm_codec.lib.models import Frame, GradientField
from lnrm_codec.metrics.base import Metric

logger = logging.getLogger("lnrm_codec")

CSV_COLUMNS = ("image", "variant", "qp", "bpp", "psnr_db", "sse", "nrm_score", "nrm_gap", "lnrm")
DISTORTION_COLUMNS = ("psnr_db", "sse", "nrm_score", "nrm_gap", "lnrm")
DEFAULT_QPS = (25, 28, 31, 34, 37)
PEAK = 255.0


@dataclass(frozen=True)
class RdPoint:
    """
    One encode/decode result.

    nrm_score is b(x_hat), nrm_gap is b(x_hat) - b(x) and lnrm is
    grad b(x)^T (x_hat - x); all three are NaN without a usable metric.
    """
    qp: int
    bpp: float
    psnr_db: float
    sse: float
    nrm_score: float = math.nan
    nrm_gap: float = math.nan
    lnrm: float = math.nan

    def value(self, column: str) -> float:
        if column not in DISTORTION_COLUMNS and column != "bpp":
            raise ContractError(f"Unknown RD column '{column}'")
        return float(getattr(self, column))


@dataclass
class RdCurve:
    """Points of one (image, variant) pair, kept sorted by rate."""
    image: str
    variant: str
    points: List[RdPoint] = field(default_factory=list)

    def __post_init__(self):
        self.points = sorted(self.points, key=lambda p: (p.bpp, p.qp))

    def add(self, point: RdPoint):
        self.points = sorted(self.points + [point], key=lambda p: (p.bpp, p.qp))

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.bpp for p in self.points], dtype=np.float64)

    def column(self, name: str) -> np.ndarray:
        return np.array([p.value(name) for p in self.points], dtype=np.float64)

    def __len__(self):
        return len(self.points)


def psnr(sse: float, n_total: int) -> float:
    """10 log10(255^2 n_total / SSE) over all planes; inf for a lossless result."""
    if sse <= 0:
        return math.inf
    return 10.0 * math.log10(PEAK * PEAK * n_total / sse)


def measure_point(frame: Frame, decoded: Frame, bits: int, qp: int, metric: Optional[Metric] = None,
                  gradient: Optional[GradientField] = None, base_score: Optional[float] = None) -> RdPoint:
    error = decoded.planes.astype(np.int64) - frame.planes.astype(np.int64)
    sse = float(np.sum(error * error))
    point = RdPoint(qp=qp, bpp=bits / frame.n_pixels, psnr_db=psnr(sse, frame.planes.size), sse=sse)

    if gradient is not None:
        lnrm = float(np.sum(gradient.values.astype(np.float64) * error))
        point = replace(point, lnrm=lnrm)
    if metric is not None and metric.evaluates_any_frame:
        score = metric.evaluate(decoded)
        base = metric.evaluate(frame) if base_score is None else base_score
        point = replace(point, nrm_score=score, nrm_gap=score - base)
    return point


def rd_sweep(frame: Frame, template: RdoConfig, qps: Sequence[int] = DEFAULT_QPS, metric: Optional[Metric] = None,
             image: str = "image", variant: Optional[str] = None, threads: int = 1) -> RdCurve:
    """
    Encodes and decodes `frame` at every QP of `qps`.

    The metric gradient is taken once for the whole sweep. Every decoded frame
    is checked against the encoder's own reconstruction.
    """
    variant = variant or template.mode.value
    gradient = metric.gradient(frame) if metric is not None else None
    base_score = None
    if metric is not None and not metric.evaluates_any_frame:
        logger.warning(f"Metric '{metric.name}' only scores its source frame; nrm_score and nrm_gap will be NaN")
    elif metric is not None:
        base_score = gradient.base_score

    curve = RdCurve(image, variant)
    for qp in qps:
        stream, report = encode(frame, replace(template, qp=qp), metric=metric, gradient=gradient, threads=threads)
        decoded = decode(stream)
        if decoded != report.reconstruction:
            raise CodecError(f"Decoder output differs from the encoder reconstruction ({image}, QP {qp})")
        curve.add(measure_point(frame, decoded, report.total_bits, qp, metric, gradient, base_score))
        logger.debug(f"{image}/{variant} QP {qp}: {report.bpp:.4f} bpp")
    logger.info(f"Swept {image} ({variant}) over {len(qps)} QPs")
    return curve


def format_value(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.10g}"


def write_curves(curves: Iterable[RdCurve], out: TextIO):
    """Writes the documented CSV schema, one row per point, header first."""
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for curve in curves:
        for p in curve.points:
            writer.writerow([curve.image, curve.variant, p.qp] +
                            [format_value(getattr(p, col)) for col in CSV_COLUMNS[3:]])


def curves_to_csv(curves: Iterable[RdCurve]) -> str:
    buffer = io.StringIO()
    write_curves(curves, buffer)
    return buffer.getvalue()


def write_curves_csv(curves: Iterable[RdCurve], path: str):
    with open(path, "w", newline="") as f:
        write_curves(curves, f)


def parse_curves(text: str) -> List[RdCurve]:
    """Inverse of curves_to_csv; curves keep their first-appearance order."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if header is None or tuple(header) != CSV_COLUMNS:
        raise FormatError(f"RD CSV header must be {','.join(CSV_COLUMNS)}")
    curves = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_COLUMNS):
            raise FormatError(f"RD CSV line {line_no} has {len(row)} fields, expected {len(CSV_COLUMNS)}")
        try:
            point = RdPoint(int(row[2]), *(float(v) for v in row[3:]))
        except ValueError as e:
            raise FormatError(f"RD CSV line {line_no}: {e}") from e
        key = (row[0], row[1])
        curves.setdefault(key, RdCurve(row[0], row[1])).add(point)
    return list(curves.values())


def read_curves_csv(path: str) -> List[RdCurve]:
    with open(path, "r", newline="") as f:
        return parse_curves(f.read())

