"""Corpus-level BD-rate tables and encoder overhead."""
import io
import csv
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from lnrm_codec.codec.encoder import encode
from lnrm_codec.codec.rdo import DEFAULT_C, RdoConfig, RdoMode
from lnrm_codec.evaluation.bdrate import bd_metric, bd_rate_report
from lnrm_codec.evaluation.corpus import load_corpus
from lnrm_codec.evaluation.curves import DEFAULT_QPS, RdCurve, format_value, rd_sweep
from lnrm_codec.lib.data.imageio import PathLike
from lnrm_codec.lib.errors import ConfigurationError, ContractError, RangeError
from lnrm_codec.lib.models import Frame
from lnrm_codec.metrics.base import Metric
from lnrm_codec.metrics.tv_score import TvScore

logger = logging.getLogger("lnrm_codec")

REPORT_COLUMNS = ("psnr_db", "nrm_score")
SUMMARY_ROWS = ("mean", "stderr")


@dataclass(frozen=True)
class Variant:
    """An RDO variant of a sweep, written 'sse', 'lnrm:<alpha>' or 'direct:<alpha>'."""
    mode: RdoMode
    alpha: float = 1.0

    @property
    def label(self) -> str:
        if self.mode is RdoMode.SSE:
            return "sse"
        return f"{self.mode.value}:{format_value(self.alpha)}"

    def config(self, qp: int, c: float = DEFAULT_C) -> RdoConfig:
        return RdoConfig(qp=qp, mode=self.mode, c=c, alpha=self.alpha)


def parse_variant(text: str) -> Variant:
    name, _, alpha = text.strip().partition(":")
    try:
        mode = RdoMode(name)
    except ValueError:
        raise ContractError(f"Unknown variant '{text}' (use sse, lnrm:<alpha> or direct:<alpha>)") from None
    if mode is RdoMode.SSE:
        if alpha:
            raise ContractError(f"Variant 'sse' takes no alpha, got '{text}'")
        return Variant(mode)
    try:
        value = float(alpha) if alpha else 1.0
    except ValueError:
        raise ContractError(f"Bad alpha in variant '{text}'") from None
    if not value > 0:
        raise ContractError(f"Variant alpha must be positive, got '{text}'")
    return Variant(mode, value)


def parse_variants(text: str) -> List[Variant]:
    variants = [parse_variant(part) for part in text.split(",") if part.strip()]
    if not variants:
        raise ContractError("No variants given")
    return variants


def sweep_corpus(images: Sequence[Tuple[str, Frame]], variants: Sequence[Variant], metric: Metric,
                 qps: Sequence[int] = DEFAULT_QPS, c: float = DEFAULT_C, threads: int = 1) -> List[RdCurve]:
    """
    RD curves for every (image, variant); sweeps run concurrently, results keep input order.

    An (image, variant) pair whose RDO cannot be configured (a flat image has a
    zero metric gradient) is logged and left out; `aggregate` flags its row.
    """
    jobs = [(name, frame, variant) for name, frame in images for variant in variants]

    def run(job):
        name, frame, variant = job
        try:
            return rd_sweep(frame, variant.config(qps[0], c), qps, metric=metric, image=name, variant=variant.label)
        except ConfigurationError as e:
            logger.warning(f"Skipping {name} ({variant.label}): {e}")
            return None

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            curves = list(pool.map(run, jobs))
    else:
        curves = [run(job) for job in jobs]
    return [curve for curve in curves if curve is not None]


@dataclass
class ReportRow:
    image: str
    anchor: str
    test: str
    values: Dict[str, float] = field(default_factory=dict)
    flagged: bool = False


def _value_columns(columns: Sequence[str]) -> List[str]:
    return [f"bd_rate_{c}" for c in columns] + [f"bd_metric_{c}" for c in columns]


@dataclass
class ReportTable:
    """Per-image BD rows followed by corpus mean and standard-error rows for each test variant."""
    columns: Tuple[str, ...]
    rows: List[ReportRow]

    def summary(self, test: str, kind: str = "mean") -> ReportRow:
        for row in self.rows:
            if row.image == kind and row.test == test:
                return row
        raise KeyError(f"No '{kind}' row for variant '{test}'")

    def per_image(self, test: str) -> List[ReportRow]:
        return [r for r in self.rows if r.test == test and r.image not in SUMMARY_ROWS]

    def to_csv(self) -> str:
        value_columns = _value_columns(self.columns)
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(["image", "anchor", "test"] + value_columns + ["flagged"])
        for row in self.rows:
            writer.writerow([row.image, row.anchor, row.test]
                            + [format_value(row.values.get(c, math.nan)) for c in value_columns]
                            + [int(row.flagged)])
        return buffer.getvalue()


def _summarize(values: List[float]) -> Tuple[float, float]:
    finite = np.array([v for v in values if math.isfinite(v)], dtype=np.float64)
    if finite.size == 0:
        return math.nan, math.nan
    mean = float(np.mean(finite))
    stderr = float(np.std(finite, ddof=1) / math.sqrt(finite.size)) if finite.size > 1 else 0.0
    return mean, stderr


def aggregate(curves: Sequence[RdCurve], anchor: str = "sse", columns: Sequence[str] = REPORT_COLUMNS,
              tests: Optional[Sequence[str]] = None) -> ReportTable:
    """
    BD-rate and BD-metric of every non-anchor variant against `anchor`, per image,
    plus mean and standard error over images.

    Rows are ordered by variant then image name, so the table does not depend
    on the order the curves arrive in. An image with an anchor curve but no
    curve for a test variant gets a flagged NaN row; `tests` adds variants that
    may have no curves at all.
    """
    by_key = {(c.image, c.variant): c for c in curves}
    images = sorted({c.image for c in curves})
    tests = sorted(({c.variant for c in curves} | set(tests or ())) - {anchor})
    value_columns = _value_columns(columns)
    rows = []
    for test in tests:
        image_rows = []
        for image in images:
            base, other = by_key.get((image, anchor)), by_key.get((image, test))
            if base is None:
                continue
            row = ReportRow(image, anchor, test)
            if other is None:
                row.values = {column: math.nan for column in value_columns}
                row.flagged = True
                image_rows.append(row)
                continue
            for column in columns:
                try:
                    result = bd_rate_report(base, other, column)
                    row.values[f"bd_rate_{column}"] = result.bd_rate
                    row.flagged = row.flagged or result.flagged
                except RangeError as e:
                    logger.warning(f"BD-rate {image} {test} vs {anchor} on {column}: {e}")
                    row.values[f"bd_rate_{column}"] = math.nan
                    row.flagged = True
                try:
                    row.values[f"bd_metric_{column}"] = bd_metric(base, other, column)
                except RangeError as e:
                    logger.warning(f"BD-metric {image} {test} vs {anchor} on {column}: {e}")
                    row.values[f"bd_metric_{column}"] = math.nan
            image_rows.append(row)
        if not image_rows:
            continue
        mean_row, err_row = ReportRow("mean", anchor, test), ReportRow("stderr", anchor, test)
        for column in value_columns:
            mean_row.values[column], err_row.values[column] = _summarize([r.values[column] for r in image_rows])
        rows.extend(image_rows + [mean_row, err_row])
        logger.info(f"{test} vs {anchor} over {len(image_rows)} image(s): "
                    + ", ".join(f"{c} {mean_row.values[c]:.3f}" for c in value_columns))
    return ReportTable(tuple(columns), rows)


def report(corpus_dir: PathLike, variants: Sequence[Variant], metric: Optional[Metric] = None,
           qps: Sequence[int] = DEFAULT_QPS, c: float = DEFAULT_C, threads: int = 1) -> Tuple[ReportTable, List[RdCurve]]:
    """Sweeps every corpus image with every variant and tabulates BD figures against the SSE variant."""
    images = load_corpus(corpus_dir)
    if not images:
        raise ContractError(f"No PGM/PPM images in {corpus_dir}")
    variants = list(variants)
    anchor = Variant(RdoMode.SSE)
    if anchor not in variants:
        variants.insert(0, anchor)
    metric = metric or TvScore()
    curves = sweep_corpus(images, variants, metric, qps, c, threads)
    return aggregate(curves, anchor.label, tests=[v.label for v in variants]), curves


@dataclass(frozen=True)
class OverheadReport:
    frames: int
    gradient_seconds: float
    sse_seconds: float
    lnrm_seconds: float

    @property
    def overhead_percent(self) -> float:
        if self.sse_seconds <= 0:
            return math.nan
        return 100.0 * (self.lnrm_seconds + self.gradient_seconds - self.sse_seconds) / self.sse_seconds

    def to_dict(self) -> dict:
        return {
            "frames": self.frames,
            "gradient_seconds": self.gradient_seconds,
            "sse_seconds": self.sse_seconds,
            "lnrm_seconds": self.lnrm_seconds,
            "overhead_percent": self.overhead_percent,
        }


def measure_overhead(frames: Sequence[Frame], qp: int = 28, alpha: float = 1.0, metric: Optional[Metric] = None,
                     c: float = DEFAULT_C) -> OverheadReport:
    """Wall time of SSE-RDO against gradient computation plus LNRM-RDO on the same frames."""
    metric = metric or TvScore()
    grad_t = sse_t = lnrm_t = 0.0
    for frame in frames:
        start = time.perf_counter()
        gradient = metric.gradient(frame)
        grad_t += time.perf_counter() - start

        start = time.perf_counter()
        encode(frame, RdoConfig(qp=qp, mode=RdoMode.SSE, c=c))
        sse_t += time.perf_counter() - start

        start = time.perf_counter()
        encode(frame, RdoConfig(qp=qp, mode=RdoMode.LNRM_REG, c=c, alpha=alpha), gradient=gradient)
        lnrm_t += time.perf_counter() - start
    result = OverheadReport(len(frames), grad_t, sse_t, lnrm_t)
    logger.info(f"Encoder overhead over {len(frames)} frame(s): {result.overhead_percent:.1f}%")
    return result
