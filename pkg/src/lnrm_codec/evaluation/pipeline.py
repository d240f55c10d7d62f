import logging
import os
from pathlib import Path
from typing import List, Optional, Sequence

from lnrm_codec.evaluation.corpus import CorpusSpec, write_corpus
from lnrm_codec.evaluation.curves import DEFAULT_QPS, RdCurve, rd_sweep, write_curves_csv
from lnrm_codec.evaluation.report import ReportTable, Variant, parse_variants, report
from lnrm_codec.codec.rdo import DEFAULT_C
from lnrm_codec.lib.data.imageio import load_frame
from lnrm_codec.lib.utils import get_output_dir
from lnrm_codec.metrics.base import Metric
from lnrm_codec.metrics.tv_score import TvScore

logger = logging.getLogger("lnrm_codec")

DEFAULT_VARIANTS = "sse,lnrm:2,lnrm:1,lnrm:0.5"


def run_sweep_pipeline(image_path: str, variants: Sequence[Variant], qps: Sequence[int] = DEFAULT_QPS,
                       metric: Optional[Metric] = None, c: float = DEFAULT_C, threads: int = 1,
                       out_path: Optional[str] = None) -> List[RdCurve]:
    """
    Sweeps one image with every variant and writes the RD CSV.

    The image name in the CSV is the file stem.
    """
    frame = load_frame(image_path)
    name = Path(image_path).stem
    metric = metric or TvScore()
    curves = [rd_sweep(frame, v.config(qps[0], c), qps, metric=metric, image=name, variant=v.label, threads=threads)
              for v in variants]
    if out_path:
        write_curves_csv(curves, out_path)
        logger.info(f"RD curves written to {out_path}")
    return curves


def run_report_pipeline(corpus_dir: str, variants: Optional[Sequence[Variant]] = None, qps: Sequence[int] = DEFAULT_QPS,
                        metric: Optional[Metric] = None, c: float = DEFAULT_C, threads: int = 1,
                        output_dir: Optional[str] = None) -> ReportTable:
    """
    Full corpus experiment: RD curves of every image and variant plus the BD table.

    Writes curves.csv and report.csv under `output_dir` (default: results/).
    If the corpus directory does not exist, a default synthetic corpus is generated there first.
    """
    if not os.path.isdir(corpus_dir):
        logger.info(f"Corpus directory {corpus_dir} not found. Generating the default synthetic corpus...")
        write_corpus(corpus_dir, CorpusSpec())
    variants = list(variants) if variants else parse_variants(DEFAULT_VARIANTS)
    table, curves = report(corpus_dir, variants, metric=metric, qps=qps, c=c, threads=threads)

    output_dir = output_dir or get_output_dir("results")
    os.makedirs(output_dir, exist_ok=True)
    write_curves_csv(curves, os.path.join(output_dir, "curves.csv"))
    with open(os.path.join(output_dir, "report.csv"), "w", newline="") as f:
        f.write(table.to_csv())
    logger.info(f"Report written to {output_dir}")
    return table
