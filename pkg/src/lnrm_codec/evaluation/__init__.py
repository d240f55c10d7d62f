"""RD sweeps, Bjontegaard deltas and corpus reports."""

from lnrm_codec.evaluation.curves import RdPoint, RdCurve, rd_sweep, psnr, curves_to_csv, write_curves_csv, read_curves_csv
from lnrm_codec.evaluation.bdrate import BdRateReport, bd_rate, bd_rate_report, bd_metric
from lnrm_codec.evaluation.corpus import CorpusSpec, generate_corpus, write_corpus, load_corpus
from lnrm_codec.evaluation.report import Variant, parse_variants, aggregate, report, measure_overhead

__all__ = [
    "RdPoint",
    "RdCurve",
    "rd_sweep",
    "psnr",
    "curves_to_csv",
    "write_curves_csv",
    "read_curves_csv",
    "BdRateReport",
    "bd_rate",
    "bd_rate_report",
    "bd_metric",
    "CorpusSpec",
    "generate_corpus",
    "write_corpus",
    "load_corpus",
    "Variant",
    "parse_variants",
    "aggregate",
    "report",
    "measure_overhead",
]
