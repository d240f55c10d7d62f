"""High-level orchestration pipelines."""

from lnrm_codec.evaluation.pipeline import run_sweep_pipeline, run_report_pipeline

__all__ = [
    "run_sweep_pipeline",
    "run_report_pipeline",
]
