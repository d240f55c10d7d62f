"""No-reference metrics and their gradients."""

from lnrm_codec.metrics.base import Metric, FiniteDifferenceMetric, fd_gradient, fd_gradient_array
from lnrm_codec.metrics.tv_score import TvScore
from lnrm_codec.metrics.external import ExternalMetric, external_metric

__all__ = [
    "Metric",
    "FiniteDifferenceMetric",
    "fd_gradient",
    "fd_gradient_array",
    "TvScore",
    "ExternalMetric",
    "external_metric",
]
