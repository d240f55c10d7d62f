import logging
from typing import Optional

import numpy as np

from lnrm_codec.lib.data.imageio import PathLike, read_gradient
from lnrm_codec.lib.errors import ContractError, UnsupportedMetricError
from lnrm_codec.lib.models import Frame, GradientField
from lnrm_codec.metrics.base import Metric

logger = logging.getLogger("lnrm_codec")


class ExternalMetric(Metric):
    """
    Metric backed by a precomputed gradient file (e.g. exported from an autodiff framework).

    Only the gradient and base score at the source frame are known, so score()
    is defined for that frame alone.
    """
    name = "external"
    evaluates_any_frame = False

    def __init__(self, field: GradientField, source: Optional[Frame] = None):
        self.field = field
        self.source = source
        if source is not None:
            self._check_dims(source)

    def _check_dims(self, frame_shape):
        shape = tuple(frame_shape.planes.shape) if isinstance(frame_shape, Frame) else tuple(frame_shape)
        if tuple(self.field.values.shape) != shape:
            raise ContractError(
                f"External gradient is {self.field.plane_count}x{self.field.height}x{self.field.width} "
                f"(planes x height x width) but the frame is {'x'.join(map(str, shape))}"
            )

    def _is_source(self, planes: np.ndarray) -> bool:
        return self.source is not None and np.array_equal(planes, self.source.planes)

    def score(self, planes: np.ndarray) -> float:
        self._check_dims(planes.shape)
        if not self._is_source(planes):
            raise UnsupportedMetricError("An external metric can only be evaluated at its source frame")
        return self.field.base_score

    def score_gradient(self, planes: np.ndarray) -> np.ndarray:
        self._check_dims(planes.shape)
        return self.field.values.astype(np.float64)

    def gradient(self, frame: Frame) -> GradientField:
        self._check_dims(frame)
        return self.field


def external_metric(path: PathLike, source: Optional[Frame] = None) -> ExternalMetric:
    """Builds a metric from an LNRMG1 gradient file; `source` is the frame it was computed at."""
    field = read_gradient(path)
    logger.info(f"Loaded external gradient {path}: {field.width}x{field.height}, "
                f"{field.plane_count} plane(s), base score {field.base_score:.6g}")
    return ExternalMetric(field, source)
