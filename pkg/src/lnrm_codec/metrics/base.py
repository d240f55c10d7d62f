from abc import ABC, abstractmethod
import logging

import numpy as np

from lnrm_codec.lib.errors import ContractError
from lnrm_codec.lib.models import Frame, GradientField

logger = logging.getLogger("lnrm_codec")


class Metric(ABC):
    """
    No-reference quality metric b(.); lower values mean higher quality.

    Subclasses work on float64 sample arrays of shape (planes, height, width) so
    that perturbed, non-integer images can be scored (finite differences,
    linearization checks, direct RDO).
    """
    name = "metric"
    # False when score() is only defined at the frame the metric was built for
    evaluates_any_frame = True

    @abstractmethod
    def score(self, planes: np.ndarray) -> float:
        """b(x) for a float sample array."""
        pass

    @abstractmethod
    def score_gradient(self, planes: np.ndarray) -> np.ndarray:
        """Analytic gradient of score() with the same shape as `planes`."""
        pass

    def evaluate(self, frame: Frame) -> float:
        return float(self.score(frame.as_float()))

    def gradient(self, frame: Frame) -> GradientField:
        """Gradient field at `frame`, with base_score = evaluate(frame)."""
        planes = frame.as_float()
        values = self.score_gradient(planes)
        if values.shape != planes.shape:
            raise ContractError(f"{self.name} gradient has shape {values.shape}, frame has {planes.shape}")
        return GradientField(values, float(self.score(planes)))


def fd_gradient_array(metric: Metric, planes: np.ndarray, h: float = 0.1) -> np.ndarray:
    """Central differences (b(x + h e_k) - b(x - h e_k)) / 2h for every sample."""
    if not h > 0:
        raise ContractError(f"Finite-difference step must be positive, got {h}")
    work = np.array(planes, dtype=np.float64)
    grad = np.zeros_like(work)
    flat = work.reshape(-1)
    out = grad.reshape(-1)
    for k in range(flat.size):
        original = flat[k]
        flat[k] = original + h
        forward = metric.score(work)
        flat[k] = original - h
        backward = metric.score(work)
        flat[k] = original
        out[k] = (forward - backward) / (2.0 * h)
    return grad


def fd_gradient(metric: Metric, frame: Frame, h: float = 0.1) -> GradientField:
    """
    Finite-difference gradient of `metric` at `frame`.

    Used as a cross-check of analytic gradients and as a fallback for metrics
    without one. Costs two metric evaluations per sample.
    """
    planes = frame.as_float()
    logger.debug(f"Finite-difference gradient of {metric.name} over {planes.size} samples (h={h})")
    return GradientField(fd_gradient_array(metric, planes, h), float(metric.score(planes)))


class FiniteDifferenceMetric(Metric):
    """Wraps a score-only metric, supplying its gradient by central differences."""

    def __init__(self, inner: Metric, h: float = 0.1):
        self.inner = inner
        self.h = h
        self.name = f"fd:{inner.name}"

    def score(self, planes: np.ndarray) -> float:
        return self.inner.score(planes)

    def score_gradient(self, planes: np.ndarray) -> np.ndarray:
        return fd_gradient_array(self.inner, planes, self.h)
