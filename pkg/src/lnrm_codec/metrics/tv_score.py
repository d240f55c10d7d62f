import numpy as np

from lnrm_codec.metrics.base import Metric

DEFAULT_EPSILON = 1.0


def forward_differences(plane: np.ndarray):
    """Horizontal and vertical forward differences with replicate boundary (zero at the last column/row)."""
    dh = np.zeros_like(plane)
    dv = np.zeros_like(plane)
    dh[:, :-1] = plane[:, 1:] - plane[:, :-1]
    dv[:-1, :] = plane[1:, :] - plane[:-1, :]
    return dh, dv


class TvScore(Metric):
    """
    Charbonnier-smoothed total variation, averaged per plane and summed over planes.

        b(x) = sum_planes (1/n_p) sum_p sqrt(dh(p)^2 + dv(p)^2 + eps^2) - eps

    Noise and banding raise the score; a constant image scores 0. The smoothing
    keeps b continuously differentiable, so its Taylor expansion is valid.
    """
    name = "tv"

    def __init__(self, epsilon: float = DEFAULT_EPSILON, luma_only: bool = False):
        if not epsilon > 0:
            raise ValueError(f"TvScore epsilon must be positive, got {epsilon}")
        self.epsilon = float(epsilon)
        self.luma_only = luma_only

    def _planes(self, planes: np.ndarray):
        count = 1 if self.luma_only else planes.shape[0]
        return range(count)

    def score(self, planes: np.ndarray) -> float:
        planes = np.asarray(planes, dtype=np.float64)
        total = 0.0
        eps2 = self.epsilon * self.epsilon
        for p in self._planes(planes):
            dh, dv = forward_differences(planes[p])
            magnitude = np.sqrt(dh * dh + dv * dv + eps2)
            total += float(np.mean(magnitude)) - self.epsilon
        return total

    def score_gradient(self, planes: np.ndarray) -> np.ndarray:
        planes = np.asarray(planes, dtype=np.float64)
        grad = np.zeros_like(planes)
        eps2 = self.epsilon * self.epsilon
        for p in self._planes(planes):
            plane = planes[p]
            dh, dv = forward_differences(plane)
            magnitude = np.sqrt(dh * dh + dv * dv + eps2)
            ph = dh / magnitude
            pv = dv / magnitude
            g = -ph - pv
            # each sample is also the "+1" end of its left and upper neighbours' differences
            g[:, 1:] += ph[:, :-1]
            g[1:, :] += pv[:-1, :]
            grad[p] = g / plane.size
        return grad

    def __repr__(self):
        return f"TvScore(epsilon={self.epsilon}, luma_only={self.luma_only})"
