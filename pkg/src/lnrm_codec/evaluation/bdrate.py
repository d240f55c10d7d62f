"""
Bjontegaard deltas between two RD curves.

bd_rate fits log10(rate) as a cubic in the distortion column and averages the
log-rate gap over the common distortion interval; bd_metric fits the
distortion as a cubic in log10(rate) and averages the distortion gap over the
common log-rate interval.
"""
import logging
import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from lnrm_codec.evaluation.curves import RdCurve
from lnrm_codec.lib.errors import RangeError

logger = logging.getLogger("lnrm_codec")

MIN_POINTS = 4
FIT_DEGREE = 3


@dataclass(frozen=True)
class BdRateReport:
    anchor: str
    test: str
    column: str
    bd_rate: float
    interval: Tuple[float, float]
    anchor_points: int
    test_points: int
    restricted: bool = False
    fit_warning: bool = False

    @property
    def flagged(self) -> bool:
        return self.restricted or self.fit_warning


def _usable(curve: RdCurve, column: str) -> Tuple[np.ndarray, np.ndarray]:
    rates = curve.rates
    values = curve.column(column)
    keep = np.isfinite(values) & (rates > 0)
    return rates[keep], values[keep]


def _longest_monotone_run(values: np.ndarray) -> slice:
    """Longest run of strictly increasing or strictly decreasing values (first one on ties)."""
    if values.size < 2:
        return slice(0, values.size)
    best = (1, 0)
    for sign in (1, -1):
        start = 0
        for i in range(1, values.size):
            if sign * (values[i] - values[i - 1]) <= 0:
                start = i
            length = i - start + 1
            if length > best[0]:
                best = (length, start)
    return slice(best[1], best[1] + best[0])


def _monotone_points(curve: RdCurve, column: str):
    rates, values = _usable(curve, column)
    run = _longest_monotone_run(values)
    restricted = (run.stop - run.start) < values.size
    rates, values = rates[run], values[run]
    if values.size < MIN_POINTS:
        raise RangeError(
            f"{curve.image}/{curve.variant}: {values.size} monotone '{column}' point(s), need {MIN_POINTS}"
        )
    if restricted:
        logger.warning(f"{curve.image}/{curve.variant}: '{column}' is not monotone in rate; "
                       f"fitting the longest monotone segment ({values.size} points)")
    return rates, values, restricted


def _fit(x: np.ndarray, y: np.ndarray):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        coeffs = np.polyfit(x, y, FIT_DEGREE)
    return coeffs, bool(caught)


def _mean_over(coeffs: np.ndarray, lo: float, hi: float) -> float:
    integral = np.polyint(coeffs)
    return (np.polyval(integral, hi) - np.polyval(integral, lo)) / (hi - lo)


def _overlap(a: np.ndarray, b: np.ndarray) -> Tuple[float, float]:
    lo = max(float(a.min()), float(b.min()))
    hi = min(float(a.max()), float(b.max()))
    if not hi > lo:
        raise RangeError(f"RD curves do not overlap (common interval [{lo:.6g}, {hi:.6g}])")
    return lo, hi


def bd_rate_report(anchor: RdCurve, test: RdCurve, column: str = "psnr_db") -> BdRateReport:
    """
    Bjontegaard delta-rate of `test` against `anchor` in percent; negative means fewer bits.

    The distortion axis is used as-is, whatever its orientation. Non-finite
    values (infinite PSNR, unsupported metrics) are dropped, and a curve that is
    not monotone in the column is cut to its longest monotone segment.

    Raises:
        RangeError: fewer than 4 usable points or no overlapping distortion range.
    """
    rate_a, dist_a, cut_a = _monotone_points(anchor, column)
    rate_t, dist_t, cut_t = _monotone_points(test, column)
    lo, hi = _overlap(dist_a, dist_t)

    fit_a, warn_a = _fit(dist_a, np.log10(rate_a))
    fit_t, warn_t = _fit(dist_t, np.log10(rate_t))
    diff = _mean_over(fit_t, lo, hi) - _mean_over(fit_a, lo, hi)
    value = 100.0 * (math.pow(10.0, diff) - 1.0)
    return BdRateReport(
        anchor=anchor.variant,
        test=test.variant,
        column=column,
        bd_rate=value,
        interval=(lo, hi),
        anchor_points=dist_a.size,
        test_points=dist_t.size,
        restricted=cut_a or cut_t,
        fit_warning=warn_a or warn_t,
    )


def bd_rate(anchor: RdCurve, test: RdCurve, column: str = "psnr_db") -> float:
    return bd_rate_report(anchor, test, column).bd_rate


def bd_metric(anchor: RdCurve, test: RdCurve, column: str = "psnr_db") -> float:
    """
    Bjontegaard delta-distortion: mean of test minus anchor over the common log-rate range.

    Needs no monotonicity, so it stays meaningful for metric curves that
    plateau. Its sign follows the column (lower nrm_score is better).
    """
    rate_a, dist_a = _usable(anchor, column)
    rate_t, dist_t = _usable(test, column)
    for curve, count in ((anchor, dist_a.size), (test, dist_t.size)):
        if count < MIN_POINTS:
            raise RangeError(f"{curve.image}/{curve.variant}: {count} usable '{column}' point(s), need {MIN_POINTS}")
    log_a, log_t = np.log10(rate_a), np.log10(rate_t)
    lo, hi = _overlap(log_a, log_t)
    fit_a, _ = _fit(log_a, dist_a)
    fit_t, _ = _fit(log_t, dist_t)
    return float(_mean_over(fit_t, lo, hi) - _mean_over(fit_a, lo, hi))
