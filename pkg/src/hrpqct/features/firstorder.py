"""First-order intensity statistics over a masked ROI.

Conventions (documented for reproducibility): percentiles use linear
interpolation between order statistics; Variance, Skewness, and Kurtosis
are population moments; Kurtosis is not excess-corrected; a constant ROI
takes Skewness = Kurtosis = 0. Entropy and Uniformity are computed on the
discretized histogram with log base 2.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyRegionError
from .quantize import QuantizedROI, histogram_probabilities

FIRSTORDER_NAMES = (
    "Energy",
    "TotalEnergy",
    "Entropy",
    "Minimum",
    "10thPercentile",
    "90thPercentile",
    "Maximum",
    "Mean",
    "Median",
    "InterquartileRange",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Skewness",
    "Kurtosis",
    "Variance",
    "Uniformity",
)


def first_order_features(
    values: np.ndarray,
    mask: np.ndarray,
    quantized: QuantizedROI,
    voxel_area_mm2: float = 1.0,
) -> dict[str, float]:
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyRegionError("first-order features require a nonempty ROI")
    x = np.asarray(values, dtype=np.float64)[mask]
    n = x.size
    mean = float(x.mean())
    centered = x - mean
    var = float(np.mean(centered**2))
    p10, p25, p75, p90 = np.percentile(x, [10, 25, 75, 90])
    robust = x[(x >= p10) & (x <= p90)]
    if var > 0.0:
        skew = float(np.mean(centered**3) / var**1.5)
        kurt = float(np.mean(centered**4) / var**2)
    else:
        skew = kurt = 0.0
    probs = histogram_probabilities(quantized)
    nonzero = probs[probs > 0]
    entropy = float(-(nonzero * np.log2(nonzero)).sum())
    energy = float(np.sum(x**2))
    return {
        "Energy": energy,
        "TotalEnergy": energy * voxel_area_mm2,
        "Entropy": entropy,
        "Minimum": float(x.min()),
        "10thPercentile": float(p10),
        "90thPercentile": float(p90),
        "Maximum": float(x.max()),
        "Mean": mean,
        "Median": float(np.median(x)),
        "InterquartileRange": float(p75 - p25),
        "Range": float(x.max() - x.min()),
        "MeanAbsoluteDeviation": float(np.mean(np.abs(centered))),
        "RobustMeanAbsoluteDeviation": (
            float(np.mean(np.abs(robust - robust.mean()))) if robust.size else 0.0
        ),
        "RootMeanSquared": float(np.sqrt(np.mean(x**2))),
        "Skewness": skew,
        "Kurtosis": kurt,
        "Variance": var,
        "Uniformity": float(np.sum(nonzero**2)),
    }
