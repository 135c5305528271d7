"""Assembly of the 939-feature vector for one (image, region) pair.

9 shape features from the mask alone, then 93 intensity/texture features
(18 first-order + 24 GLCM + 16 GLRLM + 16 GLSZM + 5 NGTDM + 14 GLDM) for
the original image and each of the nine filtered variants. Column names
follow `<FILTER>_<CLASS>_<NAME>` with `shape2D_<NAME>` for the mask-only
block.
"""

from __future__ import annotations

import numpy as np

from ..errors import EmptyRegionError, NumericError
from ..filters import FILTER_KINDS, apply_filter
from ..types import HUImage, RegionMask
from .firstorder import FIRSTORDER_NAMES, first_order_features
from .quantize import DEFAULT_BIN_COUNT, discretize
from .shape2d import SHAPE2D_NAMES, shape2d_features
from .texture import (
    GLCM_NAMES,
    GLDM_NAMES,
    GLRLM_NAMES,
    GLSZM_NAMES,
    NGTDM_NAMES,
    glcm_features,
    gldm_features,
    glrlm_features,
    glszm_features,
    ngtdm_features,
)

FEATURE_CLASS_NAMES = {
    "firstorder": FIRSTORDER_NAMES,
    "glcm": GLCM_NAMES,
    "glrlm": GLRLM_NAMES,
    "glszm": GLSZM_NAMES,
    "ngtdm": NGTDM_NAMES,
    "gldm": GLDM_NAMES,
}

FEATURES_PER_IMAGE = sum(len(v) for v in FEATURE_CLASS_NAMES.values())  # 93
TOTAL_FEATURES = len(SHAPE2D_NAMES) + FEATURES_PER_IMAGE * len(FILTER_KINDS)  # 939


def canonical_feature_names() -> list[str]:
    names = [f"shape2D_{n}" for n in SHAPE2D_NAMES]
    for kind in FILTER_KINDS:
        for cls, cls_names in FEATURE_CLASS_NAMES.items():
            names += [f"{kind}_{cls}_{n}" for n in cls_names]
    return names


def extract_all(
    img: HUImage,
    mask: RegionMask,
    bins: int = DEFAULT_BIN_COUNT,
    bin_policy: str = "count",
) -> dict[str, float]:
    """All 939 features for one region; every value is finite."""
    if img.data.shape != mask.data.shape:
        raise EmptyRegionError("image and mask dimensions differ")
    if not mask.data.any():
        raise EmptyRegionError("cannot extract features from an empty mask")
    voxel_mm = img.voxel_size_um / 1000.0
    out: dict[str, float] = {}
    for name, value in shape2d_features(mask.data).items():
        out[f"shape2D_{name}"] = value
    for kind in FILTER_KINDS:
        derived = apply_filter(img, kind)
        q = discretize(derived, mask.data, bins=bins, policy=bin_policy)
        blocks = {
            "firstorder": first_order_features(
                derived, mask.data, q, voxel_area_mm2=voxel_mm**2
            ),
            "glcm": glcm_features(q),
            "glrlm": glrlm_features(q),
            "glszm": glszm_features(q),
            "ngtdm": ngtdm_features(q),
            "gldm": gldm_features(q),
        }
        for cls, feats in blocks.items():
            for name, value in feats.items():
                out[f"{kind}_{cls}_{name}"] = value
    bad = [k for k, v in out.items() if not np.isfinite(v)]
    if bad:
        raise NumericError(f"non-finite feature values: {bad[:5]}")
    if len(out) != TOTAL_FEATURES:
        raise NumericError(f"expected {TOTAL_FEATURES} features, got {len(out)}")
    return out
