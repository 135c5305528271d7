from .extract import (
    FEATURE_CLASS_NAMES,
    FEATURES_PER_IMAGE,
    TOTAL_FEATURES,
    canonical_feature_names,
    extract_all,
)
from .firstorder import FIRSTORDER_NAMES, first_order_features
from .quantize import DEFAULT_BIN_COUNT, QuantizedROI, discretize, histogram_probabilities
from .shape2d import SHAPE2D_NAMES, marching_squares_area_perimeter, shape2d_features
from .texture import (
    DIRECTIONS_2D,
    GLCM_NAMES,
    GLDM_NAMES,
    GLRLM_NAMES,
    GLSZM_NAMES,
    NGTDM_NAMES,
    glcm_features,
    glcm_matrix,
    gldm_features,
    gldm_matrix,
    glrlm_features,
    glrlm_matrix,
    glszm_features,
    glszm_matrix,
    ngtdm_features,
    ngtdm_table,
)

__all__ = [
    "FEATURE_CLASS_NAMES",
    "FEATURES_PER_IMAGE",
    "TOTAL_FEATURES",
    "canonical_feature_names",
    "extract_all",
    "FIRSTORDER_NAMES",
    "first_order_features",
    "DEFAULT_BIN_COUNT",
    "QuantizedROI",
    "discretize",
    "histogram_probabilities",
    "SHAPE2D_NAMES",
    "marching_squares_area_perimeter",
    "shape2d_features",
    "DIRECTIONS_2D",
    "GLCM_NAMES",
    "GLDM_NAMES",
    "GLRLM_NAMES",
    "GLSZM_NAMES",
    "NGTDM_NAMES",
    "glcm_features",
    "glcm_matrix",
    "gldm_features",
    "gldm_matrix",
    "glrlm_features",
    "glrlm_matrix",
    "glszm_features",
    "glszm_matrix",
    "ngtdm_features",
    "ngtdm_table",
]
