"""Core raster types shared across the pipeline.

All types are immutable after construction (arrays are marked read-only),
so instances can be shared freely between parallel workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, EmptyRegionError

# Class-id scheme, fixed by this repo. Ids 6-8 appear only after
# soft-tissue subdivision.
BG, TC, TT, FC, FT, ST, SK, MT, AT = range(9)

CLASS_NAMES = {
    BG: "BG",
    TC: "TC",
    TT: "TT",
    FC: "FC",
    FT: "FT",
    ST: "ST",
    SK: "SK",
    MT: "MT",
    AT: "AT",
}
CLASS_IDS = {name: cid for cid, name in CLASS_NAMES.items()}

SOFT_TISSUE_CLASSES = (ST, SK, MT, AT)

# (cortical, trabecular) class ids per bone.
BONE_CLASSES = {"tibia": (TC, TT), "fibula": (FC, FT)}


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class HUImage:
    """2D grid of signed Hounsfield-unit intensities with physical voxel size."""

    data: np.ndarray  # int16, shape (height, width), row-major
    voxel_size_um: float

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.size == 0:
            raise DataError("HUImage requires a nonempty 2D array")
        if self.voxel_size_um <= 0:
            raise DataError("voxel_size_um must be positive")
        object.__setattr__(self, "data", _freeze(self.data.astype(np.int16, copy=False)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class NormImage:
    """Real-valued image with every pixel in [0, 1]."""

    data: np.ndarray  # float64, shape (height, width)
    voxel_size_um: float

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.size == 0:
            raise DataError("NormImage requires a nonempty 2D array")
        if self.voxel_size_um <= 0:
            raise DataError("voxel_size_um must be positive")
        data = self.data.astype(np.float64, copy=False)
        if np.any(data < 0.0) or np.any(data > 1.0):
            raise DataError("NormImage values must lie in [0, 1]")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class LabelMap:
    """Per-pixel anatomical class map over the 9-label scheme."""

    data: np.ndarray  # uint8, shape (height, width)
    voxel_size_um: float

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.size == 0:
            raise DataError("LabelMap requires a nonempty 2D array")
        if self.voxel_size_um <= 0:
            raise DataError("voxel_size_um must be positive")
        data = self.data.astype(np.uint8, copy=False)
        if data.max(initial=0) > AT:
            raise DataError(f"LabelMap contains ids outside 0..{AT}")
        object.__setattr__(self, "data", _freeze(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    def labels_present(self) -> list[int]:
        return sorted(int(v) for v in np.unique(self.data))


@dataclass(frozen=True)
class RegionMask:
    """Boolean mask extracted from a LabelMap for one class id."""

    data: np.ndarray  # bool, shape (height, width)
    region_id: int = field(default=-1)

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.size == 0:
            raise DataError("RegionMask requires a nonempty 2D array")
        object.__setattr__(self, "data", _freeze(self.data.astype(bool, copy=False)))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def pixel_count(self) -> int:
        return int(self.data.sum())


def extract_region_mask(label_map: LabelMap, region: int) -> RegionMask:
    """Boolean mask of one class. Raises EmptyRegionError for empty regions."""
    if not 1 <= region <= AT:
        raise DataError(f"region id must be in 1..{AT}, got {region}")
    mask = label_map.data == region
    if not mask.any():
        raise EmptyRegionError(f"empty region: class {CLASS_NAMES[region]} ({region})")
    return RegionMask(data=mask, region_id=region)
