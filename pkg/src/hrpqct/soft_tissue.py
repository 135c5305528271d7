"""Subdivision of the soft-tissue compartment into skin, myotendinous, and
adipose tissue, plus radial soft-tissue bands around the tibia.

Protocol: peel a 2 mm skin band off the outer soft-tissue boundary, plant
HU-threshold seeds in the remainder, drop seeds under 30 pixels, grow both
seed sets by one 8-neighbor ring for 20 iterations, then resolve contested
and unassigned pixels with a -50 HU cut (above -50 is myotendinous, -50
and below is adipose).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import DataError
from .types import AT, MT, SK, ST, TC, HUImage, LabelMap, RegionMask, SOFT_TISSUE_CLASSES

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass(frozen=True)
class SoftTissueParams:
    skin_band_mm: float = 2.0
    myo_seed_range: tuple[float, float] = (100.0, 600.0)
    adipose_seed_range: tuple[float, float] = (-600.0, -200.0)
    min_seed_px: int = 30
    dilation_iters: int = 20
    resolve_threshold: float = -50.0

    def __post_init__(self):
        if self.myo_seed_range[0] <= self.adipose_seed_range[1]:
            raise DataError("seed HU ranges must not overlap")
        if self.min_seed_px < 1:
            raise DataError("min_seed_px must be >= 1")
        if self.dilation_iters < 0:
            raise DataError("dilation_iters must be >= 0")


def skin_band_radius_px(skin_band_mm: float, voxel_size_um: float) -> int:
    """Band width in pixels, rounded up so the band is never thinner than 2 mm."""
    return int(math.ceil(skin_band_mm * 1000.0 / voxel_size_um))


def peel_skin_band(
    soft: RegionMask, voxel_size_um: float, skin_band_mm: float = 2.0
) -> tuple[RegionMask, RegionMask]:
    """Split a soft-tissue mask into its outer band (skin) and the interior.

    The band is everything within r pixels of the outer boundary, with
    r = ceil(band_mm * 1000 / voxel_um), measured by Euclidean distance
    transform (equivalent to erosion by a Euclidean disk of radius r).
    """
    if not soft.data.any():
        raise DataError("soft-tissue mask is empty")
    r = skin_band_radius_px(skin_band_mm, voxel_size_um)
    dist = ndimage.distance_transform_edt(soft.data)
    interior = soft.data & (dist > r)
    if not interior.any():
        raise DataError("soft tissue too thin: interior empty after skin-band erosion")
    skin = soft.data & ~interior
    return (
        RegionMask(data=skin, region_id=SK),
        RegionMask(data=interior, region_id=ST),
    )


def _drop_small_components(mask: np.ndarray, min_px: int) -> np.ndarray:
    lab, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        return mask
    sizes = np.bincount(lab.ravel())
    keep = sizes >= min_px
    keep[0] = False
    return keep[lab]


def plant_seeds(
    img: HUImage, interior: RegionMask, params: SoftTissueParams = SoftTissueParams()
) -> tuple[RegionMask, RegionMask]:
    """HU-threshold seeds inside the interior mask; components smaller than
    min_seed_px are removed (a component of exactly min_seed_px is kept)."""
    if img.data.shape != interior.data.shape:
        raise DataError("image and interior mask dimensions differ")
    hu = img.data
    lo, hi = params.myo_seed_range
    myo = interior.data & (hu >= lo) & (hu <= hi)
    lo, hi = params.adipose_seed_range
    adi = interior.data & (hu >= lo) & (hu <= hi)
    myo = _drop_small_components(myo, params.min_seed_px)
    adi = _drop_small_components(adi, params.min_seed_px)
    return RegionMask(data=myo, region_id=MT), RegionMask(data=adi, region_id=AT)


@dataclass(frozen=True)
class GrowthResult:
    myo: np.ndarray
    adipose: np.ndarray
    contested: np.ndarray
    unassigned: np.ndarray


def grow_regions(
    myo_seeds: RegionMask,
    adipose_seeds: RegionMask,
    interior: RegionMask,
    iters: int = 20,
) -> GrowthResult:
    """Grow both seed sets one 8-neighbor ring per iteration inside the
    interior. Both fronts advance against the same snapshot of free pixels;
    a pixel reached by both in the same iteration is contested and frozen
    (it joins neither set and blocks further growth through it)."""
    if not (myo_seeds.data <= interior.data).all() or not (
        adipose_seeds.data <= interior.data
    ).all():
        raise DataError("seeds must lie inside the interior mask")
    myo = myo_seeds.data.copy()
    adi = adipose_seeds.data.copy()
    contested = np.zeros_like(myo)
    free = interior.data & ~myo & ~adi
    for _ in range(iters):
        m_front = ndimage.binary_dilation(myo, structure=_EIGHT) & free
        a_front = ndimage.binary_dilation(adi, structure=_EIGHT) & free
        both = m_front & a_front
        myo |= m_front & ~both
        adi |= a_front & ~both
        contested |= both
        grown = m_front | a_front
        if not grown.any():
            break
        free &= ~grown
    return GrowthResult(myo=myo, adipose=adi, contested=contested, unassigned=free)


def resolve_unassigned(
    img: HUImage, pixels: np.ndarray, threshold: float = -50.0
) -> tuple[np.ndarray, np.ndarray]:
    """HU above the threshold goes to myotendinous, at or below to adipose."""
    myo_add = pixels & (img.data > threshold)
    adi_add = pixels & ~myo_add
    return myo_add, adi_add


@dataclass(frozen=True)
class SoftTissueReport:
    areas_mm2: dict[str, float]
    seed_px: dict[str, int]
    contested_px: int
    unassigned_px: int


def segment_soft_tissue(
    img: HUImage, label_map: LabelMap, params: SoftTissueParams = SoftTissueParams()
) -> tuple[LabelMap, SoftTissueReport]:
    """Replace the ST class with the SK/MT/AT partition; other classes untouched."""
    if img.data.shape != label_map.data.shape:
        raise DataError("image and label map dimensions differ")
    soft_mask = label_map.data == ST
    if not soft_mask.any():
        raise DataError("label map has no soft-tissue (ST) region")
    soft = RegionMask(data=soft_mask, region_id=ST)
    skin, interior = peel_skin_band(soft, label_map.voxel_size_um, params.skin_band_mm)
    myo_seeds, adi_seeds = plant_seeds(img, interior, params)
    growth = grow_regions(myo_seeds, adi_seeds, interior, iters=params.dilation_iters)
    leftovers = growth.unassigned | growth.contested
    myo_add, adi_add = resolve_unassigned(img, leftovers, params.resolve_threshold)
    myo = growth.myo | myo_add
    adi = growth.adipose | adi_add

    out = label_map.data.copy()
    out[skin.data] = SK
    out[myo] = MT
    out[adi] = AT
    mm2 = (label_map.voxel_size_um / 1000.0) ** 2
    report = SoftTissueReport(
        areas_mm2={
            "SK": float(skin.data.sum() * mm2),
            "MT": float(myo.sum() * mm2),
            "AT": float(adi.sum() * mm2),
        },
        seed_px={"MT": int(myo_seeds.data.sum()), "AT": int(adi_seeds.data.sum())},
        contested_px=int(growth.contested.sum()),
        unassigned_px=int(growth.unassigned.sum()),
    )
    return LabelMap(data=out, voxel_size_um=label_map.voxel_size_um), report


def radial_band_mask(label_map: LabelMap, distance_mm: float) -> RegionMask:
    """Soft-tissue pixels within distance_mm of the tibia's outer cortical
    boundary; math.inf selects the whole soft-tissue compartment."""
    soft = np.isin(label_map.data, SOFT_TISSUE_CLASSES)
    if math.isinf(distance_mm):
        if not soft.any():
            raise DataError("label map has no soft-tissue pixels")
        return RegionMask(data=soft, region_id=ST)
    cortical = label_map.data == TC
    if not cortical.any():
        raise DataError("tibia cortical class missing")
    filled = ndimage.binary_fill_holes(cortical)
    outside = ~filled
    boundary = cortical & ndimage.binary_dilation(outside, structure=_EIGHT)
    dist_px = ndimage.distance_transform_edt(~boundary)
    dist_mm = dist_px * (label_map.voxel_size_um / 1000.0)
    band = soft & (dist_mm <= distance_mm)
    return RegionMask(data=band, region_id=ST)


def collapse_soft_tissue(label_map: LabelMap) -> LabelMap:
    """Merge SK/MT/AT back into ST (the 5-class view a network predicts)."""
    data = label_map.data.copy()
    data[np.isin(data, (SK, MT, AT))] = ST
    return LabelMap(data=data, voxel_size_um=label_map.voxel_size_um)
