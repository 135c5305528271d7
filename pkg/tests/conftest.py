import numpy as np
import pytest

from hrpqct.types import HUImage, LabelMap, RegionMask


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


def hu_image(arr, voxel=60.7) -> HUImage:
    return HUImage(data=np.asarray(arr, dtype=np.int16), voxel_size_um=voxel)


def label_map(arr, voxel=60.7) -> LabelMap:
    return LabelMap(data=np.asarray(arr, dtype=np.uint8), voxel_size_um=voxel)


def region_mask(arr, region_id=-1) -> RegionMask:
    return RegionMask(data=np.asarray(arr, dtype=bool), region_id=region_id)


def annulus(side: int, center: tuple[float, float], r_outer: float, r_inner: float,
            gap_deg: tuple[float, float] | None = None) -> np.ndarray:
    """Boolean ring; optionally remove the angular sector [a, b) degrees."""
    yy, xx = np.mgrid[0:side, 0:side]
    dy = yy - center[0]
    dx = xx - center[1]
    r2 = dy * dy + dx * dx
    ring = (r2 <= r_outer**2) & (r2 > r_inner**2)
    if gap_deg is not None:
        ang = np.degrees(np.arctan2(dy, dx)) % 360.0
        a, b = gap_deg
        ring &= ~((ang >= a) & (ang < b))
    return ring
