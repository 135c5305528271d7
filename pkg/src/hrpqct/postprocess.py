"""Morphological cleanup of a raw 5-class segmentation map.

Enforces the topological constraints of the distal-tibia site: every
anatomical class reduced to one 8-connected component, stray fragments
relabeled from their neighborhood, cortical rings checked for continuity
against their convex hull and closed when broken, and ring interiors
reassigned to the trabecular compartment. The full pipeline is idempotent
and only relabels pixels (never crops).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ._geometry import convex_hull, rasterize_convex_polygon
from .errors import DataError, NumericError
from .types import BG, BONE_CLASSES, ST, LabelMap

SENTINEL = 255
CONTINUITY_TAU = 0.90
MAX_CLOSING_RADIUS = 32

_EIGHT = np.ones((3, 3), dtype=bool)


@dataclass
class QCReport:
    """Per-slice record of what the cleanup had to change."""

    components_removed: dict[int, int] = field(default_factory=dict)
    fragments_relabeled: int = 0
    continuity_ratio: dict[str, float] = field(default_factory=dict)
    closing_radius: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)


def _largest_component(mask: np.ndarray) -> np.ndarray:
    """Largest 8-connected component; size ties keep the blob containing
    the smallest row-major pixel index."""
    lab, n = ndimage.label(mask, structure=_EIGHT)
    if n <= 1:
        return mask
    sizes = np.bincount(lab.ravel())[1:]
    best = sizes.max()
    candidates = [i + 1 for i, s in enumerate(sizes) if s == best]
    if len(candidates) > 1:
        flat = lab.ravel()
        candidates.sort(key=lambda l: int(np.flatnonzero(flat == l)[0]))
    return lab == candidates[0]


def enforce_single_component(
    label_map: LabelMap, class_id: int, sentinel: int = SENTINEL
) -> tuple[np.ndarray, int, bool]:
    """Keep only the largest component of class_id in a working array.

    Returns (working uint8 array, pixels demoted to sentinel, absent flag).
    Accepts either a LabelMap or a working ndarray carrying sentinels.
    """
    if not 1 <= class_id <= ST:
        raise DataError(f"class id must be in 1..{ST}, got {class_id}")
    data = label_map.data if isinstance(label_map, LabelMap) else label_map
    work = np.asarray(data).copy()
    mask = work == class_id
    if not mask.any():
        return work, 0, True
    keep = _largest_component(mask)
    drop = mask & ~keep
    work[drop] = sentinel
    return work, int(drop.sum()), False


def relabel_fragments_by_neighbor_majority(work: np.ndarray, sentinel: int = SENTINEL) -> np.ndarray:
    """Assign each sentinel fragment the modal label on its 8-neighbor
    boundary (ties to the smaller class id); iterate to fixpoint, then
    send anything still unresolved to background."""
    work = work.copy()
    while True:
        frag_mask = work == sentinel
        if not frag_mask.any():
            return work
        lab, n = ndimage.label(frag_mask, structure=_EIGHT)
        changed = False
        for i in range(1, n + 1):
            frag = lab == i
            ring = ndimage.binary_dilation(frag, structure=_EIGHT) & ~frag
            neighbors = work[ring]
            neighbors = neighbors[neighbors != sentinel]
            if neighbors.size == 0:
                continue
            counts = np.bincount(neighbors)
            work[frag] = int(np.argmax(counts))  # argmax takes the smallest id on ties
            changed = True
        if not changed:
            work[work == sentinel] = BG
            return work


@dataclass(frozen=True)
class ContinuityResult:
    ratio: float
    continuous: bool


def check_cortical_continuity(
    label_map, bone: str, tau: float = CONTINUITY_TAU
) -> ContinuityResult:
    """Filled-contour area over convex-hull area of the cortical pixels.

    A closed ring fills to (almost) its hull, ratio near 1; a broken ring
    leaves the interior unfilled and the ratio drops below tau.
    """
    cortical_id = BONE_CLASSES[bone][0]
    data = label_map.data if isinstance(label_map, LabelMap) else label_map
    mask = data == cortical_id
    if mask.sum() < 3:
        raise DataError(f"{bone} cortical mask has < 3 pixels: hull undefined")
    filled = ndimage.binary_fill_holes(mask)
    hull = convex_hull(np.argwhere(mask))
    hull_raster = rasterize_convex_polygon(hull, mask.shape)
    hull_area = int(hull_raster.sum())
    ratio = float(filled.sum() / hull_area) if hull_area else 0.0
    return ContinuityResult(ratio=ratio, continuous=ratio >= tau)


def _disk(radius: int) -> np.ndarray:
    r = np.arange(-radius, radius + 1)
    yy, xx = np.meshgrid(r, r, indexing="ij")
    return yy * yy + xx * xx <= radius * radius


def close_cortical_gaps(
    label_map,
    bone: str,
    tau: float = CONTINUITY_TAU,
    max_radius: int = MAX_CLOSING_RADIUS,
    slice_id: str = "?",
) -> tuple[np.ndarray, int]:
    """Morphological closing with a disk, radius doubling from 2, until the
    cortical ring is continuous. New pixels overwrite only BG/ST."""
    cortical_id = BONE_CLASSES[bone][0]
    data = label_map.data if isinstance(label_map, LabelMap) else label_map
    work = np.asarray(data).copy()
    radius = 2
    while radius <= max_radius:
        mask = work == cortical_id
        pad = radius + 1
        padded = np.pad(mask, pad)
        closed = ndimage.binary_closing(padded, structure=_disk(radius))
        closed = closed[pad:-pad, pad:-pad]
        added = closed & ~mask & np.isin(work, (BG, ST))
        candidate = work.copy()
        candidate[added] = cortical_id
        if check_cortical_continuity(candidate, bone, tau=tau).continuous:
            return candidate, radius
        radius *= 2
    raise NumericError(
        f"{bone} cortical ring still discontinuous at closing radius {max_radius}"
        f" (slice {slice_id})"
    )


def fill_trabecular_interior(label_map, bone: str) -> np.ndarray:
    """Everything strictly enclosed by the cortical ring and not cortical
    becomes the bone's trabecular class. Outside is found by flood fill
    from the image border (4-connected, the dual of the 8-connected ring)."""
    cortical_id, trabecular_id = BONE_CLASSES[bone]
    data = label_map.data if isinstance(label_map, LabelMap) else label_map
    work = np.asarray(data).copy()
    cortical = work == cortical_id
    non_cortical = ~cortical
    lab, n = ndimage.label(non_cortical)  # 4-connectivity
    border_labels = np.unique(
        np.concatenate([lab[0, :], lab[-1, :], lab[:, 0], lab[:, -1]])
    )
    border_labels = border_labels[border_labels != 0]
    outside = np.isin(lab, border_labels)
    interior = non_cortical & ~outside
    work[interior] = trabecular_id
    return work


def postprocess_pipeline(
    label_map: LabelMap, tau: float = CONTINUITY_TAU, slice_id: str = "?"
) -> tuple[LabelMap, QCReport]:
    """single-component -> fragment relabel -> continuity/closing -> fill,
    for tibia then fibula."""
    report = QCReport()
    work = label_map.data.copy()
    for class_id in (1, 2, 3, 4, 5):
        work, removed, absent = enforce_single_component(work, class_id)
        report.components_removed[class_id] = removed
        if absent:
            report.warnings.append(f"class {class_id} absent")
    report.fragments_relabeled = int(np.sum(work == SENTINEL))
    work = relabel_fragments_by_neighbor_majority(work)
    for bone in ("tibia", "fibula"):
        cortical_id = BONE_CLASSES[bone][0]
        if not np.any(work == cortical_id):
            report.warnings.append(f"{bone} cortical absent; skipped")
            continue
        result = check_cortical_continuity(work, bone, tau=tau)
        report.continuity_ratio[bone] = result.ratio
        if not result.continuous:
            work, radius = close_cortical_gaps(work, bone, tau=tau, slice_id=slice_id)
            report.closing_radius[bone] = radius
        work = fill_trabecular_interior(work, bone)
    return LabelMap(data=work, voxel_size_um=label_map.voxel_size_um), report
