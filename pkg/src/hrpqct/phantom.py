"""Deterministic synthetic slice and cohort generator for end-to-end tests.

A phantom slice is a soft-tissue disk containing a two-ring bone pair
(tibia and fibula: cortical annulus around a binary trabecular texture)
with the soft interior split into a myotendinous and an adipose sector at
HU levels matching the seeded-growth protocol thresholds. Ground-truth
label maps use the full 9-class scheme. All randomness flows through
counter-based Philox streams keyed by content (seed, patient, slice), so
outputs are platform-independent and order-independent.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigError, DataError
from .io import write_hu_image, write_label_map, write_manifest
from .soft_tissue import skin_band_radius_px
from .types import AT, BG, FC, FT, MT, SK, TC, TT, HUImage, LabelMap

HU_AIR = -1000
HU_SKIN = 40
HU_MYO = 300
HU_ADIPOSE = -400
HU_CORTICAL = 1400
HU_STRUT = 1000
HU_MARROW = 60


@dataclass(frozen=True)
class PhantomParams:
    seed: int = 0
    side: int = 160
    voxel_size_um: float = 300.0
    leg_center: tuple[float, float] = (0.5, 0.5)
    leg_radius: float = 0.44  # fractions of the side
    tibia_center: tuple[float, float] = (0.42, 0.40)
    tibia_radius: float = 0.20
    tibia_cortical_px: int = 6
    fibula_center: tuple[float, float] = (0.70, 0.72)
    fibula_radius: float = 0.09
    fibula_cortical_px: int = 4
    trabecular_density: float = 0.5
    myo_fraction: float = 0.55
    noise_sigma_hu: float = 25.0
    group: str = "control"

    def __post_init__(self):
        if not 0.0 <= self.trabecular_density <= 1.0:
            raise ConfigError("trabecular_density must lie in [0, 1]")
        if not 0.0 <= self.myo_fraction <= 1.0:
            raise ConfigError("myo_fraction must lie in [0, 1]")
        for cy, cx, r in (
            (*self.leg_center, self.leg_radius),
            (*self.tibia_center, self.tibia_radius),
            (*self.fibula_center, self.fibula_radius),
        ):
            if cy - r < 0 or cy + r > 1 or cx - r < 0 or cx + r > 1:
                raise ConfigError("geometry overflow: circle leaves the image")


def _stream(*parts) -> np.random.Generator:
    """Philox stream keyed by a stable hash of the identifying parts."""
    digest = hashlib.sha256("/".join(str(p) for p in parts).encode()).digest()
    key = np.frombuffer(digest[:16], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _disk(side: int, center: tuple[float, float], radius: float) -> np.ndarray:
    yy, xx = np.mgrid[0:side, 0:side]
    cy, cx = center[0] * side, center[1] * side
    return (yy - cy) ** 2 + (xx - cx) ** 2 <= (radius * side) ** 2


def generate_phantom(params: PhantomParams) -> tuple[HUImage, LabelMap]:
    side = params.side
    leg = _disk(side, params.leg_center, params.leg_radius)
    tibia = _disk(side, params.tibia_center, params.tibia_radius)
    tibia_inner = _disk(
        side,
        params.tibia_center,
        params.tibia_radius - params.tibia_cortical_px / side,
    )
    fibula = _disk(side, params.fibula_center, params.fibula_radius)
    fibula_inner = _disk(
        side,
        params.fibula_center,
        params.fibula_radius - params.fibula_cortical_px / side,
    )
    if (tibia & fibula).any():
        raise ConfigError("geometry overflow: tibia and fibula overlap")
    if not (tibia <= leg).all() or not (fibula <= leg).all():
        raise ConfigError("geometry overflow: bone leaves the soft-tissue disk")

    labels = np.full((side, side), BG, dtype=np.uint8)
    soft = leg & ~tibia & ~fibula
    labels[tibia & ~tibia_inner] = TC
    labels[tibia_inner] = TT
    labels[fibula & ~fibula_inner] = FC
    labels[fibula_inner] = FT

    # Soft-tissue ground truth: 2 mm skin band, interior split by column
    # quantile into myotendinous (left) and adipose (right).
    r = skin_band_radius_px(2.0, params.voxel_size_um)
    dist = ndimage.distance_transform_edt(soft)
    skin = soft & (dist <= r)
    interior = soft & ~skin
    if not interior.any():
        raise ConfigError("geometry overflow: soft tissue thinner than the skin band")
    cols = np.argwhere(interior)[:, 1]
    split_col = np.quantile(cols, params.myo_fraction, method="lower")
    col_grid = np.arange(side)[None, :].repeat(side, axis=0)
    myo = interior & (col_grid <= split_col)
    adipose = interior & ~myo
    labels[skin] = SK
    labels[myo] = MT
    labels[adipose] = AT

    hu = np.full((side, side), HU_AIR, dtype=np.float64)
    hu[skin] = HU_SKIN
    hu[myo] = HU_MYO
    hu[adipose] = HU_ADIPOSE
    hu[labels == TC] = HU_CORTICAL
    hu[labels == FC] = HU_CORTICAL

    rng = _stream(params.seed, "texture")
    for trab in (labels == TT, labels == FT):
        n = int(trab.sum())
        struts = rng.random(n) < params.trabecular_density
        hu[trab] = np.where(struts, HU_STRUT, HU_MARROW)
    if params.noise_sigma_hu > 0:
        noise_rng = _stream(params.seed, "noise")
        hu += noise_rng.normal(0.0, params.noise_sigma_hu, hu.shape)
    hu = np.clip(np.rint(hu), -32768, 32767).astype(np.int16)
    img = HUImage(data=hu, voxel_size_um=params.voxel_size_um)
    return img, LabelMap(data=labels, voxel_size_um=params.voxel_size_um)


@dataclass(frozen=True)
class CohortParams:
    n_patients: int = 10
    slices_per_patient: int = 168
    effect_size: float = 1.0
    seed: int = 0
    base_params: PhantomParams = PhantomParams()
    test_fraction: float = 0.2
    density_shift: float = 0.08  # group separation per unit effect size
    density_jitter: float = 0.01


def _patient_params(cohort: CohortParams, index: int) -> PhantomParams:
    pid_rng = _stream(cohort.seed, "patient", index)
    group = "osteoporosis" if index < cohort.n_patients // 2 else "control"
    sign = -1.0 if group == "osteoporosis" else 1.0
    density = (
        cohort.base_params.trabecular_density
        + sign * cohort.effect_size * cohort.density_shift
        + pid_rng.normal(0.0, cohort.density_jitter)
    )
    myo_fraction = float(np.clip(0.55 + pid_rng.normal(0.0, 0.04), 0.35, 0.75))
    return replace(
        cohort.base_params,
        trabecular_density=float(np.clip(density, 0.02, 0.98)),
        myo_fraction=myo_fraction,
        group=group,
    )


def generate_cohort(out_dir: str | Path, cohort: CohortParams) -> Path:
    """Write a balanced synthetic cohort: rasters, truth masks, manifest,
    and a patient-level 80/20 split file. Returns the manifest path."""
    if cohort.n_patients < 2 or cohort.n_patients % 2:
        raise DataError("cohort size must be an even number of patients >= 2")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "masks").mkdir(parents=True, exist_ok=True)
    patients_doc = []
    for idx in range(cohort.n_patients):
        pid = f"P{idx:03d}"
        params = _patient_params(cohort, idx)
        cov_rng = _stream(cohort.seed, "covariates", idx)
        covariates = {
            "age": float(np.round(cov_rng.normal(64.0, 6.0), 2)),
            "bmi": float(np.round(cov_rng.normal(27.0, 4.0), 2)),
        }
        slices_doc = []
        for s in range(cohort.slices_per_patient):
            slice_params = replace(
                params, seed=_slice_seed(cohort.seed, idx, s)
            )
            img, truth = generate_phantom(slice_params)
            image_rel = f"images/{pid}_{s:03d}.raw"
            mask_rel = f"masks/{pid}_{s:03d}.mask.raw"
            write_hu_image(img, out_dir / image_rel)
            write_label_map(truth, out_dir / mask_rel)
            slices_doc.append({"image": image_rel, "mask": mask_rel})
        patients_doc.append(
            {
                "patient_id": pid,
                "group": params.group,
                "covariates": covariates,
                "slices": slices_doc,
            }
        )
    manifest_path = out_dir / "manifest.json"
    write_manifest({"patients": patients_doc}, manifest_path)

    split_rng = _stream(cohort.seed, "split")
    ids = [p["patient_id"] for p in patients_doc]
    order = split_rng.permutation(len(ids))
    n_test = max(1, int(round(cohort.test_fraction * len(ids))))
    test_ids = sorted(ids[i] for i in order[:n_test])
    train_ids = sorted(ids[i] for i in order[n_test:])
    split_path = out_dir / "split.json"
    split_path.write_text(
        json.dumps({"train": train_ids, "test": test_ids}, indent=2, sort_keys=True) + "\n"
    )
    return manifest_path


def _slice_seed(seed: int, patient_index: int, slice_index: int) -> int:
    digest = hashlib.sha256(f"{seed}/{patient_index}/{slice_index}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


def total_images(cohort: CohortParams) -> int:
    return cohort.n_patients * cohort.slices_per_patient


def expected_split_sizes(cohort: CohortParams) -> tuple[int, int]:
    n_test = max(1, int(round(cohort.test_fraction * cohort.n_patients)))
    return cohort.n_patients - n_test, n_test


def myo_fraction_split_area(params: PhantomParams) -> tuple[int, int]:
    """Constructed MT/AT pixel counts, for protocol-recovery checks."""
    _, truth = generate_phantom(params)
    return int((truth.data == MT).sum()), int((truth.data == AT).sum())
