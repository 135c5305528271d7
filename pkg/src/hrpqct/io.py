"""Raster, manifest, and feature-table I/O.

On-disk conventions:
  image:  <name>.raw        little-endian int16, row-major
  mask:   <name>.mask.raw   uint8, row-major
  both carry a sidecar <stem>.meta.json with width, height, voxel_size_um
  feature tables: UTF-8 CSV, key columns patient_id,slice_index,region
  manifest: JSON document listing patients, groups, covariates, slice files
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError
from .types import HUImage, LabelMap

KEY_COLUMNS = ("patient_id", "slice_index", "region")

# %.17g round-trips IEEE doubles exactly, which is stronger than the
# 15-significant-digit contract for feature tables.
_FLOAT_FMT = "%.17g"


def _sidecar_path(path: Path) -> Path:
    name = path.name
    if not name.endswith(".raw"):
        raise DataError(f"raster files must end in .raw: {path}")
    return path.with_name(name[: -len(".raw")] + ".meta.json")


def _load_sidecar(path: Path, sidecar: Path | None) -> tuple[int, int, float]:
    sidecar = Path(sidecar) if sidecar is not None else _sidecar_path(path)
    if not sidecar.is_file():
        raise DataError(f"missing sidecar: {sidecar}")
    meta = json.loads(sidecar.read_text())
    try:
        width, height = int(meta["width"]), int(meta["height"])
        voxel = float(meta["voxel_size_um"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"bad sidecar {sidecar}: {exc}") from exc
    if width <= 0 or height <= 0:
        raise DataError(f"non-positive dimensions in {sidecar}")
    return width, height, voxel


def _write_sidecar(path: Path, width: int, height: int, voxel_size_um: float) -> None:
    meta = {"width": width, "height": height, "voxel_size_um": voxel_size_um}
    _sidecar_path(path).write_text(json.dumps(meta, sort_keys=True) + "\n")


def load_hu_image(path: str | Path, sidecar: str | Path | None = None) -> HUImage:
    path = Path(path)
    width, height, voxel = _load_sidecar(path, sidecar)
    raw = path.read_bytes()
    expected = width * height * 2
    if len(raw) != expected:
        raise DataError(f"length mismatch: {path} has {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype="<i2").reshape(height, width)
    return HUImage(data=data.astype(np.int16), voxel_size_um=voxel)


def write_hu_image(img: HUImage, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(img.data.astype("<i2").tobytes())
    _write_sidecar(path, img.width, img.height, img.voxel_size_um)


def load_label_map(path: str | Path, sidecar: str | Path | None = None) -> LabelMap:
    path = Path(path)
    width, height, voxel = _load_sidecar(path, sidecar)
    raw = path.read_bytes()
    expected = width * height
    if len(raw) != expected:
        raise DataError(f"length mismatch: {path} has {len(raw)} bytes, expected {expected}")
    data = np.frombuffer(raw, dtype=np.uint8).reshape(height, width)
    return LabelMap(data=data.copy(), voxel_size_um=voxel)


def write_label_map(label_map: LabelMap, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(label_map.data.tobytes())
    _write_sidecar(path, label_map.width, label_map.height, label_map.voxel_size_um)


@dataclass(frozen=True)
class SliceRef:
    image: str
    mask: str | None = None


@dataclass(frozen=True)
class PatientEntry:
    patient_id: str
    group: str  # "osteoporosis" | "control"
    covariates: dict[str, float] = field(default_factory=dict)
    slices: tuple[SliceRef, ...] = ()


@dataclass(frozen=True)
class CohortManifest:
    patients: tuple[PatientEntry, ...]
    root: Path  # directory slice paths are resolved against

    def patient_ids(self) -> list[str]:
        return [p.patient_id for p in self.patients]

    def labels(self) -> dict[str, int]:
        """Binary label per patient: osteoporosis -> 1, control -> 0."""
        return {p.patient_id: int(p.group == "osteoporosis") for p in self.patients}

    def resolve(self, rel: str) -> Path:
        return self.root / rel


GROUPS = ("osteoporosis", "control")


def load_manifest(path: str | Path, check_files: bool = True) -> CohortManifest:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing manifest: {path}")
    doc = json.loads(path.read_text())
    root = path.parent
    patients = []
    seen = set()
    for entry in doc.get("patients", []):
        pid = str(entry["patient_id"])
        if pid in seen:
            raise DataError(f"duplicate patient_id: {pid}")
        seen.add(pid)
        group = entry["group"]
        if group not in GROUPS:
            raise DataError(f"unknown group label {group!r} for patient {pid}")
        covs = {str(k): float(v) for k, v in entry.get("covariates", {}).items()}
        slices = []
        for s in entry.get("slices", []):
            ref = SliceRef(image=s["image"], mask=s.get("mask"))
            if check_files:
                if not (root / ref.image).is_file():
                    raise DataError(f"unresolvable slice path: {ref.image}")
                if ref.mask is not None and not (root / ref.mask).is_file():
                    raise DataError(f"unresolvable mask path: {ref.mask}")
            slices.append(ref)
        patients.append(
            PatientEntry(patient_id=pid, group=group, covariates=covs, slices=tuple(slices))
        )
    return CohortManifest(patients=tuple(patients), root=root)


def write_manifest(manifest_doc: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest_doc, indent=2, sort_keys=True) + "\n")


@dataclass
class FeatureTable:
    """Named feature matrix keyed by (patient_id, slice_index, region)."""

    patient_ids: list[str]
    slice_indices: list[int]
    regions: list[str]
    names: list[str]
    values: np.ndarray  # float64, shape (n_rows, n_features)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        n = len(self.patient_ids)
        if not (len(self.slice_indices) == len(self.regions) == n):
            raise DataError("feature table key columns have mismatched lengths")
        if self.values.shape != (n, len(self.names)):
            raise DataError("feature table values shape does not match keys/names")
        if len(set(self.names)) != len(self.names):
            raise DataError("duplicate feature names")

    @property
    def n_rows(self) -> int:
        return len(self.patient_ids)

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.names.index(name)]

    def subset(self, names: list[str]) -> "FeatureTable":
        idx = [self.names.index(n) for n in names]
        return FeatureTable(
            patient_ids=list(self.patient_ids),
            slice_indices=list(self.slice_indices),
            regions=list(self.regions),
            names=list(names),
            values=self.values[:, idx].copy(),
        )

    def rows(self, keep: np.ndarray) -> "FeatureTable":
        keep = np.asarray(keep)
        if keep.dtype == bool:
            keep = np.flatnonzero(keep)
        return FeatureTable(
            patient_ids=[self.patient_ids[i] for i in keep],
            slice_indices=[self.slice_indices[i] for i in keep],
            regions=[self.regions[i] for i in keep],
            names=list(self.names),
            values=self.values[keep].copy(),
        )


def write_feature_table(table: FeatureTable, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(KEY_COLUMNS) + table.names)
        for i in range(table.n_rows):
            row = [table.patient_ids[i], str(table.slice_indices[i]), table.regions[i]]
            row += [_FLOAT_FMT % v for v in table.values[i]]
            writer.writerow(row)


def load_feature_table(path: str | Path) -> FeatureTable:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing feature table: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or tuple(header[:3]) != KEY_COLUMNS:
            raise DataError(f"feature table must start with columns {KEY_COLUMNS}")
        names = header[3:]
        pids, slices, regions, values = [], [], [], []
        for row in reader:
            pids.append(row[0])
            slices.append(int(row[1]))
            regions.append(row[2])
            values.append([float(v) for v in row[3:]])
    arr = np.asarray(values, dtype=np.float64).reshape(len(pids), len(names))
    return FeatureTable(
        patient_ids=pids, slice_indices=slices, regions=regions, names=names, values=arr
    )
