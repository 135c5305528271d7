"""Domain types, raster round-trips, manifests, and feature tables."""

import json

import numpy as np
import pytest

from conftest import label_map
from hrpqct.errors import DataError, EmptyRegionError
from hrpqct.features import canonical_feature_names
from hrpqct.io import (
    FeatureTable,
    load_feature_table,
    load_hu_image,
    load_label_map,
    load_manifest,
    write_feature_table,
    write_hu_image,
    write_label_map,
)
from hrpqct.types import AT, HUImage, LabelMap, extract_region_mask


def write_raw(path, data_bytes, width, height, voxel=60.7):
    path.write_bytes(data_bytes)
    meta = {"width": width, "height": height, "voxel_size_um": voxel}
    path.with_name(path.name[: -len(".raw")] + ".meta.json").write_text(json.dumps(meta))


def test_load_hu_image_twos_complement(tmp_path):
    p = tmp_path / "img.raw"
    write_raw(p, bytes([0x10, 0x27, 0xF0, 0xD8]), width=2, height=1)
    img = load_hu_image(p)
    assert img.data.tolist() == [[10000, -10000]]


def test_load_hu_image_length_mismatch(tmp_path):
    p = tmp_path / "img.raw"
    write_raw(p, bytes(7), width=2, height=2)
    with pytest.raises(DataError, match="length mismatch"):
        load_hu_image(p)


def test_load_hu_image_missing_sidecar(tmp_path):
    p = tmp_path / "img.raw"
    p.write_bytes(bytes(8))
    with pytest.raises(DataError, match="sidecar"):
        load_hu_image(p)


def test_hu_image_round_trip_bit_identical(tmp_path, rng):
    data = rng.integers(-32768, 32767, size=(13, 7)).astype(np.int16)
    img = HUImage(data=data, voxel_size_um=60.7)
    p = tmp_path / "x.raw"
    write_hu_image(img, p)
    back = load_hu_image(p)
    assert np.array_equal(back.data, img.data)
    assert back.voxel_size_um == img.voxel_size_um


def test_label_map_round_trip_and_closure(tmp_path, rng):
    data = rng.integers(0, 9, size=(9, 11)).astype(np.uint8)
    lm = LabelMap(data=data, voxel_size_um=60.7)
    p = tmp_path / "m.mask.raw"
    write_label_map(lm, p)
    assert np.array_equal(load_label_map(p).data, data)
    bad = data.copy()
    bad[0, 0] = 9
    p2 = tmp_path / "bad.mask.raw"
    p2.write_bytes(bad.tobytes())
    p2.with_name("bad.mask.meta.json").write_text(
        json.dumps({"width": 11, "height": 9, "voxel_size_um": 60.7})
    )
    with pytest.raises(DataError, match="ids outside"):
        load_label_map(p2)


def test_extract_region_mask_cases():
    lm = label_map(np.full((3, 3), 2))
    mask = extract_region_mask(lm, 2)
    assert mask.data.all() and mask.region_id == 2
    with pytest.raises(EmptyRegionError, match="empty region"):
        extract_region_mask(lm, 7)
    lm2 = label_map([[1, 2], [2, 2]])
    m = extract_region_mask(lm2, 1)
    assert m.pixel_count == 1 and m.data[0, 0]


def test_region_union_covers_nonbackground(rng):
    data = rng.integers(0, 9, size=(16, 16)).astype(np.uint8)
    lm = label_map(data)
    union = np.zeros_like(data, dtype=bool)
    for region in range(1, AT + 1):
        if (data == region).any():
            union |= extract_region_mask(lm, region).data
    assert np.array_equal(union, data != 0)


def test_types_are_immutable():
    img = HUImage(data=np.zeros((2, 2), dtype=np.int16), voxel_size_um=1.0)
    with pytest.raises(ValueError):
        img.data[0, 0] = 5


def test_manifest_load_and_errors(tmp_path):
    img = HUImage(data=np.zeros((2, 2), dtype=np.int16), voxel_size_um=60.7)
    write_hu_image(img, tmp_path / "a.raw")
    doc = {
        "patients": [
            {"patient_id": "P1", "group": "osteoporosis", "covariates": {"age": 60},
             "slices": [{"image": "a.raw"}]},
            {"patient_id": "P2", "group": "control", "slices": [{"image": "a.raw"}]},
        ]
    }
    path = tmp_path / "manifest.json"
    path.write_text(json.dumps(doc))
    manifest = load_manifest(path)
    assert manifest.patient_ids() == ["P1", "P2"]
    assert manifest.labels() == {"P1": 1, "P2": 0}

    doc["patients"][1]["patient_id"] = "P1"
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="duplicate patient_id"):
        load_manifest(path)

    doc["patients"][1]["patient_id"] = "P2"
    doc["patients"][1]["group"] = "osteopenia"
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="unknown group"):
        load_manifest(path)

    doc["patients"][1]["group"] = "control"
    doc["patients"][1]["slices"] = [{"image": "missing.raw"}]
    path.write_text(json.dumps(doc))
    with pytest.raises(DataError, match="unresolvable"):
        load_manifest(path)


def test_feature_table_round_trip_939_columns(tmp_path, rng):
    names = canonical_feature_names()
    values = rng.normal(size=(3, len(names))) * 10.0 ** rng.integers(-8, 9, (3, len(names)))
    table = FeatureTable(
        patient_ids=["P1", "P1", "P2"],
        slice_indices=[0, 1, 0],
        regions=["TT", "TT", "MT"],
        names=names,
        values=values,
    )
    path = tmp_path / "features.csv"
    write_feature_table(table, path)
    back = load_feature_table(path)
    assert back.names == names
    assert back.patient_ids == table.patient_ids
    assert back.slice_indices == table.slice_indices
    assert back.regions == table.regions
    # %.17g round-trips doubles exactly, stronger than 15 significant digits
    assert np.array_equal(back.values, table.values)


def test_feature_table_validation():
    with pytest.raises(DataError, match="duplicate feature names"):
        FeatureTable(
            patient_ids=["a"], slice_indices=[0], regions=["TT"],
            names=["f", "f"], values=np.zeros((1, 2)),
        )
