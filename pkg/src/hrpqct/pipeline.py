"""Batch orchestration of the full image-level and patient-level workflows.

A single JSON config drives: phantom cohort generation (or an existing
manifest), preprocessing, mask post-processing, soft-tissue subdivision,
feature extraction, three-stage selection, classifier training with
grouped CV, held-out evaluation, and optional patient-level inference.
Every artifact is written deterministically and content-hashed into a run
manifest, so identical configs reproduce identical bytes.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import ClassifierSpec, fit_classifier, grid_search_cv
from .errors import ConfigError, DataError, PipelineError
from .features import DEFAULT_BIN_COUNT, extract_all
from .io import (
    CohortManifest,
    FeatureTable,
    load_hu_image,
    load_label_map,
    load_manifest,
    write_feature_table,
    write_hu_image,
    write_label_map,
)
from .phantom import CohortParams, PhantomParams, generate_cohort
from .postprocess import postprocess_pipeline
from .preprocess import clip_intensity
from .selection import SelectionConfig, SelectionModel, apply_minmax, fit_selection
from .soft_tissue import (
    SoftTissueParams,
    collapse_soft_tissue,
    radial_band_mask,
    segment_soft_tissue,
)
from .stats import (
    aggregate_patient,
    classification_metrics,
    hosmer_lemeshow,
    logistic_inference,
    roc_auroc,
    youden_threshold,
)
from .types import CLASS_IDS, extract_region_mask

FLOAT_FMT = "%.17g"

BAND_REGIONS = {"BAND10": 10.0, "BAND20": 20.0, "BANDINF": math.inf}

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "phantom": {
        "n_patients": 10,
        "slices_per_patient": 4,
        "effect_size": 1.0,
        "side": 160,
        "voxel_size_um": 300.0,
        "noise_sigma_hu": 25.0,
    },
    "preprocess": {"clip_lo": -4000, "clip_hi": 6000},
    "postprocess": {"enabled": True, "tau": 0.90},
    "soft_tissue": {"enabled": True},
    "extract": {"regions": ["TT"], "bins": DEFAULT_BIN_COUNT, "bin_policy": "count"},
    "select": {
        "variance_threshold": 0.02,
        "r_max": 0.9,
        "lambda": "auto",
        "top_k": None,
        "cv_points": 30,
    },
    "train": {"model": "logistic_regression", "folds": 5},
    "evaluate": {"threshold": 0.5, "write_roc": True},
    "stats": {"enabled": False, "top_k": 5},
}


def merge_config(user: dict | None) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    for key, value in (user or {}).items():
        if isinstance(value, dict) and isinstance(config.get(key), dict):
            config[key].update(value)
        else:
            config[key] = value
    return config


def _stage(name: str, input_id: str, exc: Exception) -> PipelineError:
    cls = type(exc) if isinstance(exc, PipelineError) else DataError
    return cls(f"stage {name} failed on {input_id}: {exc}")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow(
                [FLOAT_FMT % v if isinstance(v, float) else v for v in row]
            )


def _region_mask(refined, region: str):
    if region in BAND_REGIONS:
        return radial_band_mask(refined, BAND_REGIONS[region])
    if region not in CLASS_IDS:
        raise ConfigError(f"unknown region {region!r}")
    return extract_region_mask(refined, CLASS_IDS[region])


def run_pipeline(config: dict | None, workdir: str | Path) -> Path:
    """Execute the configured stages; returns the artifacts directory."""
    config = merge_config(config)
    workdir = Path(workdir)
    artifacts = workdir / "artifacts"
    artifacts.mkdir(parents=True, exist_ok=True)

    # --- cohort -------------------------------------------------------------
    if "manifest" in config:
        manifest_path = Path(config["manifest"])
        split_path = Path(config["split"]) if "split" in config else None
    else:
        ph = config["phantom"]
        base = PhantomParams(
            side=int(ph.get("side", 160)),
            voxel_size_um=float(ph.get("voxel_size_um", 300.0)),
            noise_sigma_hu=float(ph.get("noise_sigma_hu", 25.0)),
        )
        cohort = CohortParams(
            n_patients=int(ph["n_patients"]),
            slices_per_patient=int(ph["slices_per_patient"]),
            effect_size=float(ph.get("effect_size", 1.0)),
            seed=int(config.get("seed", 0)),
            base_params=base,
        )
        try:
            manifest_path = generate_cohort(workdir / "cohort", cohort)
        except Exception as exc:
            raise _stage("phantom", "cohort", exc) from exc
        split_path = workdir / "cohort" / "split.json"
    manifest = load_manifest(manifest_path)
    if split_path is None or not Path(split_path).is_file():
        raise ConfigError("pipeline requires a patient-level split file")
    split = json.loads(Path(split_path).read_text())
    train_ids = set(split["train"])
    test_ids = set(split["test"])
    if train_ids & test_ids:
        raise DataError("split shares patients between train and test")

    # --- per-slice stages ----------------------------------------------------
    pp_cfg = config["preprocess"]
    post_cfg = config["postprocess"]
    soft_cfg = dict(config["soft_tissue"])
    soft_enabled = soft_cfg.pop("enabled", True)
    soft_params = SoftTissueParams(**soft_cfg) if soft_cfg else SoftTissueParams()
    ext_cfg = config["extract"]
    regions = list(ext_cfg["regions"])

    qc_rows: list[list] = []
    area_rows: list[list] = []
    feat_names: list[str] | None = None
    pids, sidx, fregions, rows = [], [], [], []
    for patient in manifest.patients:
        for s, ref in enumerate(patient.slices):
            slice_id = f"{patient.patient_id}:{s}"
            try:
                img = load_hu_image(manifest.resolve(ref.image))
                img = clip_intensity(
                    img, int(pp_cfg.get("clip_lo", -4000)), int(pp_cfg.get("clip_hi", 6000))
                )
            except Exception as exc:
                raise _stage("preprocess", slice_id, exc) from exc
            if ref.mask is None:
                raise DataError(f"slice {slice_id} has no mask for extraction")
            mask = load_label_map(manifest.resolve(ref.mask))
            network_view = collapse_soft_tissue(mask)
            if post_cfg.get("enabled", True):
                try:
                    network_view, report = postprocess_pipeline(
                        network_view, tau=float(post_cfg.get("tau", 0.90)), slice_id=slice_id
                    )
                except Exception as exc:
                    raise _stage("postprocess", slice_id, exc) from exc
                qc_rows.append(
                    [
                        slice_id,
                        sum(report.components_removed.values()),
                        report.fragments_relabeled,
                        float(report.continuity_ratio.get("tibia", math.nan)),
                        float(report.continuity_ratio.get("fibula", math.nan)),
                        report.closing_radius.get("tibia", 0),
                        report.closing_radius.get("fibula", 0),
                    ]
                )
            if soft_enabled:
                try:
                    refined, soft_report = segment_soft_tissue(img, network_view, soft_params)
                except Exception as exc:
                    raise _stage("soft-tissue", slice_id, exc) from exc
                area_rows.append(
                    [
                        slice_id,
                        soft_report.areas_mm2["SK"],
                        soft_report.areas_mm2["MT"],
                        soft_report.areas_mm2["AT"],
                        soft_report.contested_px,
                        soft_report.unassigned_px,
                    ]
                )
            else:
                refined = network_view
            try:
                for region in regions:
                    rmask = _region_mask(refined, region)
                    feats = extract_all(
                        img,
                        rmask,
                        bins=int(ext_cfg.get("bins", DEFAULT_BIN_COUNT)),
                        bin_policy=ext_cfg.get("bin_policy", "count"),
                    )
                    if feat_names is None:
                        feat_names = list(feats.keys())
                    pids.append(patient.patient_id)
                    sidx.append(s)
                    fregions.append(region)
                    rows.append([feats[n] for n in feat_names])
            except Exception as exc:
                raise _stage("extract", slice_id, exc) from exc

    if post_cfg.get("enabled", True):
        _write_csv(
            artifacts / "postprocess_qc.csv",
            ["slice_id", "components_removed", "fragments", "tibia_ratio",
             "fibula_ratio", "tibia_closing_radius", "fibula_closing_radius"],
            qc_rows,
        )
    if soft_enabled:
        _write_csv(
            artifacts / "soft_tissue_areas.csv",
            ["slice_id", "sk_mm2", "mt_mm2", "at_mm2", "contested_px", "unassigned_px"],
            area_rows,
        )
    table = FeatureTable(
        patient_ids=pids,
        slice_indices=sidx,
        regions=fregions,
        names=feat_names or [],
        values=np.asarray(rows, dtype=np.float64).reshape(len(pids), len(feat_names or [])),
    )
    write_feature_table(table, artifacts / "features.csv")

    # --- selection ------------------------------------------------------------
    labels_by_pid = manifest.labels()
    is_train = np.array([pid in train_ids for pid in table.patient_ids])
    is_test = np.array([pid in test_ids for pid in table.patient_ids])
    train_table = table.rows(is_train)
    test_table = table.rows(is_test)
    y_train = np.array([labels_by_pid[p] for p in train_table.patient_ids])
    y_test = np.array([labels_by_pid[p] for p in test_table.patient_ids])
    sel_cfg = config["select"]
    try:
        selection = fit_selection(
            train_table,
            y_train,
            list(train_table.patient_ids),
            SelectionConfig(
                variance_threshold=float(sel_cfg.get("variance_threshold", 0.02)),
                r_max=float(sel_cfg.get("r_max", 0.9)),
                lasso_lambda=sel_cfg.get("lambda", "auto"),
                top_k=sel_cfg.get("top_k"),
                cv_points=int(sel_cfg.get("cv_points", 30)),
                seed=int(config.get("seed", 0)),
            ),
        )
    except Exception as exc:
        raise _stage("select", "training table", exc) from exc
    selection.save(artifacts / "selection.json")
    (artifacts / "selection_report.json").write_text(
        json.dumps(
            {
                "n_features": len(table.names),
                "variance_survivors": len(selection.variance_survivors),
                "correlation_survivors": len(selection.correlation_survivors),
                "lasso_nonzero": sum(
                    1 for v in selection.lasso_coefficients.values() if v != 0.0
                ),
                "selected": selection.selected,
                "lambda": selection.lasso_lambda,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )

    # --- train ------------------------------------------------------------------
    tr_cfg = config["train"]
    spec = ClassifierSpec(
        family=tr_cfg.get("model", "logistic_regression"),
        grid=tr_cfg.get("grid", {}),
        seed=int(config.get("seed", 0)),
    )
    X_train = apply_minmax(selection, train_table).subset(selection.selected).values
    X_test = apply_minmax(selection, test_table).subset(selection.selected).values
    try:
        search = grid_search_cv(
            spec, X_train, y_train, list(train_table.patient_ids),
            folds=int(tr_cfg.get("folds", 5)),
        )
        model = fit_classifier(
            spec.family,
            search.best_params,
            X_train,
            y_train,
            seed=spec.seed,
            feature_names=selection.selected,
        )
    except Exception as exc:
        raise _stage("train", spec.family, exc) from exc
    model.save(artifacts / "model.json")
    _write_csv(
        artifacts / "cv_table.csv",
        ["grid_index", "params", "mean_auroc"],
        [
            [row["grid_index"], json.dumps(row["params"], sort_keys=True), row["mean_auroc"]]
            for row in search.table
        ],
    )

    # --- evaluate ------------------------------------------------------------------
    ev_cfg = config["evaluate"]
    try:
        probs = model.predict_proba(X_test, feature_names=selection.selected)
        curve = roc_auroc(y_test, probs)
        threshold = ev_cfg.get("threshold", 0.5)
        if threshold == "youden_train":
            train_curve = roc_auroc(
                y_train, model.predict_proba(X_train, feature_names=selection.selected)
            )
            threshold = youden_threshold(train_curve)
        metrics = classification_metrics(y_test, (probs >= float(threshold)).astype(int))
    except Exception as exc:
        raise _stage("evaluate", spec.family, exc) from exc
    _write_csv(
        artifacts / "metrics.csv",
        ["model", "n_test", "accuracy", "sensitivity", "specificity", "f1", "auroc",
         "threshold"],
        [[spec.family, len(y_test), metrics["accuracy"], metrics["sensitivity"],
          metrics["specificity"], metrics["f1"], curve.auroc, float(threshold)]],
    )
    if ev_cfg.get("write_roc", True):
        _write_csv(
            artifacts / "roc.csv",
            ["fpr", "tpr", "threshold"],
            [[float(f), float(t), float(th)]
             for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)],
        )

    # --- patient-level stats -----------------------------------------------------
    st_cfg = config["stats"]
    if st_cfg.get("enabled", False):
        try:
            _patient_stats(
                table, manifest, train_ids, test_ids, int(st_cfg.get("top_k", 5)),
                int(config.get("seed", 0)), artifacts,
            )
        except Exception as exc:
            raise _stage("stats", "patient level", exc) from exc

    # --- run manifest ---------------------------------------------------------------
    hashes = {
        str(p.relative_to(artifacts)): _sha256(p)
        for p in sorted(artifacts.rglob("*"))
        if p.is_file() and p.name != "run_manifest.json"
    }
    (artifacts / "run_manifest.json").write_text(
        json.dumps(
            {
                "schema": "run-manifest/1",
                "version": __version__,
                "config": config,
                "artifacts": hashes,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    return artifacts


def _patient_stats(
    table: FeatureTable,
    manifest: CohortManifest,
    train_ids: set[str],
    test_ids: set[str],
    top_k: int,
    seed: int,
    artifacts: Path,
) -> None:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # slice counts differ from 168 at desk scale
        patient_table = aggregate_patient(table, manifest)
    labels_by_pid = manifest.labels()
    is_train = np.array([p in train_ids for p in patient_table.patient_ids])
    train_tab = patient_table.rows(is_train)
    test_tab = patient_table.rows(~is_train)
    y_train = np.array([labels_by_pid[p] for p in train_tab.patient_ids])
    y_test = np.array([labels_by_pid[p] for p in test_tab.patient_ids])
    selection = fit_selection(
        train_tab,
        y_train,
        list(train_tab.patient_ids),
        SelectionConfig(top_k=top_k, cv_points=30, seed=seed),
    )
    X_train = apply_minmax(selection, train_tab).subset(selection.selected).values
    X_test = apply_minmax(selection, test_tab).subset(selection.selected).values
    inference = logistic_inference(X_train, y_train, names=selection.selected)
    rows = [
        [v.name, v.beta, v.odds_ratio, v.ci_low, v.ci_high, v.p_value, v.vif,
         int(v.significant)]
        for v in inference.variables
    ]
    _write_csv(
        artifacts / "inference.csv",
        ["feature", "beta", "odds_ratio", "ci_low", "ci_high", "p_value", "vif",
         "significant"],
        rows,
    )
    train_probs = inference.fitted_probs
    curve = roc_auroc(y_train, train_probs)
    threshold = youden_threshold(curve)
    test_probs = inference.predict_proba(X_test)
    test_curve = roc_auroc(y_test, test_probs)
    metrics = classification_metrics(y_test, (test_probs >= threshold).astype(int))
    hl = inference.hosmer_lemeshow
    summary = {
        "youden_threshold": float(threshold),
        "test_auroc": test_curve.auroc,
        "test_metrics": metrics,
        "hosmer_lemeshow": None
        if hl is None
        else {"statistic": hl.statistic, "dof": hl.dof, "p_value": hl.p_value},
        "log_likelihood": inference.log_likelihood,
    }
    (artifacts / "patient_stats.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )


# re-exported for the CLI
__all__ = [
    "DEFAULT_CONFIG",
    "merge_config",
    "run_pipeline",
    "hosmer_lemeshow",
    "write_hu_image",
    "write_label_map",
]
