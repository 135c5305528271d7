"""Command-line front end.

Subcommands: preprocess, seg-eval, postprocess, soft-tissue, extract,
select, train, evaluate, stats, phantom, run.
Exit codes: 0 success, 2 config error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .classifiers import ClassifierSpec, fit_classifier, grid_search_cv
from .classifiers.models import FittedClassifier
from .errors import ConfigError, DataError, PipelineError
from .features import extract_all
from .io import (
    load_feature_table,
    load_hu_image,
    load_label_map,
    load_manifest,
    write_feature_table,
    write_hu_image,
    write_label_map,
    FeatureTable,
)
from .phantom import CohortParams, PhantomParams, generate_cohort
from .pipeline import BAND_REGIONS, merge_config, run_pipeline, _region_mask, _write_csv
from .postprocess import postprocess_pipeline
from .preprocess import (
    center_crop,
    clip_intensity,
    downsample_bicubic,
    normalize_intensity,
)
from .seg_objectives import eval_segmentation
from .selection import SelectionConfig, SelectionModel, apply_minmax, fit_selection
from .soft_tissue import SoftTissueParams, segment_soft_tissue
from .stats import (
    classification_metrics,
    logistic_inference,
    roc_auroc,
    youden_threshold,
)
from .types import CLASS_NAMES


def _load_split(path: str) -> tuple[set[str], set[str]]:
    doc = json.loads(Path(path).read_text())
    return set(doc["train"]), set(doc["test"])


def _split_tables(table, manifest, split_path):
    train_ids, test_ids = _load_split(split_path)
    labels = manifest.labels()
    is_train = np.array([p in train_ids for p in table.patient_ids])
    is_test = np.array([p in test_ids for p in table.patient_ids])
    train_tab = table.rows(is_train)
    test_tab = table.rows(is_test)
    y_train = np.array([labels[p] for p in train_tab.patient_ids])
    y_test = np.array([labels[p] for p in test_tab.patient_ids])
    return train_tab, test_tab, y_train, y_test


def cmd_phantom(args) -> None:
    base = PhantomParams(
        side=args.side,
        voxel_size_um=args.voxel,
        noise_sigma_hu=args.noise,
    )
    cohort = CohortParams(
        n_patients=args.patients,
        slices_per_patient=args.slices,
        effect_size=args.effect,
        seed=args.seed,
        base_params=base,
    )
    manifest = generate_cohort(args.out, cohort)
    print(manifest)


def cmd_preprocess(args) -> None:
    img = load_hu_image(args.image)
    if args.crop:
        img = center_crop(img, args.crop)
    img = clip_intensity(img, args.clip_lo, args.clip_hi)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(args.image).name[: -len(".raw")]
    write_hu_image(img, out_dir / f"{stem}.clipped.raw")
    norm = normalize_intensity(img, mode=args.normalization)
    if args.factor > 1:
        norm = downsample_bicubic(norm, args.factor)
    # normalized float64 raster with the usual sidecar, for the (external)
    # network stage
    norm_path = out_dir / f"{stem}.norm.raw"
    norm_path.write_bytes(norm.data.astype("<f8").tobytes())
    norm_path.with_name(f"{stem}.norm.meta.json").write_text(
        json.dumps(
            {"width": norm.width, "height": norm.height,
             "voxel_size_um": norm.voxel_size_um, "dtype": "<f8"},
            sort_keys=True,
        )
        + "\n"
    )
    print(out_dir)


def cmd_seg_eval(args) -> None:
    pred = load_label_map(args.pred)
    truth = load_label_map(args.truth)
    metrics = eval_segmentation(pred, truth)
    rows = [
        [CLASS_NAMES.get(c, str(c)), m.precision, m.recall, m.f1, m.iou]
        for c, m in sorted(metrics.items())
    ]
    _write_csv(Path(args.out), ["class", "precision", "recall", "f1", "iou"], rows)
    print(args.out)


def cmd_postprocess(args) -> None:
    mask = load_label_map(args.mask)
    cleaned, report = postprocess_pipeline(mask, tau=args.tau, slice_id=args.mask)
    write_label_map(cleaned, args.out)
    if args.qc:
        Path(args.qc).write_text(
            json.dumps(
                {
                    "components_removed": report.components_removed,
                    "fragments_relabeled": report.fragments_relabeled,
                    "continuity_ratio": report.continuity_ratio,
                    "closing_radius": report.closing_radius,
                    "warnings": report.warnings,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
    print(args.out)


def cmd_soft_tissue(args) -> None:
    img = load_hu_image(args.image)
    mask = load_label_map(args.mask)
    params = SoftTissueParams(
        skin_band_mm=args.skin_band_mm,
        myo_seed_range=(args.myo_lo, args.myo_hi),
        adipose_seed_range=(args.adipose_lo, args.adipose_hi),
        min_seed_px=args.min_seed_px,
        dilation_iters=args.iters,
        resolve_threshold=args.resolve_threshold,
    )
    refined, report = segment_soft_tissue(img, mask, params)
    write_label_map(refined, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps(
                {
                    "areas_mm2": report.areas_mm2,
                    "seed_px": report.seed_px,
                    "contested_px": report.contested_px,
                    "unassigned_px": report.unassigned_px,
                },
                indent=2,
                sort_keys=True,
            )
            + "\n"
        )
    print(args.out)


def cmd_extract(args) -> None:
    manifest = load_manifest(args.manifest)
    regions = args.regions.split(",")
    names = None
    pids, sidx, regs, rows = [], [], [], []
    for patient in manifest.patients:
        for s, ref in enumerate(patient.slices):
            if ref.mask is None:
                raise DataError(f"slice {patient.patient_id}:{s} has no mask")
            img = clip_intensity(load_hu_image(manifest.resolve(ref.image)))
            mask = load_label_map(manifest.resolve(ref.mask))
            for region in regions:
                rmask = _region_mask(mask, region)
                feats = extract_all(img, rmask, bins=args.bins, bin_policy=args.bin_policy)
                if names is None:
                    names = list(feats.keys())
                pids.append(patient.patient_id)
                sidx.append(s)
                regs.append(region)
                rows.append([feats[n] for n in names])
    table = FeatureTable(
        patient_ids=pids, slice_indices=sidx, regions=regs, names=names or [],
        values=np.asarray(rows, dtype=np.float64).reshape(len(pids), len(names or [])),
    )
    write_feature_table(table, args.out)
    print(args.out)


def cmd_select(args) -> None:
    table = load_feature_table(args.features)
    manifest = load_manifest(args.manifest, check_files=False)
    train_tab, _, y_train, _ = _split_tables(table, manifest, args.split)
    lam = args.lam
    if lam != "auto":
        lam = float(lam)
    model = fit_selection(
        train_tab,
        y_train,
        list(train_tab.patient_ids),
        SelectionConfig(
            variance_threshold=args.variance_threshold,
            r_max=args.r_max,
            lasso_lambda=lam,
            top_k=args.top_k,
            seed=args.seed,
        ),
    )
    model.save(args.out)
    print(args.out)


def cmd_train(args) -> None:
    table = load_feature_table(args.features)
    manifest = load_manifest(args.manifest, check_files=False)
    selection = SelectionModel.load(args.selection)
    train_tab, _, y_train, _ = _split_tables(table, manifest, args.split)
    X = apply_minmax(selection, train_tab).subset(selection.selected).values
    grid = json.loads(args.grid) if args.grid else {}
    spec = ClassifierSpec(family=args.model, grid=grid, seed=args.seed)
    search = grid_search_cv(
        spec, X, y_train, list(train_tab.patient_ids), folds=args.folds
    )
    model = fit_classifier(
        spec.family, search.best_params, X, y_train,
        seed=args.seed, feature_names=selection.selected,
    )
    model.save(args.out)
    print(args.out)


def cmd_evaluate(args) -> None:
    table = load_feature_table(args.features)
    manifest = load_manifest(args.manifest, check_files=False)
    selection = SelectionModel.load(args.selection)
    model = FittedClassifier.load(args.model)
    train_tab, test_tab, y_train, y_test = _split_tables(table, manifest, args.split)
    X_test = apply_minmax(selection, test_tab).subset(selection.selected).values
    probs = model.predict_proba(X_test, feature_names=selection.selected)
    curve = roc_auroc(y_test, probs)
    threshold = args.threshold
    if threshold == "youden_train":
        X_train = apply_minmax(selection, train_tab).subset(selection.selected).values
        train_curve = roc_auroc(
            y_train, model.predict_proba(X_train, feature_names=selection.selected)
        )
        threshold = youden_threshold(train_curve)
    threshold = float(threshold)
    metrics = classification_metrics(y_test, (probs >= threshold).astype(int))
    _write_csv(
        Path(args.out),
        ["model", "n_test", "accuracy", "sensitivity", "specificity", "f1", "auroc",
         "threshold"],
        [[model.family, len(y_test), metrics["accuracy"], metrics["sensitivity"],
          metrics["specificity"], metrics["f1"], curve.auroc, threshold]],
    )
    if args.roc:
        _write_csv(
            Path(args.roc),
            ["fpr", "tpr", "threshold"],
            [[float(f), float(t), float(th)]
             for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)],
        )
    print(args.out)


def cmd_stats(args) -> None:
    from .stats import aggregate_patient
    import warnings

    table = load_feature_table(args.features)
    manifest = load_manifest(args.manifest, check_files=False)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        patient_table = aggregate_patient(table, manifest)
    train_tab, _, y_train, _ = _split_tables(patient_table, manifest, args.split)
    selection = fit_selection(
        train_tab, y_train, list(train_tab.patient_ids),
        SelectionConfig(top_k=args.top_k, seed=args.seed),
    )
    X = apply_minmax(selection, train_tab).subset(selection.selected).values
    inference = logistic_inference(X, y_train, names=selection.selected)
    rows = [
        [v.name, v.beta, v.odds_ratio, v.ci_low, v.ci_high, v.p_value, v.vif,
         int(v.significant)]
        for v in inference.variables
    ]
    _write_csv(
        Path(args.out),
        ["feature", "beta", "odds_ratio", "ci_low", "ci_high", "p_value", "vif",
         "significant"],
        rows,
    )
    print(args.out)


def cmd_run(args) -> None:
    config = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise ConfigError(f"missing config: {path}")
        try:
            config = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"bad config JSON: {exc}") from exc
    for override in args.set or []:
        key, _, value = override.partition("=")
        if not _:
            raise ConfigError(f"--set expects key=value, got {override!r}")
        node = config
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
        node[parts[-1]] = json.loads(value)
    artifacts = run_pipeline(config, args.workdir)
    print(artifacts)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrpqct", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a synthetic cohort")
    p.add_argument("--out", required=True)
    p.add_argument("--patients", type=int, default=10)
    p.add_argument("--slices", type=int, default=4)
    p.add_argument("--effect", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--side", type=int, default=160)
    p.add_argument("--voxel", type=float, default=300.0)
    p.add_argument("--noise", type=float, default=25.0)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("preprocess", help="standardize one image")
    p.add_argument("--image", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--clip-lo", type=int, default=-4000)
    p.add_argument("--clip-hi", type=int, default=6000)
    p.add_argument("--crop", type=int, default=0)
    p.add_argument("--factor", type=int, default=2)
    p.add_argument("--normalization", choices=["per_image", "fixed_range"],
                   default="per_image")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("seg-eval", help="per-class segmentation metrics")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_seg_eval)

    p = sub.add_parser("postprocess", help="morphological cleanup of a mask")
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--qc")
    p.add_argument("--tau", type=float, default=0.90)
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("soft-tissue", help="subdivide the soft-tissue region")
    p.add_argument("--image", required=True)
    p.add_argument("--mask", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.add_argument("--skin-band-mm", type=float, default=2.0)
    p.add_argument("--myo-lo", type=float, default=100.0)
    p.add_argument("--myo-hi", type=float, default=600.0)
    p.add_argument("--adipose-lo", type=float, default=-600.0)
    p.add_argument("--adipose-hi", type=float, default=-200.0)
    p.add_argument("--min-seed-px", type=int, default=30)
    p.add_argument("--iters", type=int, default=20)
    p.add_argument("--resolve-threshold", type=float, default=-50.0)
    p.set_defaults(func=cmd_soft_tissue)

    p = sub.add_parser("extract", help="radiomics features for a cohort")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--regions", default="TT")
    p.add_argument("--bins", type=int, default=32)
    p.add_argument("--bin-policy", choices=["count", "width"], default="count")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="fit the three-stage feature selection")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--variance-threshold", type=float, default=0.02)
    p.add_argument("--r-max", type=float, default=0.9)
    p.add_argument("--lambda", dest="lam", default="auto")
    p.add_argument("--top-k", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("train", help="grid-search and fit a classifier")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", default="logistic_regression")
    p.add_argument("--grid", help="JSON hyperparameter grid")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="held-out metrics for a fitted model")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--roc")
    p.add_argument("--threshold", default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("stats", help="patient-level logistic inference")
    p.add_argument("--features", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("run", help="execute the configured pipeline")
    p.add_argument("--config")
    p.add_argument("--workdir", default="run")
    p.add_argument("--set", action="append", metavar="KEY=JSONVALUE")
    p.set_defaults(func=cmd_run)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
