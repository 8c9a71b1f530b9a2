"""Operations behind the service endpoints, shared with the CLI."""
from __future__ import annotations

import csv
import json
from pathlib import Path

from .. import bandsel as bandsel_mod
from .. import evaluate as evaluate_mod
from .. import learn, pipeline
from ..dataio import load_recording
from ..errors import DataError
from ..features import build_dataset, load_dataset_csv, save_dataset_csv
from ..model import MONTAGE, validate_recording
from . import schemas


def synth(req: schemas.SynthRequest) -> schemas.SynthResponse:
    cfg = pipeline.RunConfig(
        subjects=req.subjects, profile=req.profile, seed=req.seed,
        base_noise=req.base_noise, out_dir=req.out_dir,
    )
    pairs = pipeline.synth_pairs(cfg)
    manifests = pipeline.write_pairs(pairs, req.out_dir)
    return schemas.SynthResponse(manifests=manifests)


def validate(req: schemas.ValidateRequest) -> schemas.ValidateResponse:
    report = validate_recording(load_recording(req.manifest))
    return schemas.ValidateResponse(ok=report.ok, problems=report.problems)


def bandselect(req: schemas.BandselectRequest) -> schemas.BandselectResponse:
    cfg = pipeline.RunConfig(
        manifests_2d=req.manifests_2d, manifests_3d=req.manifests_3d,
        sel_window=req.window, sel_hop=req.hop,
        band_threshold=req.threshold, n_dominant=req.n_select,
        out_dir=req.out_dir or "runs/bandselect",
    )
    pairs = pipeline.load_pairs(cfg)
    selection = pipeline.run_bandselect(cfg, pairs)
    files: list[str] = []
    if req.dump_spectrograms is not None:
        sel_cfg = cfg.selection_config()
        for rec2d, rec3d in pairs:
            for rec in (rec2d, rec3d):
                files += [str(p) for p in
                          bandsel_mod.dump_spectrograms(rec, req.dump_spectrograms, sel_cfg)]
    if req.out_dir is not None:
        out = Path(req.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        diff_csv = out / "band_diff.csv"
        with diff_csv.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["channel", *selection["band_labels"]])
            for ch, row in zip(selection["channels"], selection["matrix"]):
                writer.writerow([ch, *(f"{v:.6f}" for v in row)])
        sel_json = out / "selection.json"
        sel_json.write_text(json.dumps(
            {"bands": selection["bands"], "counts": selection["counts"],
             "threshold": selection["threshold"]},
            indent=2, sort_keys=True) + "\n")
        files += [str(diff_csv), str(sel_json)]
    return schemas.BandselectResponse(
        bands=selection["bands"], counts=selection["counts"],
        threshold=selection["threshold"], channels=selection["channels"],
        band_labels=selection["band_labels"], matrix=selection["matrix"],
        files=files,
    )


def features(req: schemas.FeaturesRequest) -> schemas.FeaturesResponse:
    cfg = pipeline.RunConfig(
        manifests_2d=req.manifests_2d, manifests_3d=req.manifests_3d,
        feat_window=req.window, feat_hop=req.hop,
        split_seed=req.split_seed, chronological_split=req.chronological,
        out_dir=req.out_dir,
    )
    pairs = pipeline.load_pairs(cfg)
    channels = tuple(req.channels) if req.channels else MONTAGE
    tables = evaluate_mod.build_subject_tables(pairs, tuple(req.bands), cfg.eval_config())
    out = Path(req.out_dir)
    datasets = []
    names: tuple[str, ...] = ()
    n_train = n_test = 0
    for st in tables:
        ds = build_dataset(st.table_2d, st.table_3d, channels,
                           split_seed=req.split_seed, chronological=req.chronological)
        base = out / st.table_2d.subject_id
        datasets.append({
            "train": str(save_dataset_csv(base.with_suffix(".train.csv"), ds.feature_names,
                                          ds.x_train, ds.y_train, ds.meta_train)),
            "test": str(save_dataset_csv(base.with_suffix(".test.csv"), ds.feature_names,
                                         ds.x_test, ds.y_test, ds.meta_test)),
        })
        names = ds.feature_names
        n_train, n_test = len(ds.y_train), len(ds.y_test)
    return schemas.FeaturesResponse(
        feature_names=list(names), n_train=n_train, n_test=n_test, datasets=datasets,
    )


def train(req: schemas.TrainRequest) -> schemas.TrainResponse:
    names, x, y = load_dataset_csv(req.dataset)
    cv = learn.CvConfig(
        k=req.k, seed=req.seed, c_grid=tuple(req.c_grid),
        sigma_scales=tuple(req.sigma_scales), max_components=req.max_components,
    )
    selection = learn.kfold_select(x, y, cv, req.classifier)
    model = learn.fit_kind(req.classifier, x, y, selection.best)
    model_path = None
    if req.model_out:
        train_config = {"dataset": req.dataset, "classifier": req.classifier,
                        "k": req.k, "seed": req.seed, "best": selection.best,
                        "feature_names": list(names)}
        model_path = str(learn.save_model(model, req.model_out, train_config))
    table = [{**params, "cv_accuracy": acc} for params, acc in selection.table]
    return schemas.TrainResponse(
        classifier=req.classifier, best=selection.best,
        cv_accuracy=selection.cv_accuracy, table=table, model_path=model_path,
    )


def evaluate(req: schemas.EvaluateRequest) -> schemas.EvaluateResponse:
    cfg = req.config
    pairs = pipeline.load_pairs(cfg)
    selection = pipeline.run_bandselect(cfg, pairs)
    report = pipeline.run_evaluate(cfg, pairs, tuple(selection["bands"]))
    payload = pipeline.summary_payload(cfg, selection, report)
    payload["reports"] = list(pipeline.REPORT_FILES)
    pipeline.write_reports(cfg.out_dir, payload)
    return schemas.EvaluateResponse(summary=payload)


def run(req: schemas.RunRequest) -> schemas.RunResponse:
    payload = pipeline.run_all(req.config)
    reports = [str(Path(req.config.out_dir) / name) for name in payload["reports"]]
    return schemas.RunResponse(summary=payload, reports=reports)


def report(summary_path: str, out_dir: str) -> list[str]:
    """Regenerate the CSV bundle from an existing summary.json."""
    try:
        payload = json.loads(Path(summary_path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read summary {summary_path}: {exc}") from exc
    if "selection" not in payload:
        raise DataError(f"{summary_path} is not a run summary (no selection)")
    payload["reports"] = list(pipeline.REPORT_FILES)
    return pipeline.write_reports(out_dir, payload)
