"""Run configuration and end-to-end orchestration.

Every stage is a plain function over a RunConfig so the CLI and the HTTP
service execute identical code. A full run writes a report bundle:
band_diff.csv, channel_accuracy.csv, combo_plsr.csv, combo_svm.csv,
sens_spec.csv and summary.json (the summary embeds the RunConfig and all
results, enough to replay the run or regenerate the CSVs).
"""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, Field

from . import bandsel, evaluate, learn, synth
from .dataio import load_recording, save_recording
from .errors import DataError
from .features import EpochConfig, build_dataset, save_dataset_csv
from .model import MONTAGE, Condition, Recording, validate_recording
from .parallel import default_threads

REPORT_FILES = (
    "band_diff.csv",
    "channel_accuracy.csv",
    "combo_plsr.csv",
    "combo_svm.csv",
    "sens_spec.csv",
    "summary.json",
)


class RunConfig(BaseModel):
    """Reproducible description of a pipeline run."""

    # input: either synthetic generation or manifests on disk
    subjects: list[str] = ["s01"]
    profile: Literal["paper", "flat"] = "paper"
    seed: int = 7
    base_noise: float = 4.0
    manifests_2d: list[str] | None = None
    manifests_3d: list[str] | None = None
    write_trials: bool = True

    # band-selection phase
    sel_window: int = 512
    sel_hop: int = Field(default=1, ge=1)
    band_threshold: float = 2.0
    n_dominant: int = 2

    # epoch/feature phase
    epoch_window_s: float = 4.0
    epoch_overlap_s: float = 3.5
    feat_window: int = 512
    feat_hop: int = Field(default=1, ge=1)
    split_seed: int = 20
    chronological_split: bool = False

    # model selection
    cv_k: int = Field(default=10, ge=2)
    cv_seed: int = 5
    c_grid: list[float] = [0.1, 1.0, 10.0, 100.0]
    sigma_scales: list[float] = [0.25, 0.5, 1.0, 2.0, 4.0]
    max_components: int = 8

    # channel selection
    accuracy_floor: float = 0.60
    compromise_margin: float = 0.02

    threads: int | None = None
    out_dir: str = "runs/out"

    def epoch_config(self) -> EpochConfig:
        return EpochConfig(
            window_s=self.epoch_window_s,
            overlap_s=self.epoch_overlap_s,
            window_len=self.feat_window,
            hop=self.feat_hop,
        )

    def selection_config(self) -> bandsel.SelectionConfig:
        return bandsel.SelectionConfig(window_len=self.sel_window, hop=self.sel_hop)

    def cv_config(self) -> learn.CvConfig:
        return learn.CvConfig(
            k=self.cv_k,
            sigma_scales=tuple(self.sigma_scales),
            c_grid=tuple(self.c_grid),
            max_components=self.max_components,
            seed=self.cv_seed,
        )

    def eval_config(self) -> evaluate.EvalConfig:
        return evaluate.EvalConfig(
            cv=self.cv_config(),
            epoch=self.epoch_config(),
            split_seed=self.split_seed,
            chronological_split=self.chronological_split,
            accuracy_floor=self.accuracy_floor,
            compromise_margin=self.compromise_margin,
            threads=self.effective_threads(),
        )

    def effective_threads(self) -> int:
        return self.threads if self.threads is not None else default_threads()


def effect_spec(cfg: RunConfig) -> synth.EffectSpec:
    if cfg.profile == "paper":
        profile = synth.default_effect_profile(seed=cfg.seed)
        return synth.EffectSpec(
            seed=cfg.seed, base_noise=cfg.base_noise,
            trial_noise=profile.trial_noise,
            gains_2d=profile.gains_2d, gains_3d=profile.gains_3d,
        )
    return synth.EffectSpec(seed=cfg.seed, base_noise=cfg.base_noise)


def synth_pairs(cfg: RunConfig) -> list[tuple[Recording, Recording]]:
    spec = effect_spec(cfg)
    return [synth.generate_pair(spec, subject) for subject in cfg.subjects]


def write_pairs(pairs: list[tuple[Recording, Recording]], out_dir: str | Path) -> dict[str, dict[str, str]]:
    out_dir = Path(out_dir)
    manifests: dict[str, dict[str, str]] = {}
    for rec2d, rec3d in pairs:
        paths = {}
        for rec in (rec2d, rec3d):
            tag = "2d" if rec.condition is Condition.TWO_D else "3d"
            path = out_dir / "recordings" / f"{rec.subject_id}_{tag}.json"
            save_recording(rec, path)
            paths[tag] = str(path)
        manifests[rec2d.subject_id] = paths
    return manifests


def load_pairs(cfg: RunConfig) -> list[tuple[Recording, Recording]]:
    """Recordings from manifests when given, otherwise synthesized."""
    if (cfg.manifests_2d is None) != (cfg.manifests_3d is None):
        raise DataError("manifests_2d and manifests_3d must be given together")
    if cfg.manifests_2d is None:
        return synth_pairs(cfg)
    if len(cfg.manifests_2d) != len(cfg.manifests_3d):
        raise DataError("need one 3D manifest per 2D manifest")
    pairs = []
    for p2, p3 in zip(cfg.manifests_2d, cfg.manifests_3d):
        rec2d, rec3d = load_recording(p2), load_recording(p3)
        for rec, path in ((rec2d, p2), (rec3d, p3)):
            report = validate_recording(rec)
            if not report.ok:
                raise DataError(f"invalid recording {path}: " + "; ".join(report.problems))
        if rec2d.condition is not Condition.TWO_D:
            raise DataError(f"{p2} is not a 2D recording")
        if rec3d.condition is not Condition.THREE_D:
            raise DataError(f"{p3} is not a 3D recording")
        pairs.append((rec2d, rec3d))
    return pairs


def run_bandselect(cfg: RunConfig, pairs: list[tuple[Recording, Recording]]) -> dict:
    sel_cfg = cfg.selection_config()
    threads = cfg.effective_threads()
    diffs = []
    for rec2d, rec3d in pairs:
        m2d = bandsel.condition_band_matrix(rec2d, sel_cfg, threads=threads)
        m3d = bandsel.condition_band_matrix(rec3d, sel_cfg, threads=threads)
        diffs.append(bandsel.diff_matrix(m2d, m3d, rec2d.channels))
    combined = bandsel.average_diff_matrices(diffs)
    dominant = bandsel.select_dominant_bands(combined, cfg.band_threshold, cfg.n_dominant)
    return {
        "channels": list(combined.channels),
        "band_labels": list(combined.scheme.labels),
        "matrix": combined.values.tolist(),
        "bands": list(dominant.bands),
        "counts": dominant.channel_counts,
        "threshold": dominant.threshold,
    }


def run_evaluate(cfg: RunConfig, pairs: list[tuple[Recording, Recording]],
                 bands: tuple[str, ...]) -> evaluate.ChannelReport:
    eval_cfg = cfg.eval_config()
    tables = evaluate.build_subject_tables(pairs, bands, eval_cfg)
    return evaluate.full_channel_report(tables, eval_cfg)


def _metrics_row(m: evaluate.Metrics) -> list[str]:
    def fmt(v: float | None) -> str:
        return "" if v is None else f"{v:.6f}"

    return [fmt(m.accuracy), fmt(m.sensitivity), fmt(m.specificity)]


def _metrics_to_dict(m: evaluate.Metrics) -> dict:
    return {
        "accuracy": m.accuracy,
        "sensitivity": m.sensitivity,
        "specificity": m.specificity,
        "confusion": {"tp": m.matrix.tp, "tn": m.matrix.tn,
                      "fp": m.matrix.fp, "fn": m.matrix.fn},
    }


def _metrics_from_dict(d: dict) -> evaluate.Metrics:
    cm = evaluate.ConfusionMatrix(**d["confusion"])
    return evaluate.Metrics(accuracy=d["accuracy"], sensitivity=d["sensitivity"],
                            specificity=d["specificity"], matrix=cm)


def summary_payload(cfg: RunConfig, selection: dict,
                    report: evaluate.ChannelReport | None) -> dict:
    # The thread count cannot change any result, so it is not part of the
    # run's identity; leaving it out keeps bundles byte-identical across
    # worker-pool sizes.
    payload: dict = {"config": cfg.model_dump(exclude={"threads"}), "selection": selection}
    if report is not None:
        payload["per_channel"] = {
            ch: {kind: _metrics_to_dict(m) for kind, m in by_kind.items()}
            for ch, by_kind in report.per_channel.items()
        }
        payload["ranked_channels"] = report.ranked_channels
        payload["combos"] = {
            ranking: [
                {
                    "size": r.size,
                    "channels": list(r.channels),
                    "metrics": {k: _metrics_to_dict(m) for k, m in r.by_classifier.items()},
                    "params": r.chosen_params,
                }
                for r in results
            ]
            for ranking, results in report.combo_results.items()
        }
        payload["compromise"] = report.compromise
        payload["chosen_params"] = report.chosen_params
    return payload


def write_reports(out_dir: str | Path, payload: dict) -> list[str]:
    """Emit the CSV bundle + summary.json from a summary payload."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []

    selection = payload["selection"]
    path = out_dir / "band_diff.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["channel", *selection["band_labels"]])
        for ch, row in zip(selection["channels"], selection["matrix"]):
            writer.writerow([ch, *(f"{v:.6f}" for v in row)])
    written.append(str(path))

    per_channel = payload.get("per_channel", {})
    path = out_dir / "channel_accuracy.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["channel"]
        for kind in evaluate.CLASSIFIERS:
            header += [f"{kind}_accuracy", f"{kind}_sensitivity", f"{kind}_specificity"]
        writer.writerow(header)
        # Montage row order regardless of how the payload dict is ordered.
        for ch in sorted(per_channel, key=MONTAGE.index):
            row = [ch]
            for kind in evaluate.CLASSIFIERS:
                row += _metrics_row(_metrics_from_dict(per_channel[ch][kind]))
            writer.writerow(row)
    written.append(str(path))

    combos = payload.get("combos", {})
    for ranking in evaluate.CLASSIFIERS:
        path = out_dir / f"combo_{ranking}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["prefix_size", "channels", "classifier",
                             "accuracy", "sensitivity", "specificity"])
            for entry in combos.get(ranking, []):
                for kind in evaluate.CLASSIFIERS:
                    m = _metrics_from_dict(entry["metrics"][kind])
                    writer.writerow([entry["size"], "+".join(entry["channels"]),
                                     kind, *_metrics_row(m)])
        written.append(str(path))

    path = out_dir / "sens_spec.csv"
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["prefix_size", "channels",
                         "plsr_sensitivity", "plsr_specificity",
                         "svm_sensitivity", "svm_specificity"])
        for entry in combos.get("svm", []):
            row = [entry["size"], "+".join(entry["channels"])]
            for kind in evaluate.CLASSIFIERS:
                m = _metrics_from_dict(entry["metrics"][kind])
                row += _metrics_row(m)[1:]
            writer.writerow(row)
    written.append(str(path))

    path = out_dir / "summary.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    written.append(str(path))
    return written


def run_all(cfg: RunConfig) -> dict:
    """synth-or-load -> band selection -> features -> train -> evaluate -> report.

    File references inside summary.json are relative to the output
    directory, so a bundle compares and relocates cleanly.
    """
    out_dir = Path(cfg.out_dir)
    pairs = load_pairs(cfg)
    manifests = None
    if cfg.manifests_2d is None and cfg.write_trials:
        absolute = write_pairs(pairs, out_dir)
        manifests = {
            subject: {tag: str(Path(p).relative_to(out_dir)) for tag, p in paths.items()}
            for subject, paths in absolute.items()
        }

    selection = run_bandselect(cfg, pairs)
    bands = tuple(selection["bands"])

    tables = evaluate.build_subject_tables(pairs, bands, cfg.eval_config())
    dataset_files = []
    for st in tables:
        ds = build_dataset(st.table_2d, st.table_3d, MONTAGE,
                           split_seed=cfg.split_seed,
                           chronological=cfg.chronological_split)
        base = out_dir / "datasets" / st.table_2d.subject_id
        train = save_dataset_csv(base.with_suffix(".train.csv"), ds.feature_names,
                                 ds.x_train, ds.y_train, ds.meta_train)
        test = save_dataset_csv(base.with_suffix(".test.csv"), ds.feature_names,
                                ds.x_test, ds.y_test, ds.meta_test)
        dataset_files.append({
            "train": str(train.relative_to(out_dir)),
            "test": str(test.relative_to(out_dir)),
        })

    report = evaluate.full_channel_report(tables, cfg.eval_config())
    payload = summary_payload(cfg, selection, report)
    if manifests is not None:
        payload["recordings"] = manifests
    payload["datasets"] = dataset_files
    payload["reports"] = list(REPORT_FILES)
    write_reports(out_dir, payload)
    return payload
