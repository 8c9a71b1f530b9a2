"""Metrics, per-channel evaluation, channel ranking and combination search.

2D is the positive class. Channels are scored individually (tune on the
training partition by k-fold, fit, report test metrics), ranked by accuracy
above a floor, and the ranking's prefixes are re-evaluated as multi-channel
combinations.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import learn
from .errors import DataError
from .features import Dataset, EpochConfig, FeatureTable, build_dataset, build_feature_table
from .model import MONTAGE, Recording
from .parallel import thread_map

ACCURACY_FLOOR = 0.60
COMPROMISE_MARGIN = 0.02
CLASSIFIERS = ("plsr", "svm")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn


def confusion(pred: np.ndarray, truth: np.ndarray) -> ConfusionMatrix:
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"prediction/truth lengths differ: {pred.shape} vs {truth.shape}")
    if pred.size < 1:
        raise ValueError("empty prediction vector")
    return ConfusionMatrix(
        tp=int(np.sum((pred == 1) & (truth == 1))),
        tn=int(np.sum((pred == -1) & (truth == -1))),
        fp=int(np.sum((pred == 1) & (truth == -1))),
        fn=int(np.sum((pred == -1) & (truth == 1))),
    )


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    sensitivity: float | None
    specificity: float | None
    matrix: ConfusionMatrix


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, true-positive rate and true-negative rate.

    A rate with an empty denominator is reported as absent (None), never
    silently as 0 or 1.
    """
    if cm.total <= 0:
        raise ValueError("empty confusion matrix")
    sens = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) > 0 else None
    spec = cm.tn / (cm.tn + cm.fp) if (cm.tn + cm.fp) > 0 else None
    return Metrics(
        accuracy=(cm.tp + cm.tn) / cm.total,
        sensitivity=sens,
        specificity=spec,
        matrix=cm,
    )


def rank_channels(accuracy_by_channel: dict[str, float],
                  threshold: float = ACCURACY_FLOOR) -> list[str]:
    """Channels above the accuracy floor, best first, ties in montage order."""
    passing = [c for c in accuracy_by_channel if accuracy_by_channel[c] > threshold]
    return sorted(passing, key=lambda c: (-accuracy_by_channel[c], MONTAGE.index(c)))


@dataclass(frozen=True)
class EvalConfig:
    cv: learn.CvConfig = learn.CvConfig()
    epoch: EpochConfig = EpochConfig()
    split_seed: int = 20
    chronological_split: bool = False
    accuracy_floor: float = ACCURACY_FLOOR
    compromise_margin: float = COMPROMISE_MARGIN
    threads: int | None = None


@dataclass(frozen=True)
class ComboResult:
    size: int
    channels: tuple[str, ...]
    by_classifier: dict[str, Metrics]
    chosen_params: dict[str, dict]


@dataclass(frozen=True)
class ChannelReport:
    per_channel: dict[str, dict[str, Metrics]]          # channel -> classifier -> mean metrics
    ranked_channels: dict[str, list[str]]               # classifier -> ranking
    combo_results: dict[str, list[ComboResult]]         # ranking classifier -> prefix results
    compromise: dict[str, dict[str, int | None]]        # ranking -> classifier -> prefix size
    chosen_params: dict[str, dict[str, dict]]           # channel -> classifier -> params


def _mean_metrics(per_subject: list[Metrics]) -> Metrics:
    def mean_or_none(vals: list[float | None]) -> float | None:
        known = [v for v in vals if v is not None]
        return float(np.mean(known)) if known else None

    cm = ConfusionMatrix(
        tp=sum(m.matrix.tp for m in per_subject),
        tn=sum(m.matrix.tn for m in per_subject),
        fp=sum(m.matrix.fp for m in per_subject),
        fn=sum(m.matrix.fn for m in per_subject),
    )
    return Metrics(
        accuracy=float(np.mean([m.accuracy for m in per_subject])),
        sensitivity=mean_or_none([m.sensitivity for m in per_subject]),
        specificity=mean_or_none([m.specificity for m in per_subject]),
        matrix=cm,
    )


def evaluate_dataset(ds: Dataset, cfg: EvalConfig,
                     kinds: tuple[str, ...] = CLASSIFIERS) -> tuple[dict[str, Metrics], dict[str, dict]]:
    """Tune on the training partition, fit, and score the test partition."""
    result: dict[str, Metrics] = {}
    params: dict[str, dict] = {}
    for kind in kinds:
        selection = learn.kfold_select(ds.x_train, ds.y_train, cfg.cv, kind)
        model = learn.fit_kind(kind, ds.x_train, ds.y_train, selection.best)
        labels, _ = learn.predict(model, ds.x_test)
        result[kind] = metrics(confusion(labels, ds.y_test))
        params[kind] = selection.best
    return result, params


@dataclass(frozen=True)
class SubjectTables:
    """Per-subject feature tables for both conditions."""

    table_2d: FeatureTable
    table_3d: FeatureTable


def build_subject_tables(pairs: list[tuple[Recording, Recording]], bands: tuple[str, ...],
                         cfg: EvalConfig) -> list[SubjectTables]:
    tables = []
    for rec2d, rec3d in pairs:
        if rec2d.channels != rec3d.channels:
            raise DataError("paired recordings disagree on the montage")
        tables.append(SubjectTables(
            table_2d=build_feature_table(rec2d, bands, cfg.epoch, threads=cfg.threads),
            table_3d=build_feature_table(rec3d, bands, cfg.epoch, threads=cfg.threads),
        ))
    return tables


def _combo_eval(tables: list[SubjectTables], channels: tuple[str, ...],
                cfg: EvalConfig) -> tuple[dict[str, Metrics], dict[str, dict]]:
    """Evaluate one channel combination, averaging metrics across subjects."""
    per_subject: dict[str, list[Metrics]] = {k: [] for k in CLASSIFIERS}
    chosen: dict[str, dict] = {}
    for st in tables:
        ds = build_dataset(st.table_2d, st.table_3d, channels,
                           split_seed=cfg.split_seed,
                           chronological=cfg.chronological_split)
        result, params = evaluate_dataset(ds, cfg)
        for kind, m in result.items():
            per_subject[kind].append(m)
        chosen = params  # last subject's choice; reported per combination
    return {k: _mean_metrics(v) for k, v in per_subject.items()}, chosen


def per_channel_eval(tables: list[SubjectTables], cfg: EvalConfig) -> tuple[
        dict[str, dict[str, Metrics]], dict[str, dict[str, dict]]]:
    """Evaluate every montage channel individually."""
    def one(channel: str):
        return _combo_eval(tables, (channel,), cfg)

    rows = thread_map(one, MONTAGE, threads=cfg.threads)
    table = {ch: row[0] for ch, row in zip(MONTAGE, rows)}
    params = {ch: row[1] for ch, row in zip(MONTAGE, rows)}
    return table, params


def combo_search(ranked: list[str], tables: list[SubjectTables],
                 cfg: EvalConfig) -> tuple[list[ComboResult], dict[str, int | None]]:
    """Evaluate every prefix of a channel ranking.

    Also reports, per classifier, the compromise prefix: the smallest size
    whose accuracy is within the margin of the best prefix accuracy.
    """
    if not ranked:
        raise ValueError("empty channel ranking")

    def one(size: int) -> ComboResult:
        channels = tuple(ranked[:size])
        by_classifier, params = _combo_eval(tables, channels, cfg)
        return ComboResult(size=size, channels=channels,
                           by_classifier=by_classifier, chosen_params=params)

    results = thread_map(one, range(1, len(ranked) + 1), threads=cfg.threads)
    compromise: dict[str, int | None] = {}
    for kind in CLASSIFIERS:
        accs = [r.by_classifier[kind].accuracy for r in results]
        best = max(accs)
        compromise[kind] = next(
            (r.size for r, a in zip(results, accs) if a >= best - cfg.compromise_margin),
            None,
        )
    return results, compromise


def full_channel_report(tables: list[SubjectTables], cfg: EvalConfig) -> ChannelReport:
    """Per-channel metrics, per-classifier rankings, and prefix combinations."""
    per_channel, chosen = per_channel_eval(tables, cfg)
    ranked = {
        kind: rank_channels({ch: per_channel[ch][kind].accuracy for ch in MONTAGE},
                            cfg.accuracy_floor)
        for kind in CLASSIFIERS
    }
    combos: dict[str, list[ComboResult]] = {}
    compromises: dict[str, dict[str, int | None]] = {}
    for kind, ranking in ranked.items():
        if ranking:
            combos[kind], compromises[kind] = combo_search(ranking, tables, cfg)
        else:
            combos[kind], compromises[kind] = [], {k: None for k in CLASSIFIERS}
    return ChannelReport(
        per_channel=per_channel,
        ranked_channels=ranked,
        combo_results=combos,
        compromise=compromises,
        chosen_params=chosen,
    )
