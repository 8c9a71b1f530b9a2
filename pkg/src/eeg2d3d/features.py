"""Epoch extraction and band-power feature vectors.

Trials are filtered once (notch + 1-35 Hz band-pass), cut into 4 s epochs
every 0.5 s, and each epoch yields one normalized band-power percentage per
dominant band per channel, computed against the 1-30 Hz total.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dsp
from .errors import DataError
from .model import EPOCH_SCHEME, BandScheme, Condition, Recording, channel_index
from .parallel import thread_map


@dataclass(frozen=True)
class EpochConfig:
    """Preprocessing, epoching and spectral parameters for the epoch phase."""

    notch_hz: float = 50.0
    notch_bandwidth: float = 2.0
    bandpass: tuple[float, float] = (1.0, 35.0)
    order: int = 3
    window_s: float = 4.0
    overlap_s: float = 3.5
    window_len: int = 512
    hop: int = 1

    def window_samples(self, fs: float) -> int:
        return int(round(self.window_s * fs))

    def stride_samples(self, fs: float) -> int:
        stride = int(round((self.window_s - self.overlap_s) * fs))
        if stride < 1:
            raise ValueError(f"overlap {self.overlap_s} s leaves no stride at fs={fs}")
        return stride


@dataclass(frozen=True)
class Epoch:
    subject_id: str
    condition: Condition
    trial_index: int
    epoch_index: int
    samples: np.ndarray = field(repr=False)  # (n_channels, window_samples)


def epochize(trial: np.ndarray, fs: float, window_s: float = 4.0,
             overlap_s: float = 3.5) -> list[np.ndarray]:
    """Slice a (channels, samples) trial into overlapping windows.

    Epoch i starts at sample i * stride with stride = window - overlap;
    a trial of length L yields floor((L - window) / stride) + 1 epochs.
    """
    trial = np.asarray(trial)
    win = int(round(window_s * fs))
    stride = int(round((window_s - overlap_s) * fs))
    if stride < 1:
        raise ValueError(f"overlap {overlap_s} s leaves no stride")
    if trial.shape[-1] < win:
        raise ValueError(f"trial shorter than the epoch window: {trial.shape[-1]} < {win}")
    count = (trial.shape[-1] - win) // stride + 1
    return [trial[..., i * stride:i * stride + win] for i in range(count)]


def preprocess_epoch_phase(trial: np.ndarray, fs: float,
                           cfg: EpochConfig = EpochConfig()) -> np.ndarray:
    """Notch + zero-phase band-pass applied to the full trial before epoching."""
    notch = dsp.design_notch(cfg.notch_hz, fs, cfg.notch_bandwidth)
    band = dsp.design_butter_bandpass(cfg.order, *cfg.bandpass, fs=fs)
    return dsp.filtfilt(band, dsp.filtfilt(notch, trial))


def epochs_from_recording(rec: Recording, cfg: EpochConfig = EpochConfig()) -> list[Epoch]:
    """Preprocess every trial and cut it into labeled epochs."""
    epochs = []
    for t in range(rec.n_trials):
        filtered = preprocess_epoch_phase(rec.trials[t], rec.fs, cfg)
        for e, samples in enumerate(epochize(filtered, rec.fs, cfg.window_s, cfg.overlap_s)):
            epochs.append(Epoch(subject_id=rec.subject_id, condition=rec.condition,
                                trial_index=t, epoch_index=e, samples=samples))
    return epochs


def extract_features(epoch_samples: np.ndarray, fs: float, bands: tuple[str, ...],
                     scheme: BandScheme = EPOCH_SCHEME, window_len: int = 512,
                     hop: int = 1) -> np.ndarray:
    """Normalized band-power percentages for the requested bands.

    Returns (band features per channel, concatenated in channel order):
    channel 0's bands first, then channel 1's, and so on.
    """
    epoch_samples = np.atleast_2d(np.asarray(epoch_samples, dtype=np.float64))
    band_idx = [scheme.labels.index(b) for b in bands]
    rows = []
    for ch in epoch_samples:
        psd = dsp.psd_from_stft(dsp.stft(ch, fs, window_len, hop))
        rows.append(dsp.normalized_band_powers(psd, scheme)[band_idx])
    return np.concatenate(rows)


@dataclass(frozen=True)
class FeatureTable:
    """Band percentages of every epoch for every montage channel.

    ``values`` is (n_epochs, n_channels, n_bands); slicing out a channel
    subset gives the feature matrix for that combination without
    recomputing any spectra.
    """

    subject_id: str
    condition: Condition
    bands: tuple[str, ...]
    values: np.ndarray = field(repr=False)
    trial_index: np.ndarray = field(repr=False)
    epoch_index: np.ndarray = field(repr=False)

    def matrix(self, channels: tuple[str, ...]) -> np.ndarray:
        """(n_epochs, len(channels) * len(bands)), channel-major feature order."""
        cols = [channel_index(c) for c in channels]
        picked = self.values[:, cols, :]  # (epochs, channels, bands)
        return picked.reshape(picked.shape[0], -1)


def _epoch_band_shares(filtered: np.ndarray, fs: float, bands: tuple[str, ...],
                       scheme: BandScheme, cfg: EpochConfig) -> np.ndarray:
    """Band shares of every (epoch, channel) of one filtered trial.

    When the epoch stride is a multiple of the STFT hop, all epoch frames
    are frames of the whole trial, so the spectrogram is computed once per
    channel and epochs average slices of it. Both paths window identical
    segments and are bit-identical.
    """
    win = cfg.window_samples(fs)
    stride = cfg.stride_samples(fs)
    if win < cfg.window_len:
        raise ValueError(f"epoch window {win} shorter than STFT window {cfg.window_len}")
    n_epochs = (filtered.shape[-1] - win) // stride + 1
    band_idx = [scheme.labels.index(b) for b in bands]
    frames_per_epoch = (win - cfg.window_len) // cfg.hop + 1
    out = np.empty((n_epochs, filtered.shape[0], len(band_idx)))
    shareable = stride % cfg.hop == 0
    for c in range(filtered.shape[0]):
        if shareable:
            spec = dsp.stft(filtered[c], fs, cfg.window_len, cfg.hop)
            for e in range(n_epochs):
                first = e * stride // cfg.hop
                psd = dsp.Psd(
                    power=spec.frames[first:first + frames_per_epoch].mean(axis=0),
                    freq_axis=spec.freq_axis,
                )
                out[e, c] = dsp.normalized_band_powers(psd, scheme)[band_idx]
        else:
            for e in range(n_epochs):
                seg = filtered[c, e * stride:e * stride + win]
                psd = dsp.psd_from_stft(dsp.stft(seg, fs, cfg.window_len, cfg.hop))
                out[e, c] = dsp.normalized_band_powers(psd, scheme)[band_idx]
    return out


def build_feature_table(rec: Recording, bands: tuple[str, ...],
                        cfg: EpochConfig = EpochConfig(),
                        threads: int | None = None) -> FeatureTable:
    """Filter, epoch and featurize a whole recording (all montage channels)."""
    def one_trial(t: int) -> np.ndarray:
        filtered = preprocess_epoch_phase(rec.trials[t], rec.fs, cfg)
        return _epoch_band_shares(filtered, rec.fs, bands, EPOCH_SCHEME, cfg)

    per_trial = thread_map(one_trial, range(rec.n_trials), threads=threads)
    values = np.concatenate(per_trial)
    epochs_per_trial = per_trial[0].shape[0]
    trial_index = np.repeat(np.arange(rec.n_trials), epochs_per_trial)
    epoch_index = np.tile(np.arange(epochs_per_trial), rec.n_trials)
    return FeatureTable(
        subject_id=rec.subject_id,
        condition=rec.condition,
        bands=bands,
        values=values,
        trial_index=trial_index,
        epoch_index=epoch_index,
    )


@dataclass(frozen=True)
class Dataset:
    """Labeled feature vectors with a per-class train/test partition."""

    feature_names: tuple[str, ...]
    x_train: np.ndarray = field(repr=False)
    y_train: np.ndarray = field(repr=False)
    x_test: np.ndarray = field(repr=False)
    y_test: np.ndarray = field(repr=False)
    meta_train: tuple[tuple[str, str, int, int], ...] = field(repr=False, default=())
    meta_test: tuple[tuple[str, str, int, int], ...] = field(repr=False, default=())
    split_seed: int = 0


def split_per_class(labels: np.ndarray, train_per_class: int, split_seed: int,
                    chronological: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Stratified index split: first ``train_per_class`` of each class train."""
    train_idx: list[np.ndarray] = []
    test_idx: list[np.ndarray] = []
    for k, cls in enumerate(np.unique(labels)):
        idx = np.flatnonzero(labels == cls)
        if not chronological:
            rng = np.random.default_rng([split_seed, k])
            idx = idx[rng.permutation(idx.size)]
        train_idx.append(np.sort(idx[:train_per_class]))
        test_idx.append(np.sort(idx[train_per_class:]))
    return np.concatenate(train_idx), np.concatenate(test_idx)


def build_dataset(table_2d: FeatureTable, table_3d: FeatureTable,
                  channels: tuple[str, ...], split_seed: int = 0,
                  chronological: bool = False) -> Dataset:
    """Assemble the labeled, split dataset for a channel combination.

    Per class the split puts ceil(n/2) epochs in training and the rest in
    testing (158/157 for the 14 s x 15 trial paradigm).
    """
    if table_2d.bands != table_3d.bands:
        raise DataError("feature tables disagree on bands")
    x = np.concatenate([table_2d.matrix(channels), table_3d.matrix(channels)])
    y = np.concatenate([
        np.full(table_2d.values.shape[0], Condition.TWO_D.label),
        np.full(table_3d.values.shape[0], Condition.THREE_D.label),
    ])
    meta = [
        (t.subject_id, t.condition.value, int(tr), int(ep))
        for t in (table_2d, table_3d)
        for tr, ep in zip(t.trial_index, t.epoch_index)
    ]
    per_class = table_2d.values.shape[0]
    train_per_class = (per_class + 1) // 2
    train, test = split_per_class(y, train_per_class, split_seed, chronological)
    names = tuple(f"{c}_{b}_pct" for c in channels for b in table_2d.bands)
    return Dataset(
        feature_names=names,
        x_train=x[train], y_train=y[train],
        x_test=x[test], y_test=y[test],
        meta_train=tuple(meta[i] for i in train),
        meta_test=tuple(meta[i] for i in test),
        split_seed=split_seed,
    )


def save_dataset_csv(path: str | Path, names: tuple[str, ...], x: np.ndarray,
                     y: np.ndarray, meta: tuple[tuple[str, str, int, int], ...]) -> Path:
    """One partition as CSV: subject, condition, trial, epoch, features, label."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["subject", "condition", "trial", "epoch", *names, "label"])
        for row_meta, row_x, row_y in zip(meta, x, y):
            writer.writerow([*row_meta, *("%.17g" % v for v in row_x), int(row_y)])
    return path


def load_dataset_csv(path: str | Path) -> tuple[tuple[str, ...], np.ndarray, np.ndarray]:
    """Feature names, X and labels of one partition CSV."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read dataset {path}: {exc}") from exc
    if not rows or len(rows[0]) < 6 or rows[0][:4] != ["subject", "condition", "trial", "epoch"] \
            or rows[0][-1] != "label":
        raise DataError(f"{path} is not a dataset CSV (bad header)")
    names = tuple(rows[0][4:-1])
    try:
        x = np.array([[float(v) for v in row[4:-1]] for row in rows[1:]])
        y = np.array([int(row[-1]) for row in rows[1:]])
    except ValueError as exc:
        raise DataError(f"malformed dataset row in {path}: {exc}") from exc
    if np.setdiff1d(y, [-1, 1]).size:
        raise DataError(f"labels in {path} must be +1/-1")
    return names, x, y
