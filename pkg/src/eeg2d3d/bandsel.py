"""Dominant-band election from the 2D-vs-3D normalized band-power matrix.

Per channel: average the trials, notch out the mains, band-pass 1-55 Hz,
estimate the PSD from a dense Hann spectrogram, and express each band's
power as a percentage of the 1-49 Hz total. The 20x5 matrices of the two
conditions are subtracted (2D - 3D); bands whose absolute difference
exceeds the threshold on the most channels win.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import dsp
from .model import MONTAGE, SELECTION_SCHEME, BandScheme, Recording
from .parallel import thread_map

MEANINGFUL_DIFF_PP = 2.0  # percentage points of normalized power


@dataclass(frozen=True)
class SelectionConfig:
    """Preprocessing and spectral parameters for the band-selection phase."""

    notch_hz: float = 50.0
    notch_bandwidth: float = 2.0
    bandpass: tuple[float, float] = (1.0, 55.0)
    order: int = 3
    window_len: int = 512
    hop: int = 1


@dataclass(frozen=True)
class BandDiffMatrix:
    """Normalized-power differences (2D - 3D), channels x bands."""

    values: np.ndarray = field(repr=False)  # (20, 5) percentage points
    scheme: BandScheme = SELECTION_SCHEME
    channels: tuple[str, ...] = MONTAGE


@dataclass(frozen=True)
class DominantBands:
    bands: tuple[str, ...]
    channel_counts: dict[str, int]
    threshold: float


def preprocessed_average(rec: Recording, cfg: SelectionConfig = SelectionConfig()) -> np.ndarray:
    """Trial average through notch + band-pass, (n_channels, n_samples)."""
    notch = dsp.design_notch(cfg.notch_hz, rec.fs, cfg.notch_bandwidth)
    band = dsp.design_butter_bandpass(cfg.order, *cfg.bandpass, fs=rec.fs)
    averaged = dsp.average_trials(rec.trials)
    return dsp.filtfilt(band, dsp.filtfilt(notch, averaged))


def condition_band_matrix(rec: Recording, cfg: SelectionConfig = SelectionConfig(),
                          threads: int | None = None) -> np.ndarray:
    """Per-channel normalized band-power percentages, (n_channels, n_bands)."""
    cleaned = preprocessed_average(rec, cfg)

    def one_channel(c: int) -> np.ndarray:
        spec = dsp.stft(cleaned[c], rec.fs, cfg.window_len, cfg.hop)
        return dsp.normalized_band_powers(dsp.psd_from_stft(spec), SELECTION_SCHEME)

    rows = thread_map(one_channel, range(cleaned.shape[0]), threads=threads)
    return np.stack(rows)


def dump_spectrograms(rec: Recording, out_dir, cfg: SelectionConfig = SelectionConfig()) -> list:
    """Debug dump: one CSV per channel, rows = frames, cols = frequency bins."""
    from pathlib import Path

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cleaned = preprocessed_average(rec, cfg)
    written = []
    for c, name in enumerate(rec.channels):
        spec = dsp.stft(cleaned[c], rec.fs, cfg.window_len, cfg.hop)
        path = out_dir / f"{rec.subject_id}_{rec.condition.value}_{name}_spectrogram.csv"
        np.savetxt(path, spec.frames, fmt="%.6e", delimiter=",")
        written.append(path)
    return written


def diff_matrix(m2d: np.ndarray, m3d: np.ndarray,
                channels: tuple[str, ...] = MONTAGE) -> BandDiffMatrix:
    m2d = np.asarray(m2d, dtype=np.float64)
    m3d = np.asarray(m3d, dtype=np.float64)
    if m2d.shape != m3d.shape:
        raise ValueError(f"matrix shapes differ: {m2d.shape} vs {m3d.shape}")
    return BandDiffMatrix(values=m2d - m3d, channels=channels)


def average_diff_matrices(matrices: list[BandDiffMatrix]) -> BandDiffMatrix:
    """Element-wise mean across subjects."""
    if not matrices:
        raise ValueError("no matrices to average")
    stacked = np.stack([m.values for m in matrices])
    return BandDiffMatrix(values=stacked.mean(axis=0), scheme=matrices[0].scheme,
                          channels=matrices[0].channels)


def select_dominant_bands(diff: BandDiffMatrix, threshold: float = MEANINGFUL_DIFF_PP,
                          n_select: int = 2) -> DominantBands:
    """Rank bands by how many channels exceed the threshold in either sign.

    Ties go to the lower-frequency band, so the ranking is a deterministic
    function of the matrix.
    """
    counts = (np.abs(diff.values) > threshold).sum(axis=0)
    labels = diff.scheme.labels
    order = sorted(range(len(labels)), key=lambda i: (-counts[i], i))
    chosen = tuple(labels[i] for i in order[:n_select])
    return DominantBands(
        bands=chosen,
        channel_counts={label: int(c) for label, c in zip(labels, counts)},
        threshold=threshold,
    )
