"""Filtering and spectral estimation.

Filters are IIR designs applied forward-backward (zero phase). The short-time
transform uses a symmetric Hann window and a one-sided density scaling of
1/(fs * sum(w^2)), so band powers integrate to signal variance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy import signal as _sig

from .errors import NumericalError
from .model import BandScheme


@dataclass(frozen=True)
class IirFilter:
    b: np.ndarray
    a: np.ndarray
    design: str

    def __post_init__(self) -> None:
        a = np.asarray(self.a, dtype=np.float64)
        b = np.asarray(self.b, dtype=np.float64)
        b, a = b / a[0], a / a[0]
        poles = np.roots(a)
        if poles.size and np.abs(poles).max() >= 1.0:
            raise NumericalError(f"unstable filter design: {self.design}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def pad_len(self) -> int:
        return 3 * max(len(self.a), len(self.b))

    def response_db(self, freqs: np.ndarray | float, fs: float) -> np.ndarray:
        """Single-pass magnitude response in dB at the given frequencies."""
        w = 2.0 * np.pi * np.atleast_1d(np.asarray(freqs, dtype=np.float64)) / fs
        z = np.exp(-1j * w)
        h = np.polynomial.polynomial.polyval(z, self.b) / np.polynomial.polynomial.polyval(z, self.a)
        return 20.0 * np.log10(np.abs(h))


def design_butter_bandpass(order: int, lo: float, hi: float, fs: float) -> IirFilter:
    """Butterworth band-pass with -3 dB points at lo and hi Hz."""
    if order < 1:
        raise ValueError(f"order must be >= 1, got {order}")
    if lo >= hi:
        raise ValueError(f"lo < hi violated ({lo} >= {hi})")
    if lo <= 0:
        raise ValueError(f"lo must be positive, got {lo}")
    if hi >= fs / 2:
        raise ValueError(f"hi must be below the Nyquist frequency {fs / 2}, got {hi}")
    b, a = _sig.butter(order, [lo, hi], btype="bandpass", fs=fs)
    return IirFilter(b, a, design=f"butter bandpass order {order}, {lo}-{hi} Hz @ {fs} Hz")


def design_notch(f0: float, fs: float, bandwidth: float = 2.0) -> IirFilter:
    """Second-order notch at f0 with the given -3 dB bandwidth in Hz."""
    if not 0 < f0 < fs / 2:
        raise ValueError(f"f0 above Nyquist or non-positive: f0={f0}, fs={fs}")
    if bandwidth <= 0:
        raise ValueError(f"bandwidth must be positive, got {bandwidth}")
    b, a = _sig.iirnotch(f0, Q=f0 / bandwidth, fs=fs)
    return IirFilter(b, a, design=f"notch {f0} Hz, bw {bandwidth} Hz @ {fs} Hz")


def filtfilt(filt: IirFilter, x: np.ndarray) -> np.ndarray:
    """Forward-backward (zero-phase) filtering along the last axis.

    Edges are extended by odd reflection of 3x the filter length before the
    forward pass; the extension is dropped afterwards.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] <= filt.pad_len:
        raise ValueError(
            f"signal too short for zero-phase filtering: {x.shape[-1]} <= {filt.pad_len}"
        )
    return _sig.filtfilt(filt.b, filt.a, x, axis=-1, padtype="odd", padlen=filt.pad_len)


def average_trials(trials: np.ndarray) -> np.ndarray:
    """Element-wise mean over the leading (trial) axis."""
    trials = np.asarray(trials, dtype=np.float64)
    if trials.ndim < 2 or trials.shape[0] < 1:
        raise ValueError(f"need >= 1 stacked trials, got shape {trials.shape}")
    return trials.mean(axis=0)


def hanning(n: int) -> np.ndarray:
    """Symmetric Hann window, w[k] = 0.5 (1 - cos(2 pi k / (n - 1)))."""
    if n < 2:
        raise ValueError(f"window length must be >= 2, got {n}")
    k = np.arange(n)
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * k / (n - 1)))


@dataclass(frozen=True)
class Spectrogram:
    """Per-frame one-sided power densities (uV^2/Hz)."""

    frames: np.ndarray = field(repr=False)  # (n_frames, n_bins)
    freq_axis: np.ndarray = field(repr=False)
    time_axis: np.ndarray = field(repr=False)
    window_len: int
    hop: int


@dataclass(frozen=True)
class Psd:
    power: np.ndarray = field(repr=False)
    freq_axis: np.ndarray = field(repr=False)


def _frame_powers(segments: np.ndarray, window: np.ndarray, fs: float) -> np.ndarray:
    """One-sided power densities of pre-cut frames (..., window_len)."""
    spec = np.fft.rfft(segments * window, axis=-1)
    powers = (spec.real**2 + spec.imag**2) / (fs * np.sum(window**2))
    n = window.shape[0]
    # Double the interior bins; DC and (for even n) Nyquist appear once.
    hi = powers.shape[-1] - 1 if n % 2 == 0 else powers.shape[-1]
    powers[..., 1:hi] *= 2.0
    return powers


def stft(x: np.ndarray, fs: float, window_len: int = 512, hop: int = 1) -> Spectrogram:
    """Sliding Hann-window power spectrogram of a 1-D signal.

    Frames start every ``hop`` samples; a signal of length L yields
    floor((L - window_len) / hop) + 1 frames, no padding.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"stft expects a 1-D signal, got shape {x.shape}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    if x.shape[0] < window_len:
        raise ValueError(f"signal shorter than window: {x.shape[0]} < {window_len}")
    window = hanning(window_len)
    segments = sliding_window_view(x, window_len)[::hop]
    frames = _frame_powers(segments, window, fs)
    starts = np.arange(frames.shape[0]) * hop
    return Spectrogram(
        frames=frames,
        freq_axis=np.fft.rfftfreq(window_len, 1.0 / fs),
        time_axis=(starts + (window_len - 1) / 2.0) / fs,
        window_len=window_len,
        hop=hop,
    )


def psd_from_stft(spec: Spectrogram) -> Psd:
    """Average the frame densities (Welch-style over the dense frame set)."""
    if spec.frames.shape[0] < 1:
        raise ValueError("spectrogram has no frames")
    return Psd(power=spec.frames.mean(axis=0), freq_axis=spec.freq_axis)


def band_power(psd: Psd, lo: float, hi: float) -> float:
    """Trapezoidal integral of the PSD over the grid points in [lo, hi].

    Adjacent bands of a scheme share their edge point; the trapezoid rule
    gives each shared point half weight on either side, so band powers add
    exactly to the power of the merged range.
    """
    if lo >= hi:
        raise ValueError(f"lo < hi violated ({lo} >= {hi})")
    f = psd.freq_axis
    if lo < f[0] or hi > f[-1]:
        raise ValueError(f"band [{lo}, {hi}] outside the PSD range [{f[0]}, {f[-1]}]")
    sel = (f >= lo) & (f <= hi)
    return float(np.trapezoid(psd.power[sel], f[sel]))


def normalized_band_powers(psd: Psd, scheme: BandScheme) -> np.ndarray:
    """Percentage of total power per scheme band; sums to 100."""
    total = band_power(psd, *scheme.total_range)
    if total <= 0.0:
        raise NumericalError("degenerate zero-power PSD")
    return np.array([100.0 * band_power(psd, b.lo, b.hi) / total for b in scheme.bands])
