"""Deterministic synthetic EEG with condition-dependent band-power effects.

Each channel is a random-phase tone bank on the 1 Hz analysis grid (pink
1/f amplitude envelope, shared by all trials of a condition) plus weak
broadband per-trial noise and a 50 Hz mains line. Planting a gain on a
(channel, band) pair scales that band's amplitude for one condition, so the
normalized band-power difference between conditions is controlled tightly.

All randomness comes from a counter-based PRNG keyed by
(seed, subject, condition, trial, channel): identical inputs reproduce
recordings bit-exactly, in any generation order.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .model import (
    FRONTAL_CHANNELS,
    MONTAGE,
    POSTERIOR_CHANNELS,
    SAMPLE_RATE,
    SELECTION_SCHEME,
    TRIAL_SAMPLES,
    TRIALS_PER_RECORDING,
    Condition,
    Recording,
)

# rfft grid of a full trial; tones sit on every 14th bin (integer Hz).
_FREQS = np.fft.rfftfreq(TRIAL_SAMPLES, 1.0 / SAMPLE_RATE)
_TONE_SPACING_BINS = int(round(1.0 / (_FREQS[1] - _FREQS[0])))
_SPECTRUM_LO = 1.0
_SPECTRUM_HI = 58.0
_MAINS_HZ = 50.0


@dataclass(frozen=True)
class EffectSpec:
    """Per-(channel, band) amplitude gains for the two conditions.

    Gains default to 1 (no effect). ``base_noise`` sets the overall 1/f
    amplitude scale in uV; ``trial_noise`` is the relative amplitude of the
    independent per-trial noise on top of the shared tone bank.
    """

    seed: int
    base_noise: float = 4.0
    trial_noise: float = 0.1
    gains_2d: Mapping[tuple[str, str], float] = field(default_factory=dict)
    gains_3d: Mapping[tuple[str, str], float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.base_noise <= 0:
            raise ValueError(f"base_noise must be positive, got {self.base_noise}")
        if self.trial_noise < 0:
            raise ValueError(f"trial_noise must be >= 0, got {self.trial_noise}")
        band_labels = SELECTION_SCHEME.labels
        for name, gains in (("gains_2d", self.gains_2d), ("gains_3d", self.gains_3d)):
            for (channel, band), gain in gains.items():
                if gain <= 0:
                    raise ValueError(f"{name}[{channel}, {band}] must be positive, got {gain}")
                if channel not in MONTAGE:
                    raise ValueError(f"{name}: unknown channel {channel!r}")
                if band not in band_labels:
                    raise ValueError(f"{name}: unknown band {band!r}")

    def gain(self, condition: Condition, channel: str, band: str) -> float:
        gains = self.gains_2d if condition is Condition.TWO_D else self.gains_3d
        return float(gains.get((channel, band), 1.0))


def default_effect_profile(seed: int = 7) -> EffectSpec:
    """The stock frontal/posterior delta asymmetry (profile id "paper").

    3D boosts delta over the frontal channels; 2D dominates delta over the
    posterior channels with the maximum at T6; 3D dominates theta at Oz.
    Planted normalized-power differences land around 3-5 percentage points.
    """
    gains_2d: dict[tuple[str, str], float] = {}
    gains_3d: dict[tuple[str, str], float] = {}
    for ch in FRONTAL_CHANNELS:
        gains_3d[(ch, "delta")] = 1.10
    for ch in POSTERIOR_CHANNELS:
        gains_2d[(ch, "delta")] = 1.16 if ch == "T6" else 1.10
    gains_3d[("Oz", "theta")] = 1.14
    return EffectSpec(seed=seed, gains_2d=gains_2d, gains_3d=gains_3d)


def _rng(seed: int, subject: str, condition: str, trial: int, channel: str) -> np.random.Generator:
    key = hashlib.blake2b(
        f"{seed}|{subject}|{condition}|{trial}|{channel}".encode(), digest_size=16
    ).digest()
    return np.random.Generator(np.random.Philox(key=np.frombuffer(key, dtype=np.uint64)))


def _amplitude_envelope(spec: EffectSpec, condition: Condition, channel: str) -> np.ndarray:
    """Per-bin amplitude: pink 1/f with band gains, zero outside 1-58 Hz."""
    env = np.zeros_like(_FREQS)
    shaped = (_FREQS >= _SPECTRUM_LO) & (_FREQS <= _SPECTRUM_HI)
    env[shaped] = spec.base_noise / np.sqrt(_FREQS[shaped])
    for band in SELECTION_SCHEME.bands:
        g = spec.gain(condition, channel, band.label)
        if g != 1.0:
            env[(_FREQS >= band.lo) & (_FREQS < band.hi)] *= g
    return env


def _channel_trials(spec: EffectSpec, subject: str, condition: Condition, channel: str) -> np.ndarray:
    n = TRIAL_SAMPLES
    env = _amplitude_envelope(spec, condition, channel)
    # Tone bank on the integer-Hz bins, sqrt(spacing)-compensated so band
    # power matches the dense envelope; 50 Hz left to the mains line.
    idx = np.arange(_FREQS.size)
    mains_bin = int(round(_MAINS_HZ * TRIAL_SAMPLES / SAMPLE_RATE))
    tone_bins = (idx % _TONE_SPACING_BINS == 0) & (env > 0)
    tone_bins[mains_bin] = False
    coherent_env = np.where(tone_bins, env * np.sqrt(_TONE_SPACING_BINS), 0.0)
    shared_rng = _rng(spec.seed, subject, condition.value, -1, channel)
    phases = shared_rng.uniform(0.0, 2.0 * np.pi, _FREQS.size)
    coherent = coherent_env * np.exp(1j * phases)
    coherent[mains_bin] = spec.base_noise * np.exp(1j * phases[mains_bin])

    noise_env = env * spec.trial_noise
    trials = np.empty((TRIALS_PER_RECORDING, n))
    for t in range(TRIALS_PER_RECORDING):
        rng = _rng(spec.seed, subject, condition.value, t, channel)
        draws = rng.standard_normal((2, _FREQS.size))
        noise = noise_env * (draws[0] + 1j * draws[1]) / np.sqrt(2.0)
        trials[t] = np.fft.irfft((coherent + noise) * (n / 2.0), n=n)
    return trials


def generate_recording(spec: EffectSpec, subject: str, condition: Condition) -> Recording:
    trials = np.empty((TRIALS_PER_RECORDING, len(MONTAGE), TRIAL_SAMPLES))
    for c, channel in enumerate(MONTAGE):
        trials[:, c, :] = _channel_trials(spec, subject, condition, channel)
    return Recording(
        subject_id=subject,
        condition=condition,
        fs=SAMPLE_RATE,
        channels=MONTAGE,
        trials=trials,
    )


def generate_pair(spec: EffectSpec, subject: str = "s01") -> tuple[Recording, Recording]:
    """Recordings for both conditions of one synthetic subject."""
    return (
        generate_recording(spec, subject, Condition.TWO_D),
        generate_recording(spec, subject, Condition.THREE_D),
    )
