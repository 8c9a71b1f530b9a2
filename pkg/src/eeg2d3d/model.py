"""Domain types: montage, recording paradigm constants, frequency bands."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

# 10-20 cap, Cz reference excluded. Order is the canonical channel order
# everywhere (matrices, reports, CSV rows).
MONTAGE: tuple[str, ...] = (
    "Fp1", "Fpz", "Fp2", "F3", "F4", "F7", "F8", "C3", "C4", "Fz",
    "P3", "P4", "Pz", "O1", "O2", "T3", "T4", "T5", "T6", "Oz",
)
REFERENCE_CHANNEL = "Cz"

FRONTAL_CHANNELS: tuple[str, ...] = ("Fp1", "Fpz", "Fp2", "F3", "F4", "F7", "F8", "Fz")
POSTERIOR_CHANNELS: tuple[str, ...] = tuple(c for c in MONTAGE if c not in FRONTAL_CHANNELS)

SAMPLE_RATE = 512
TRIAL_SECONDS = 14.0
TRIAL_SAMPLES = int(TRIAL_SECONDS * SAMPLE_RATE)  # 7168
TRIALS_PER_RECORDING = 15


class Condition(str, enum.Enum):
    TWO_D = "2D"
    THREE_D = "3D"

    @property
    def label(self) -> int:
        """Class label: 2D is the positive class."""
        return 1 if self is Condition.TWO_D else -1


def channel_index(name: str) -> int:
    try:
        return MONTAGE.index(name)
    except ValueError:
        raise DataError(f"unknown channel {name!r}; expected one of {MONTAGE}") from None


@dataclass(frozen=True)
class FrequencyBand:
    label: str
    lo: float  # Hz, inclusive
    hi: float  # Hz, exclusive except at the scheme's upper end

    def __post_init__(self) -> None:
        if not self.lo < self.hi:
            raise ValueError(f"band {self.label}: lo < hi violated ({self.lo} >= {self.hi})")


@dataclass(frozen=True)
class BandScheme:
    """A contiguous, non-overlapping partition of a frequency range."""

    phase: str
    bands: tuple[FrequencyBand, ...]
    total_range: tuple[float, float]

    def __post_init__(self) -> None:
        lo, hi = self.total_range
        if self.bands[0].lo != lo or self.bands[-1].hi != hi:
            raise ValueError("bands do not span total_range")
        for a, b in zip(self.bands, self.bands[1:]):
            if a.hi != b.lo:
                raise ValueError(f"bands {a.label}/{b.label} are not contiguous")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(b.label for b in self.bands)

    def band(self, label: str) -> FrequencyBand:
        for b in self.bands:
            if b.label == label:
                return b
        raise KeyError(label)


# Band edges used while electing the dominant bands (gamma included).
SELECTION_SCHEME = BandScheme(
    phase="selection",
    bands=(
        FrequencyBand("delta", 1.0, 4.0),
        FrequencyBand("theta", 4.0, 8.0),
        FrequencyBand("alpha", 8.0, 13.0),
        FrequencyBand("beta", 13.0, 25.0),
        FrequencyBand("gamma", 25.0, 49.0),
    ),
    total_range=(1.0, 49.0),
)

# Band edges used for epoch features (gamma dropped, alpha/beta re-edged).
EPOCH_SCHEME = BandScheme(
    phase="epoch",
    bands=(
        FrequencyBand("delta", 1.0, 4.0),
        FrequencyBand("theta", 4.0, 8.0),
        FrequencyBand("alpha", 8.0, 12.0),
        FrequencyBand("beta", 12.0, 30.0),
    ),
    total_range=(1.0, 30.0),
)


@dataclass(frozen=True)
class Recording:
    """One subject under one viewing condition.

    ``trials`` has shape (n_trials, n_channels, n_samples) in microvolts.
    Arrays are marked read-only so instances can be shared freely.
    """

    subject_id: str
    condition: Condition
    fs: int
    channels: tuple[str, ...]
    trials: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        trials = np.asarray(self.trials, dtype=np.float64)
        if trials.ndim != 3:
            raise DataError(f"trials must be 3-D (trial, channel, sample); got shape {trials.shape}")
        trials.flags.writeable = False
        object.__setattr__(self, "trials", trials)
        object.__setattr__(self, "channels", tuple(self.channels))

    @property
    def n_trials(self) -> int:
        return self.trials.shape[0]

    @property
    def n_samples(self) -> int:
        return self.trials.shape[2]


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, problem: str) -> None:
        self.problems.append(problem)


def validate_recording(rec: Recording) -> ValidationReport:
    """Check a recording against the paradigm invariants.

    Every violation is reported; an empty report means the recording is valid.
    """
    report = ValidationReport()
    if rec.fs != SAMPLE_RATE:
        report.add(f"sample rate {rec.fs} != {SAMPLE_RATE}")
    if rec.channels != MONTAGE:
        report.add(
            f"channel mismatch: expected the {len(MONTAGE)}-channel montage, got {list(rec.channels)}"
        )
    if rec.n_trials != TRIALS_PER_RECORDING:
        report.add(f"trial count {rec.n_trials} != {TRIALS_PER_RECORDING}")
    if rec.trials.shape[1] != len(rec.channels):
        report.add(f"trial channel count {rec.trials.shape[1]} != {len(rec.channels)}")
    expected_samples = int(round(TRIAL_SECONDS * rec.fs))
    if rec.n_samples != expected_samples:
        report.add(f"trial length {rec.n_samples} samples != {expected_samples}")
    finite = np.isfinite(rec.trials)
    if not finite.all():
        for trial, chan in zip(*np.nonzero(~finite.all(axis=2))):
            name = rec.channels[chan] if chan < len(rec.channels) else f"#{chan}"
            report.add(f"non-finite sample in trial {trial}, channel {name}")
    return report
