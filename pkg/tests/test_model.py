import numpy as np
import pytest

from eeg2d3d.dataio import load_recording, save_recording
from eeg2d3d.errors import DataError
from eeg2d3d.model import (
    EPOCH_SCHEME,
    MONTAGE,
    SAMPLE_RATE,
    SELECTION_SCHEME,
    TRIAL_SAMPLES,
    TRIALS_PER_RECORDING,
    Condition,
    Recording,
    channel_index,
    validate_recording,
)


def make_recording(n_trials=TRIALS_PER_RECORDING, n_samples=TRIAL_SAMPLES,
                   fs=SAMPLE_RATE, channels=MONTAGE, seed=0):
    rng = np.random.default_rng(seed)
    trials = rng.standard_normal((n_trials, len(channels), n_samples))
    return Recording(subject_id="s01", condition=Condition.TWO_D, fs=fs,
                     channels=channels, trials=trials)


class TestMontage:
    def test_twenty_distinct_channels(self):
        assert len(MONTAGE) == 20
        assert len(set(MONTAGE)) == 20

    def test_reference_not_a_data_channel(self):
        assert "Cz" not in MONTAGE

    def test_channel_index_lookup(self):
        assert channel_index("Fp1") == 0
        assert channel_index("Oz") == 19
        with pytest.raises(DataError):
            channel_index("Cz")


class TestBandSchemes:
    def test_selection_scheme_edges(self):
        edges = [(b.label, b.lo, b.hi) for b in SELECTION_SCHEME.bands]
        assert edges == [("delta", 1, 4), ("theta", 4, 8), ("alpha", 8, 13),
                         ("beta", 13, 25), ("gamma", 25, 49)]
        assert SELECTION_SCHEME.total_range == (1, 49)

    def test_epoch_scheme_edges(self):
        edges = [(b.label, b.lo, b.hi) for b in EPOCH_SCHEME.bands]
        assert edges == [("delta", 1, 4), ("theta", 4, 8), ("alpha", 8, 12),
                         ("beta", 12, 30)]
        assert EPOCH_SCHEME.total_range == (1, 30)

    @pytest.mark.parametrize("scheme", [SELECTION_SCHEME, EPOCH_SCHEME])
    def test_bands_partition_total_range(self, scheme):
        assert scheme.bands[0].lo == scheme.total_range[0]
        assert scheme.bands[-1].hi == scheme.total_range[1]
        for a, b in zip(scheme.bands, scheme.bands[1:]):
            assert a.hi == b.lo


class TestValidateRecording:
    def test_well_formed_recording_is_valid(self):
        report = validate_recording(make_recording())
        assert report.ok
        assert report.problems == []

    def test_wrong_trial_count_reported(self):
        report = validate_recording(make_recording(n_trials=14))
        assert any("trial count 14" in p for p in report.problems)

    def test_nan_sample_names_trial_and_channel(self):
        rec = make_recording()
        trials = rec.trials.copy()
        trials[3, channel_index("P4"), 100] = np.nan
        report = validate_recording(
            Recording("s01", Condition.TWO_D, SAMPLE_RATE, MONTAGE, trials))
        assert any("trial 3" in p and "P4" in p for p in report.problems)

    def test_wrong_fs_and_length_reported(self):
        report = validate_recording(make_recording(fs=256, n_samples=1000))
        assert any("sample rate 256" in p for p in report.problems)
        assert any("1000" in p for p in report.problems)

    def test_channel_mismatch_reported(self):
        channels = ("Fp1", "Fp2")
        report = validate_recording(make_recording(channels=channels))
        assert any("channel mismatch" in p for p in report.problems)


class TestRecordingRoundTrip:
    def test_save_load_is_bit_exact(self, tmp_path):
        rec = make_recording(seed=42)
        manifest = save_recording(rec, tmp_path / "s01_2d.json")
        loaded = load_recording(manifest)
        assert loaded.subject_id == rec.subject_id
        assert loaded.condition is rec.condition
        assert loaded.fs == rec.fs
        assert loaded.channels == rec.channels
        assert loaded.trials.shape == rec.trials.shape
        assert np.array_equal(loaded.trials, rec.trials)

    def test_manifest_lists_trial_files(self, tmp_path):
        import json

        rec = make_recording()
        manifest = save_recording(rec, tmp_path / "rec.json")
        data = json.loads(manifest.read_text())
        assert set(data) == {"subject_id", "condition", "fs", "channels", "trial_files"}
        assert len(data["trial_files"]) == TRIALS_PER_RECORDING
        assert data["channels"] == list(MONTAGE)

    def test_trial_csv_has_one_row_per_channel_no_header(self, tmp_path):
        rec = make_recording()
        manifest = save_recording(rec, tmp_path / "rec.json")
        first = (tmp_path / "rec_trial00.csv").read_text().strip().splitlines()
        assert len(first) == len(MONTAGE)
        assert len(first[0].split(",")) == TRIAL_SAMPLES
        float(first[0].split(",")[0])  # data, not a header

    def test_missing_manifest_raises_data_error(self, tmp_path):
        with pytest.raises(DataError):
            load_recording(tmp_path / "absent.json")

    def test_bad_condition_raises_data_error(self, tmp_path):
        rec = make_recording()
        manifest = save_recording(rec, tmp_path / "rec.json")
        import json

        data = json.loads(manifest.read_text())
        data["condition"] = "4D"
        manifest.write_text(json.dumps(data))
        with pytest.raises(DataError):
            load_recording(manifest)


class TestImmutability:
    def test_trials_are_read_only(self):
        rec = make_recording()
        with pytest.raises(ValueError):
            rec.trials[0, 0, 0] = 1.0
