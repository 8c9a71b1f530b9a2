import numpy as np
import pytest

from eeg2d3d import features
from eeg2d3d.errors import NumericalError
from eeg2d3d.model import SAMPLE_RATE, channel_index

FS = SAMPLE_RATE


class TestEpochize:
    def test_full_trial_yields_21_epochs(self):
        trial = np.zeros((20, 7168))
        epochs = features.epochize(trial, FS)
        assert len(epochs) == 21
        assert all(e.shape == (20, 2048) for e in epochs)

    def test_epoch_counts_across_both_conditions(self):
        # 21 epochs x 15 trials = 315 per class, 630 for the pair
        per_trial = len(features.epochize(np.zeros((1, 7168)), FS))
        per_class = per_trial * 15
        assert per_class == 315
        assert 2 * per_class == 630

    def test_window_sized_trial_yields_single_epoch(self):
        assert len(features.epochize(np.zeros((3, 2048)), FS)) == 1

    def test_epoch_starts_and_overlap(self):
        trial = np.arange(7168)[None, :].repeat(2, axis=0)
        epochs = features.epochize(trial, FS)
        for i, e in enumerate(epochs):
            assert e[0, 0] == 256 * i
        shared = np.intersect1d(epochs[0][0], epochs[1][0])
        assert shared.size == 2048 - 256 == 1792

    def test_trial_shorter_than_window_rejected(self):
        with pytest.raises(ValueError, match="shorter"):
            features.epochize(np.zeros((2, 1000)), FS)


class TestPreprocessEpochPhase:
    t = np.arange(14 * FS) / FS
    core = slice(2 * FS, 12 * FS)

    def attenuation_db(self, freq):
        x = np.sin(2 * np.pi * freq * self.t)[None, :]
        y = features.preprocess_epoch_phase(x, FS)
        rms_in = np.sqrt(np.mean(x[0, self.core] ** 2))
        rms_out = np.sqrt(np.mean(y[0, self.core] ** 2))
        return 20 * np.log10(rms_in / rms_out)

    def test_mains_sinusoid_suppressed(self):
        assert self.attenuation_db(50.0) >= 35.0

    def test_passband_sinusoid_preserved(self):
        assert abs(self.attenuation_db(5.0)) < 0.17  # RMS within 2%

    def test_out_of_band_sinusoid_attenuated(self):
        # Order-3 band-pass at 1-35 Hz: the zero-phase cascade measures
        # about 16 dB at 45 Hz (2x the -7.9 dB single-pass response).
        from eeg2d3d import dsp

        bp = dsp.design_butter_bandpass(3, 1.0, 35.0, FS)
        predicted = -2 * bp.response_db(45.0, FS)[0]
        measured = self.attenuation_db(45.0)
        assert measured >= 15.0
        assert measured == pytest.approx(predicted, abs=1.0)


class TestExtractFeatures:
    def test_pure_low_tone_concentrates_delta(self):
        t = np.arange(2048) / FS
        epoch = np.sin(2 * np.pi * 2.0 * t)[None, :]
        vec = features.extract_features(epoch, FS, ("delta", "theta"), hop=8)
        assert vec[0] > 95.0
        assert vec[1] < 5.0

    def test_two_channel_ordering(self):
        t = np.arange(2048) / FS
        ch_delta = np.sin(2 * np.pi * 2.0 * t)
        ch_theta = np.sin(2 * np.pi * 6.0 * t)
        epoch = np.stack([ch_delta, ch_theta])
        vec = features.extract_features(epoch, FS, ("delta", "theta"), hop=8)
        assert vec.shape == (4,)
        assert vec[0] > 90.0 and vec[1] < 10.0   # channel 0: delta-heavy
        assert vec[2] < 10.0 and vec[3] > 90.0   # channel 1: theta-heavy

    def test_amplitude_scaling_cancels(self):
        rng = np.random.default_rng(0)
        epoch = rng.standard_normal((2, 2048))
        a = features.extract_features(epoch, FS, ("delta", "theta"), hop=8)
        b = features.extract_features(2.0 * epoch, FS, ("delta", "theta"), hop=8)
        np.testing.assert_allclose(a, b, atol=1e-6)

    def test_zero_power_epoch_rejected(self):
        with pytest.raises(NumericalError):
            features.extract_features(np.zeros((1, 2048)), FS, ("delta",), hop=8)


class TestEpochsFromRecording:
    def test_counts_and_metadata(self, paper_pair):
        rec = paper_pair[0]
        epochs = features.epochs_from_recording(rec, features.EpochConfig(hop=64))
        assert len(epochs) == 315
        assert epochs[0].subject_id == rec.subject_id
        assert epochs[0].condition is rec.condition
        assert epochs[22].trial_index == 1 and epochs[22].epoch_index == 1
        assert all(e.samples.shape == (20, 2048) for e in epochs[:3])

    def test_epochs_feed_feature_extraction(self, paper_pair):
        cfg = features.EpochConfig(hop=64)
        rec = paper_pair[0]
        epochs = features.epochs_from_recording(rec, cfg)
        table = features.build_feature_table(rec, ("delta", "theta"), cfg)
        epoch = epochs[40]
        ch = channel_index("Oz")
        vec = features.extract_features(epoch.samples[ch:ch + 1], rec.fs,
                                        ("delta", "theta"), hop=64)
        flat_index = epoch.trial_index * 21 + epoch.epoch_index
        np.testing.assert_array_equal(vec, table.values[flat_index, ch])


class TestFeatureTable:
    def test_fast_path_matches_per_epoch_extraction(self, paper_pair):
        # The trial-level spectrogram sharing must be exactly the per-epoch
        # computation.
        rec = paper_pair[0]
        cfg = features.EpochConfig(hop=64)
        table = features.build_feature_table(rec, ("delta", "theta"), cfg)
        filtered = features.preprocess_epoch_phase(rec.trials[4], rec.fs, cfg)
        epochs = features.epochize(filtered, rec.fs)
        ch = channel_index("T6")
        for e in (0, 7, 20):
            direct = features.extract_features(
                epochs[e][ch:ch + 1], rec.fs, ("delta", "theta"), hop=64)
            np.testing.assert_array_equal(table.values[4 * 21 + e, ch], direct)

    def test_unshareable_hop_falls_back_to_direct_path(self, paper_pair):
        rec = paper_pair[0]
        cfg = features.EpochConfig(hop=96)  # 256 % 96 != 0
        table = features.build_feature_table(rec, ("delta", "theta"), cfg)
        filtered = features.preprocess_epoch_phase(rec.trials[0], rec.fs, cfg)
        epochs = features.epochize(filtered, rec.fs)
        direct = features.extract_features(
            epochs[3][0:1], rec.fs, ("delta", "theta"), hop=96)
        np.testing.assert_array_equal(table.values[3, 0], direct)

    def test_matrix_column_order_follows_requested_channels(self, paper_tables):
        table = paper_tables[0]
        m = table.matrix(("Oz", "Fp1"))
        assert m.shape == (315, 4)
        np.testing.assert_array_equal(m[:, 0], table.values[:, channel_index("Oz"), 0])
        np.testing.assert_array_equal(m[:, 2], table.values[:, channel_index("Fp1"), 0])


class TestBuildDataset:
    def test_split_sizes_and_balance(self, paper_tables):
        ds = features.build_dataset(*paper_tables, ("T6", "Oz"), split_seed=20)
        assert len(ds.y_train) == 316 and len(ds.y_test) == 314
        assert int(np.sum(ds.y_train == 1)) == 158
        assert int(np.sum(ds.y_train == -1)) == 158
        assert int(np.sum(ds.y_test == 1)) == 157
        assert int(np.sum(ds.y_test == -1)) == 157

    def test_same_seed_reproduces_partition(self, paper_tables):
        a = features.build_dataset(*paper_tables, ("T6",), split_seed=4)
        b = features.build_dataset(*paper_tables, ("T6",), split_seed=4)
        np.testing.assert_array_equal(a.x_train, b.x_train)
        assert a.meta_train == b.meta_train

    def test_different_seed_changes_partition(self, paper_tables):
        a = features.build_dataset(*paper_tables, ("T6",), split_seed=4)
        b = features.build_dataset(*paper_tables, ("T6",), split_seed=5)
        assert a.meta_train != b.meta_train

    def test_partitions_are_disjoint_and_cover_all_epochs(self, paper_tables):
        ds = features.build_dataset(*paper_tables, ("T6",), split_seed=20)
        train = set(ds.meta_train)
        test = set(ds.meta_test)
        assert not train & test
        assert len(train | test) == 630

    def test_chronological_split_takes_leading_epochs(self, paper_tables):
        ds = features.build_dataset(*paper_tables, ("T6",), split_seed=0,
                                    chronological=True)
        train_2d = [m for m in ds.meta_train if m[1] == "2D"]
        assert all(m[2] * 21 + m[3] < 158 for m in train_2d)

    def test_feature_names(self, paper_tables):
        ds = features.build_dataset(*paper_tables, ("T6", "Oz"), split_seed=20)
        assert ds.feature_names == ("T6_delta_pct", "T6_theta_pct",
                                    "Oz_delta_pct", "Oz_theta_pct")

    def test_labels_follow_condition(self, paper_tables):
        ds = features.build_dataset(*paper_tables, ("T6",), split_seed=20)
        for meta, label in zip(ds.meta_train, ds.y_train):
            assert label == (1 if meta[1] == "2D" else -1)

    def test_train_rows_do_not_depend_on_test_epochs(self, paper_tables):
        # Features are pure per-epoch functions: recomputing each training
        # row from its epoch alone reproduces the training matrix.
        ds = features.build_dataset(*paper_tables, ("T6",), split_seed=20)
        table_by_cond = {"2D": paper_tables[0], "3D": paper_tables[1]}
        ch = channel_index("T6")
        for row, meta in zip(ds.x_train, ds.meta_train):
            src = table_by_cond[meta[1]]
            idx = meta[2] * 21 + meta[3]
            np.testing.assert_array_equal(row, src.values[idx, ch])


class TestDatasetCsv:
    def test_round_trip(self, paper_tables, tmp_path):
        ds = features.build_dataset(*paper_tables, ("T6", "Oz"), split_seed=20)
        path = features.save_dataset_csv(tmp_path / "train.csv", ds.feature_names,
                                         ds.x_train, ds.y_train, ds.meta_train)
        names, x, y = features.load_dataset_csv(path)
        assert names == ds.feature_names
        np.testing.assert_array_equal(x, ds.x_train)
        np.testing.assert_array_equal(y, ds.y_train)

    def test_header_layout(self, paper_tables, tmp_path):
        ds = features.build_dataset(*paper_tables, ("T6",), split_seed=20)
        path = features.save_dataset_csv(tmp_path / "t.csv", ds.feature_names,
                                         ds.x_test, ds.y_test, ds.meta_test)
        header = path.read_text().splitlines()[0].split(",")
        assert header[:4] == ["subject", "condition", "trial", "epoch"]
        assert header[-1] == "label"

    def test_malformed_header_rejected(self, tmp_path):
        from eeg2d3d.errors import DataError

        bad = tmp_path / "bad.csv"
        bad.write_text("a,b,c\n1,2,3\n")
        with pytest.raises(DataError):
            features.load_dataset_csv(bad)
