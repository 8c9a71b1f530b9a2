import numpy as np
import pytest

from eeg2d3d import bandsel, features, synth

# The default suite runs the spectral stages at reduced frame density
# (hop 8 / 64); nightly-marked tests repeat the key paths at hop 1.
SEL_HOP = 8
FEAT_HOP = 64


@pytest.fixture(scope="session")
def paper_pair():
    return synth.generate_pair(synth.default_effect_profile(seed=7))


@pytest.fixture(scope="session")
def paper_diff(paper_pair):
    cfg = bandsel.SelectionConfig(hop=SEL_HOP)
    m2d = bandsel.condition_band_matrix(paper_pair[0], cfg)
    m3d = bandsel.condition_band_matrix(paper_pair[1], cfg)
    return bandsel.diff_matrix(m2d, m3d)


@pytest.fixture(scope="session")
def paper_tables(paper_pair):
    cfg = features.EpochConfig(hop=FEAT_HOP)
    return tuple(
        features.build_feature_table(rec, ("delta", "theta"), cfg) for rec in paper_pair
    )


def sparse_effect_spec(seed: int = 11) -> synth.EffectSpec:
    """Effects on four channels only; the rest of the montage is flat."""
    return synth.EffectSpec(
        seed=seed,
        gains_2d={("O2", "delta"): 1.12, ("T4", "delta"): 1.12},
        gains_3d={("Fz", "delta"): 1.12, ("Oz", "theta"): 1.16},
    )


SPARSE_CHANNELS = ("O2", "T4", "Fz", "Oz")


@pytest.fixture(scope="session")
def sparse_pair():
    return synth.generate_pair(sparse_effect_spec())


@pytest.fixture(scope="session")
def sparse_tables(sparse_pair):
    cfg = features.EpochConfig(hop=FEAT_HOP)
    return tuple(
        features.build_feature_table(rec, ("delta", "theta"), cfg) for rec in sparse_pair
    )


def ci_eval_config(threads: int | None = None):
    """Evaluation settings for the default suite: reduced grid + hop."""
    from eeg2d3d import evaluate, learn

    return evaluate.EvalConfig(
        cv=learn.CvConfig(k=10, sigma_scales=(0.5, 1.0, 2.0), c_grid=(1.0, 10.0),
                          max_components=4, seed=5),
        epoch=features.EpochConfig(hop=FEAT_HOP),
        split_seed=20,
        threads=threads,
    )


@pytest.fixture(scope="session")
def sparse_report(sparse_tables):
    """Full channel report for the four-channel planted profile."""
    from eeg2d3d import evaluate

    cfg = ci_eval_config()
    tables = [evaluate.SubjectTables(*sparse_tables)]
    return evaluate.full_channel_report(tables, cfg)


def white_noise_recording(seed: int = 3, condition=None):
    """Plain white-noise recording built directly (flat spectrum)."""
    from eeg2d3d.model import (
        MONTAGE, SAMPLE_RATE, TRIAL_SAMPLES, TRIALS_PER_RECORDING, Condition, Recording,
    )

    rng = np.random.default_rng(seed)
    trials = rng.standard_normal((TRIALS_PER_RECORDING, len(MONTAGE), TRIAL_SAMPLES))
    return Recording(
        subject_id="wn",
        condition=condition or Condition.TWO_D,
        fs=SAMPLE_RATE,
        channels=MONTAGE,
        trials=trials,
    )
