"""Recording persistence: JSON manifest plus one CSV per trial.

Manifest: {subject_id, condition, fs, channels[], trial_files[]}.
Trial CSV: one row per channel in manifest order, comma-separated decimal
microvolts, no header. Values are written with 17 significant digits so a
save/load round trip is bit-exact.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import Condition, Recording

_FLOAT_FMT = "%.17g"


def save_recording(rec: Recording, manifest_path: str | Path) -> Path:
    """Write manifest + trial CSVs; trial files land next to the manifest."""
    manifest_path = Path(manifest_path)
    manifest_path.parent.mkdir(parents=True, exist_ok=True)
    stem = manifest_path.stem
    trial_files = []
    for t in range(rec.n_trials):
        name = f"{stem}_trial{t:02d}.csv"
        np.savetxt(manifest_path.parent / name, rec.trials[t], fmt=_FLOAT_FMT, delimiter=",")
        trial_files.append(name)
    manifest = {
        "subject_id": rec.subject_id,
        "condition": rec.condition.value,
        "fs": rec.fs,
        "channels": list(rec.channels),
        "trial_files": trial_files,
    }
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n")
    return manifest_path


def load_recording(manifest_path: str | Path) -> Recording:
    manifest_path = Path(manifest_path)
    try:
        manifest = json.loads(manifest_path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read manifest {manifest_path}: {exc}") from exc
    for key in ("subject_id", "condition", "fs", "channels", "trial_files"):
        if key not in manifest:
            raise DataError(f"manifest {manifest_path} missing field {key!r}")
    try:
        condition = Condition(manifest["condition"])
    except ValueError:
        raise DataError(f"unknown condition {manifest['condition']!r} in {manifest_path}") from None
    trials = []
    for name in manifest["trial_files"]:
        path = manifest_path.parent / name
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2)
        except (OSError, ValueError) as exc:
            raise DataError(f"cannot read trial file {path}: {exc}") from exc
        trials.append(data)
    shapes = {t.shape for t in trials}
    if len(shapes) > 1:
        raise DataError(f"trial files of {manifest_path} disagree on shape: {sorted(shapes)}")
    return Recording(
        subject_id=manifest["subject_id"],
        condition=condition,
        fs=int(manifest["fs"]),
        channels=tuple(manifest["channels"]),
        trials=np.stack(trials),
    )
