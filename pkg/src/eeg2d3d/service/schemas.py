"""Request/response models for the HTTP service."""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel

from ..pipeline import RunConfig


class HealthResponse(BaseModel):
    status: str
    version: str


class SynthRequest(BaseModel):
    subjects: list[str] = ["s01"]
    profile: Literal["paper", "flat"] = "paper"
    seed: int = 7
    base_noise: float = 4.0
    out_dir: str


class SynthResponse(BaseModel):
    manifests: dict[str, dict[str, str]]  # subject -> {"2d": path, "3d": path}


class ValidateRequest(BaseModel):
    manifest: str


class ValidateResponse(BaseModel):
    ok: bool
    problems: list[str]


class BandselectRequest(BaseModel):
    manifests_2d: list[str]
    manifests_3d: list[str]
    window: int = 512
    hop: int = 1
    threshold: float = 2.0
    n_select: int = 2
    out_dir: str | None = None
    dump_spectrograms: str | None = None  # debug: per-channel frame CSVs


class BandselectResponse(BaseModel):
    bands: list[str]
    counts: dict[str, int]
    threshold: float
    channels: list[str]
    band_labels: list[str]
    matrix: list[list[float]]
    files: list[str] = []


class FeaturesRequest(BaseModel):
    manifests_2d: list[str]
    manifests_3d: list[str]
    channels: list[str] | None = None  # default: whole montage
    bands: list[str] = ["delta", "theta"]
    window: int = 512
    hop: int = 1
    split_seed: int = 20
    chronological: bool = False
    out_dir: str


class FeaturesResponse(BaseModel):
    feature_names: list[str]
    n_train: int
    n_test: int
    datasets: list[dict[str, str]]  # per subject: {"train": path, "test": path}


class TrainRequest(BaseModel):
    dataset: str  # training-partition CSV
    classifier: Literal["plsr", "svm"] = "svm"
    k: int = 10
    seed: int = 5
    c_grid: list[float] = [0.1, 1.0, 10.0, 100.0]
    sigma_scales: list[float] = [0.25, 0.5, 1.0, 2.0, 4.0]
    max_components: int = 8
    model_out: str | None = None


class TrainResponse(BaseModel):
    classifier: str
    best: dict
    cv_accuracy: float
    table: list[dict]  # {params..., "cv_accuracy": ...} per grid point
    model_path: str | None


class MetricsModel(BaseModel):
    accuracy: float
    sensitivity: float | None
    specificity: float | None
    confusion: dict[str, int]


class EvaluateRequest(BaseModel):
    config: RunConfig


class EvaluateResponse(BaseModel):
    summary: dict


class RunRequest(BaseModel):
    config: RunConfig


class RunResponse(BaseModel):
    summary: dict
    reports: list[str]
