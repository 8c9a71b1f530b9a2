"""Classifiers and model selection.

Two binary classifiers over +/-1 labels: partial least squares regression
(NIPALS components, class = sign of the regression score) and a soft-margin
SVM with a Gaussian kernel exp(-0.5 (||x-y||/sigma)^2) trained by sequential
minimal optimization. Both standardize features with training statistics.
Hyperparameters come from seeded stratified k-fold cross-validation.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DataError, NumericalError

KKT_TOL = 1e-3
SMO_MAX_ITER = 100_000


def rbf_kernel(x: np.ndarray, y: np.ndarray, sigma: float) -> float:
    """Gaussian similarity exp(-0.5 (||x-y|| / sigma)^2), in (0, 1]."""
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise ValueError(f"vector lengths differ: {x.shape} vs {y.shape}")
    d = np.linalg.norm(x - y)
    return float(np.exp(-0.5 * (d / sigma) ** 2))


def rbf_kernel_matrix(a: np.ndarray, b: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    sq = (
        np.sum(a**2, axis=1)[:, None]
        + np.sum(b**2, axis=1)[None, :]
        - 2.0 * (a @ b.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-0.5 * sq / sigma**2)


def _standardize_fit(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, list[int]]:
    mean = x.mean(axis=0)
    scale = x.std(axis=0, ddof=0)
    flat = np.flatnonzero(scale == 0.0).tolist()
    scale = np.where(scale == 0.0, 1.0, scale)
    return mean, scale, flat


@dataclass(frozen=True)
class PlsrModel:
    n_components: int
    x_mean: np.ndarray = field(repr=False)
    x_scale: np.ndarray = field(repr=False)
    y_mean: float = 0.0
    weights: np.ndarray = field(repr=False, default=None)     # (p, a)
    x_loadings: np.ndarray = field(repr=False, default=None)  # (p, a)
    y_loadings: np.ndarray = field(repr=False, default=None)  # (a,)
    beta: np.ndarray = field(repr=False, default=None)        # (p,) on standardized X
    decision_threshold: float = 0.0
    clamped: bool = False
    zero_variance_features: tuple[int, ...] = ()

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.x_mean.shape[0]:
            raise ValueError(f"feature length {x.shape[1]} != trained {self.x_mean.shape[0]}")
        return ((x - self.x_mean) / self.x_scale) @ self.beta + self.y_mean


def plsr_fit(x: np.ndarray, y: np.ndarray, n_components: int) -> PlsrModel:
    """NIPALS partial least squares of +/-1 labels on standardized features.

    Component extraction stops early (clamped) once the deflated matrix
    carries no usable variance, so collinear features are handled.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, p = x.shape
    if n < 2:
        raise ValueError(f"need >= 2 training rows, got {n}")
    if np.unique(np.sign(y)).size < 2:
        raise DataError("training labels contain a single class")
    if n_components < 1:
        raise ValueError(f"n_components must be >= 1, got {n_components}")
    limit = min(n_components, p, n - 1)
    clamped = limit < n_components

    mean, scale, zero_var = _standardize_fit(x)
    e = (x - mean) / scale
    y_mean = float(y.mean())
    f = y - y_mean

    weights, loadings, y_loads = [], [], []
    tiny = 1e-12 * max(1.0, float(np.abs(e).max()) ** 2)
    for _ in range(limit):
        w = e.T @ f
        norm_w = np.linalg.norm(w)
        if norm_w <= tiny:
            clamped = True
            break
        w = w / norm_w
        t = e @ w
        tt = float(t @ t)
        if tt <= tiny:
            clamped = True
            break
        p_load = e.T @ t / tt
        q = float(f @ t) / tt
        e = e - np.outer(t, p_load)
        f = f - q * t
        weights.append(w)
        loadings.append(p_load)
        y_loads.append(q)
    if not weights:
        raise NumericalError("PLSR found no usable component (constant features?)")

    w_mat = np.column_stack(weights)
    p_mat = np.column_stack(loadings)
    q_vec = np.array(y_loads)
    # beta = W (P'W)^-1 q maps standardized features straight to the score.
    beta = w_mat @ np.linalg.solve(p_mat.T @ w_mat, q_vec)
    return PlsrModel(
        n_components=len(weights),
        x_mean=mean, x_scale=scale, y_mean=y_mean,
        weights=w_mat, x_loadings=p_mat, y_loadings=q_vec, beta=beta,
        clamped=clamped, zero_variance_features=tuple(zero_var),
    )


@dataclass(frozen=True)
class SvmModel:
    support_vectors: np.ndarray = field(repr=False)  # standardized
    dual_coef: np.ndarray = field(repr=False)        # alpha_i * y_i
    bias: float = 0.0
    sigma: float = 1.0
    c: float = 1.0
    x_mean: np.ndarray = field(repr=False, default=None)
    x_scale: np.ndarray = field(repr=False, default=None)
    support_indices: np.ndarray = field(repr=False, default=None)  # into the training set
    n_iter: int = 0

    def scores(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.x_mean.shape[0]:
            raise ValueError(f"feature length {x.shape[1]} != trained {self.x_mean.shape[0]}")
        xs = (x - self.x_mean) / self.x_scale
        k = rbf_kernel_matrix(xs, self.support_vectors, self.sigma)
        return k @ self.dual_coef + self.bias


def svm_fit(x: np.ndarray, y: np.ndarray, sigma: float, c: float,
            tol: float = KKT_TOL, max_iter: int = SMO_MAX_ITER) -> SvmModel:
    """Train the soft-margin dual by SMO.

    The working set is the maximal KKT violator paired with the partner
    giving the largest guaranteed objective decrease (second-order
    selection). Stops when the KKT gap drops below ``tol``; raises
    NumericalError if the iteration cap is reached first.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if sigma <= 0 or c <= 0:
        raise ValueError(f"sigma and C must be positive, got sigma={sigma}, C={c}")
    if np.unique(np.sign(y)).size < 2:
        raise DataError("training labels contain a single class")
    n = x.shape[0]
    mean, scale, _ = _standardize_fit(x)
    xs = (x - mean) / scale
    kernel = rbf_kernel_matrix(xs, xs, sigma)
    tau = 1e-12
    # A variable an ulp away from its box bound must count as bound, or it
    # gets picked as the most-violating index with no room to move.
    snap = 1e-12 * max(1.0, c)

    def _snap_to_box(value: float) -> float:
        if value <= snap:
            return 0.0
        if value >= c - snap:
            return c
        return value

    alpha = np.zeros(n)
    u = np.zeros(n)  # decision values without bias: sum_j alpha_j y_j K_ij
    pos = y > 0
    diag = np.ascontiguousarray(np.diag(kernel))
    it = 0
    while True:
        margin = y - u
        in_up = (pos & (alpha < c)) | (~pos & (alpha > 0))
        in_low = (~pos & (alpha < c)) | (pos & (alpha > 0))
        up_vals = np.where(in_up, margin, -np.inf)
        low_vals = np.where(in_low, margin, np.inf)
        i = int(np.argmax(up_vals))
        gap = up_vals[i] - low_vals.min()
        if gap <= tol:
            break
        if it >= max_iter:
            raise NumericalError(
                f"SMO did not converge after {max_iter} iterations "
                f"(KKT gap {gap:.3e}, sigma={sigma}, C={c}, n={n})"
            )
        # Partner maximizing b^2 / a among violators of the chosen i.
        b_vec = up_vals[i] - margin
        eligible = in_low & (b_vec > 0.0)
        a_vec = np.maximum(kernel[i, i] + diag - 2.0 * kernel[i], tau)
        score = np.where(eligible, b_vec * b_vec / a_vec, -np.inf)
        j = int(np.argmax(score))

        eta = max(kernel[i, i] + kernel[j, j] - 2.0 * kernel[i, j], tau)
        if y[i] != y[j]:
            low_b = max(0.0, alpha[j] - alpha[i])
            high_b = min(c, c + alpha[j] - alpha[i])
        else:
            low_b = max(0.0, alpha[i] + alpha[j] - c)
            high_b = min(c, alpha[i] + alpha[j])
        err_i = u[i] - y[i]
        err_j = u[j] - y[j]
        a_j_new = _snap_to_box(float(np.clip(alpha[j] + y[j] * (err_i - err_j) / eta,
                                             low_b, high_b)))
        # Recover alpha_i from the conservation law in a form that cancels
        # exactly when alpha_j lands on a bound.
        if y[i] == y[j]:
            a_i_new = (alpha[i] + alpha[j]) - a_j_new
        else:
            a_i_new = a_j_new + (alpha[i] - alpha[j])
        a_i_new = _snap_to_box(min(max(a_i_new, 0.0), c))
        u += (a_i_new - alpha[i]) * y[i] * kernel[i] + (a_j_new - alpha[j]) * y[j] * kernel[j]
        alpha[i], alpha[j] = a_i_new, a_j_new
        it += 1
    bias = float((up_vals[i] + low_vals.min()) / 2.0)

    keep = alpha > 0
    return SvmModel(
        support_vectors=xs[keep],
        dual_coef=alpha[keep] * y[keep],
        bias=bias,
        sigma=sigma,
        c=c,
        x_mean=mean,
        x_scale=scale,
        support_indices=np.flatnonzero(keep),
        n_iter=it,
    )


def predict(model: PlsrModel | SvmModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Labels and raw scores; a score of exactly 0 maps to +1."""
    scores = model.scores(x)
    labels = np.where(scores >= 0.0, 1, -1)
    return labels, scores


@dataclass(frozen=True)
class CvConfig:
    k: int = 10
    sigma_grid: tuple[float, ...] | None = None
    sigma_scales: tuple[float, ...] = (0.25, 0.5, 1.0, 2.0, 4.0)
    c_grid: tuple[float, ...] = (0.1, 1.0, 10.0, 100.0)
    component_grid: tuple[int, ...] | None = None
    max_components: int = 8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 2:
            raise ValueError(f"k must be >= 2, got {self.k}")
        if self.sigma_grid is not None and not self.sigma_grid:
            raise ValueError("sigma_grid must not be empty")
        for name in ("sigma_scales", "c_grid"):
            if not getattr(self, name):
                raise ValueError(f"{name} must not be empty")
        if self.component_grid is not None and not self.component_grid:
            raise ValueError("component_grid must not be empty")


@dataclass(frozen=True)
class CvSelection:
    kind: str
    best: dict
    cv_accuracy: float
    table: tuple[tuple[dict, float], ...]


def stratified_folds(y: np.ndarray, k: int, seed: int) -> list[np.ndarray]:
    """Seeded stratified folds with sizes as equal as possible.

    Classes are dealt round-robin, each class continuing at the fold where
    the previous one stopped, so overall fold sizes differ by at most one.
    """
    y = np.asarray(y)
    folds: list[list[int]] = [[] for _ in range(k)]
    cursor = 0
    for cls_id, cls in enumerate(np.unique(y)):
        idx = np.flatnonzero(y == cls)
        rng = np.random.default_rng([seed, cls_id])
        idx = idx[rng.permutation(idx.size)]
        for offset, sample in enumerate(idx):
            folds[(cursor + offset) % k].append(int(sample))
        cursor = (cursor + idx.size) % k
    classes = np.unique(y)
    if classes.size > 1:
        for f, members in enumerate(folds):
            present = np.unique(y[members]) if members else np.array([])
            if present.size < classes.size:
                raise DataError(f"stratification failed: fold {f} is missing a class")
    return [np.array(sorted(members)) for members in folds]


def median_pairwise_distance(x: np.ndarray) -> float:
    """Median Euclidean distance between distinct standardized rows."""
    mean, scale, _ = _standardize_fit(x)
    xs = (x - mean) / scale
    sq = (
        np.sum(xs**2, axis=1)[:, None]
        + np.sum(xs**2, axis=1)[None, :]
        - 2.0 * (xs @ xs.T)
    )
    iu = np.triu_indices(x.shape[0], k=1)
    dist = np.sqrt(np.maximum(sq[iu], 0.0))
    med = float(np.median(dist))
    return med if med > 0 else 1.0


def _grid_points(x: np.ndarray, cfg: CvConfig, kind: str) -> list[dict]:
    if kind == "plsr":
        if cfg.component_grid is not None:
            comps = cfg.component_grid
        else:
            comps = tuple(range(1, min(cfg.max_components, x.shape[1]) + 1))
        return [{"n_components": int(a)} for a in comps]
    if kind == "svm":
        if cfg.sigma_grid is not None:
            sigmas = cfg.sigma_grid
        else:
            anchor = median_pairwise_distance(x)
            sigmas = tuple(anchor * s for s in cfg.sigma_scales)
        return [{"sigma": float(s), "c": float(c)} for s in sigmas for c in cfg.c_grid]
    raise ValueError(f"unknown classifier kind {kind!r}")


def fit_kind(kind: str, x: np.ndarray, y: np.ndarray, params: dict) -> PlsrModel | SvmModel:
    if kind == "plsr":
        return plsr_fit(x, y, params["n_components"])
    if kind == "svm":
        return svm_fit(x, y, params["sigma"], params["c"])
    raise ValueError(f"unknown classifier kind {kind!r}")


def kfold_select(x: np.ndarray, y: np.ndarray, cfg: CvConfig, kind: str) -> CvSelection:
    """Grid search by stratified k-fold; ties prefer simpler models.

    Tie order: smaller sigma, then smaller C (SVM); fewer components (PLSR).
    The argmax is taken over a totally ordered candidate list, so the result
    does not depend on grid enumeration order.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] < cfg.k:
        raise DataError(f"{x.shape[0]} samples cannot fill {cfg.k} folds")
    folds = stratified_folds(y, cfg.k, cfg.seed)
    candidates = _grid_points(x, cfg, kind)

    table = []
    for params in candidates:
        accs = []
        for f in range(cfg.k):
            val = folds[f]
            train = np.setdiff1d(np.arange(x.shape[0]), val)
            model = fit_kind(kind, x[train], y[train], params)
            labels, _ = predict(model, x[val])
            accs.append(float(np.mean(labels == y[val])))
        table.append((params, float(np.mean(accs))))

    def tie_key(entry: tuple[dict, float]):
        params, acc = entry
        if kind == "svm":
            return (-acc, params["sigma"], params["c"])
        return (-acc, params["n_components"])

    best_params, best_acc = min(table, key=tie_key)
    return CvSelection(kind=kind, best=best_params, cv_accuracy=best_acc, table=tuple(table))


def model_to_dict(model: PlsrModel | SvmModel, train_config: dict | None = None) -> dict:
    cfg_hash = hashlib.sha256(
        json.dumps(train_config or {}, sort_keys=True).encode()
    ).hexdigest()
    if isinstance(model, PlsrModel):
        payload = {
            "kind": "plsr",
            "n_components": model.n_components,
            "x_mean": model.x_mean.tolist(),
            "x_scale": model.x_scale.tolist(),
            "y_mean": model.y_mean,
            "weights": model.weights.tolist(),
            "x_loadings": model.x_loadings.tolist(),
            "y_loadings": model.y_loadings.tolist(),
            "beta": model.beta.tolist(),
            "decision_threshold": model.decision_threshold,
            "clamped": model.clamped,
            "zero_variance_features": list(model.zero_variance_features),
        }
    else:
        payload = {
            "kind": "svm",
            "support_vectors": model.support_vectors.tolist(),
            "dual_coef": model.dual_coef.tolist(),
            "bias": model.bias,
            "sigma": model.sigma,
            "c": model.c,
            "x_mean": model.x_mean.tolist(),
            "x_scale": model.x_scale.tolist(),
            "support_indices": model.support_indices.tolist(),
            "n_iter": model.n_iter,
        }
    payload["train_config_hash"] = cfg_hash
    return payload


def model_from_dict(payload: dict) -> PlsrModel | SvmModel:
    kind = payload.get("kind")
    if kind == "plsr":
        return PlsrModel(
            n_components=payload["n_components"],
            x_mean=np.array(payload["x_mean"]),
            x_scale=np.array(payload["x_scale"]),
            y_mean=payload["y_mean"],
            weights=np.array(payload["weights"]),
            x_loadings=np.array(payload["x_loadings"]),
            y_loadings=np.array(payload["y_loadings"]),
            beta=np.array(payload["beta"]),
            decision_threshold=payload.get("decision_threshold", 0.0),
            clamped=payload.get("clamped", False),
            zero_variance_features=tuple(payload.get("zero_variance_features", ())),
        )
    if kind == "svm":
        return SvmModel(
            support_vectors=np.array(payload["support_vectors"]),
            dual_coef=np.array(payload["dual_coef"]),
            bias=payload["bias"],
            sigma=payload["sigma"],
            c=payload["c"],
            x_mean=np.array(payload["x_mean"]),
            x_scale=np.array(payload["x_scale"]),
            support_indices=np.array(payload.get("support_indices", []), dtype=int),
            n_iter=payload.get("n_iter", 0),
        )
    raise DataError(f"unknown model kind {kind!r}")


def save_model(model: PlsrModel | SvmModel, path: str | Path,
               train_config: dict | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(model_to_dict(model, train_config), indent=2) + "\n")
    return path


def load_model(path: str | Path) -> PlsrModel | SvmModel:
    try:
        return model_from_dict(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read model {path}: {exc}") from exc
