"""Single-response partial least squares (PLS1) by NIPALS deflation."""

import json
import math
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from .features import Standardizer, apply_standardizer, fit_standardizer

FORMAT_VERSION = 1
COND_LIMIT = 1e12


class PlsError(ValueError):
    """Degenerate input or numerically unusable PLS decomposition."""


@dataclass(frozen=True)
class PlsConfig:
    n_components: int = 10
    tol: float = 1e-10
    max_iter: int = 500

    def __post_init__(self):
        if self.n_components < 1:
            raise ValueError("n_components must be >= 1")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class PlsModel:
    """Fitted PLS1 model.

    ``weights``, ``x_loadings``, ``y_loadings`` and ``scores`` are only
    present on freshly fitted models; a model read back from JSON carries
    just the composed ``coefficients`` and the standardizer.
    """

    coefficients: np.ndarray
    intercept: float
    standardizer: Standardizer
    n_components_used: int
    weights: np.ndarray | None = None
    x_loadings: np.ndarray | None = None
    y_loadings: np.ndarray | None = None
    scores: np.ndarray | None = None
    normalize: bool = False

    def __post_init__(self):
        if self.n_components_used < 1:
            raise PlsError("a PLS model needs at least one component")


@dataclass(frozen=True)
class Prediction:
    hb_gdl: float
    source_id: str = ""


def _back_substitute(r, q):
    """Solve ``r @ c = q`` for upper-triangular ``r``."""
    n = len(q)
    c = np.zeros(n)
    for i in range(n - 1, -1, -1):
        c[i] = (q[i] - r[i, i + 1:] @ c[i + 1:]) / r[i, i]
    return c


def pls_fit(x, y, cfg=PlsConfig(), normalize=False):
    """Fit a PLS1 model on raw predictors ``x`` (N x p) and response ``y``.

    X is standardized (see :func:`fit_standardizer`), y is centered but not
    scaled. Per component ``a``::

        w = Xr' yr / |Xr' yr|      t = Xr w
        p = Xr' t / t't            q = yr' t / t't
        Xr -= t p'                 yr -= q t

    Extraction stops early once ``|Xr' yr|`` drops below ``cfg.tol`` times
    its initial value; ``n_components_used`` records how many were kept.
    The composed coefficients are ``W (P'W)^-1 q`` on standardized X.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.ndim != 2 or x.shape[0] != y.shape[0]:
        raise PlsError(f"x {x.shape} and y {y.shape} do not match")
    n, p = x.shape
    if n < 2:
        raise PlsError("PLS needs at least 2 observations")
    if np.all(y == y[0]):
        raise PlsError("response is constant")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise PlsError("non-finite values in training data")
    if cfg.n_components > min(n - 1, p):
        raise PlsError(f"n_components={cfg.n_components} exceeds min(N-1, p) = {min(n - 1, p)}")

    std = fit_standardizer(x)
    xr = apply_standardizer(std, x)
    y_mean = float(y.mean())
    yr = y - y_mean

    ws, ps, qs, ts = [], [], [], []
    first_norm = None
    for a in range(cfg.n_components):
        cov = xr.T @ yr
        norm = float(np.linalg.norm(cov))
        if first_norm is None:
            if norm == 0.0:
                raise PlsError("predictors carry no covariance with the response (all columns constant?)")
            first_norm = norm
        elif norm < cfg.tol * first_norm:
            break
        w = cov / norm
        t = xr @ w
        tt = float(t @ t)
        p_a = xr.T @ t / tt
        q_a = float(yr @ t) / tt
        xr = xr - np.outer(t, p_a)
        yr = yr - q_a * t
        ws.append(w)
        ps.append(p_a)
        qs.append(q_a)
        ts.append(t)

    W = np.column_stack(ws)
    P = np.column_stack(ps)
    q = np.array(qs)
    R = P.T @ W
    for a in range(1, len(qs) + 1):
        cond = np.linalg.cond(R[:a, :a])
        if not cond < COND_LIMIT:
            raise PlsError(f"P'W is numerically singular at component {a} (condition {cond:.3g})")
    B = W @ _back_substitute(R, q)
    return PlsModel(
        coefficients=B,
        intercept=y_mean,
        standardizer=std,
        n_components_used=len(qs),
        weights=W,
        x_loadings=P,
        y_loadings=q,
        scores=np.column_stack(ts),
        normalize=normalize,
    )


def predict_matrix(model, x):
    """Predictions for every row of ``x`` (or a single vector)."""
    z = apply_standardizer(model.standardizer, x)
    return model.intercept + z @ model.coefficients


def predict_scores(model, x):
    """Predict by projecting component by component instead of through ``B``."""
    if model.weights is None:
        raise PlsError("model has no component matrices (loaded from file?)")
    xr = np.atleast_2d(apply_standardizer(model.standardizer, x)).copy()
    out = np.full(xr.shape[0], model.intercept)
    for a in range(model.n_components_used):
        t = xr @ model.weights[:, a]
        xr -= np.outer(t, model.x_loadings[:, a])
        out += model.y_loadings[a] * t
    return out


def pls_predict(model, v, source_id=None):
    values = getattr(v, "values", v)
    values = np.asarray(values, dtype=np.float64)
    if values.shape != model.coefficients.shape:
        raise PlsError(f"expected a vector of length {model.coefficients.shape[0]}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise PlsError("non-finite input values")
    if source_id is None:
        source_id = getattr(v, "source_id", "")
    return Prediction(float(predict_matrix(model, values)), source_id)


def coefficients(model):
    """``(B, intercept)`` with ``prediction = intercept + standardized(v) @ B``."""
    return model.coefficients.copy(), model.intercept


# --- model file -------------------------------------------------------------

def model_to_dict(model, created_utc=None):
    if created_utc is None:
        created_utc = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
    std = model.standardizer
    return {
        "format_version": FORMAT_VERSION,
        "n_components_used": model.n_components_used,
        "means": [float(v) for v in std.means],
        "scales": [float(v) for v in std.scales],
        "coefficients": [float(v) for v in model.coefficients],
        "intercept": float(model.intercept),
        "normalize_flag": bool(model.normalize),
        "created_utc": created_utc,
    }


def model_from_dict(d):
    if d.get("format_version") != FORMAT_VERSION:
        raise PlsError(f"unsupported model format_version {d.get('format_version')!r}")
    means = np.array(d["means"], dtype=np.float64)
    scales = np.array(d["scales"], dtype=np.float64)
    coef = np.array(d["coefficients"], dtype=np.float64)
    if not (means.shape == scales.shape == coef.shape) or np.any(scales <= 0):
        raise PlsError("inconsistent model arrays")
    if not math.isfinite(d["intercept"]):
        raise PlsError("non-finite intercept")
    std = Standardizer(means, scales, scales == 1.0)
    return PlsModel(coef, float(d["intercept"]), std, int(d["n_components_used"]),
                    normalize=bool(d.get("normalize_flag", False)))


def save_model(model, path, created_utc=None):
    # json writes floats with repr(), the shortest string that reads back bit-exactly
    with open(path, "w") as fh:
        json.dump(model_to_dict(model, created_utc), fh, indent=1)
        fh.write("\n")


def load_model(path):
    with open(path) as fh:
        return model_from_dict(json.load(fh))
