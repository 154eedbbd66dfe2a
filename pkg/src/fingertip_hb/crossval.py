"""Seeded k-fold cross-validation of the PLS model and report emission."""

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .pls import PlsConfig, PlsError, pls_fit, predict_matrix
from .rng import permutation


@dataclass(frozen=True)
class FoldAssignment:
    n: int
    k: int
    assignment: tuple

    def folds(self):
        """Indices of each fold, in fold order."""
        a = np.asarray(self.assignment)
        return [np.flatnonzero(a == f) for f in range(self.k)]


@dataclass
class FoldResult:
    fold: int
    test_ids: list
    r2: float | None
    rmse: float


@dataclass
class PredictionRecord:
    id: str
    y_true: float
    y_pred: float
    residual: float


@dataclass
class CvReport:
    r2: float
    rmse: float
    per_fold: list
    predictions: list
    config: dict
    train_r2: float | None = None
    refit_predictions: list = field(default_factory=list)


def kfold_split(n, k, seed):
    """Shuffle ``range(n)`` with the seeded xoshiro256** stream and cut it
    into ``k`` contiguous blocks; the first ``n % k`` blocks get one extra."""
    if k < 2:
        raise ValueError(f"k must be at least 2, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of observations n={n}")
    perm = permutation(n, seed)
    base, extra = divmod(n, k)
    assignment = [0] * n
    pos = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        for idx in perm[pos:pos + size]:
            assignment[idx] = fold
        pos += size
    return FoldAssignment(n, k, tuple(assignment))


def r_squared(y_true, y_pred):
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.shape != y_pred.shape or y_true.size < 2:
        raise ValueError("r_squared needs two equal-length sequences of at least 2 values")
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    if ss_tot == 0.0:
        raise ValueError("r_squared is undefined for a constant response")
    return 1.0 - float(np.sum((y_true - y_pred) ** 2)) / ss_tot


def _rmse(residuals):
    return float(np.sqrt(np.mean(np.square(residuals))))


def cross_validate(dataset, cfg=PlsConfig(), k=10, seed=0):
    """Out-of-fold predictions for every observation.

    Each fold's standardizer and PLS model are fitted on the other folds
    only. Pooled R^2/RMSE over all out-of-fold predictions are the primary
    metrics; per-fold R^2 (3 points per fold with 30 observations) is advisory.
    A model refitted on all rows is also reported, labeled as training fit.
    """
    n = len(dataset)
    split = kfold_split(n, k, seed)
    y_pred = np.empty(n)
    per_fold = []
    for fold, test in enumerate(split.folds()):
        train = np.setdiff1d(np.arange(n), test)
        if np.all(dataset.y[train] == dataset.y[train][0]):
            raise PlsError(f"fold {fold}: training response is constant")
        try:
            model = pls_fit(dataset.x[train], dataset.y[train], cfg)
        except PlsError as exc:
            raise PlsError(f"fold {fold}: {exc}") from None
        y_pred[test] = predict_matrix(model, dataset.x[test])
        res = dataset.y[test] - y_pred[test]
        try:
            fold_r2 = r_squared(dataset.y[test], y_pred[test])
        except ValueError:
            fold_r2 = None
        per_fold.append(FoldResult(fold, [dataset.ids[i] for i in test], fold_r2, _rmse(res)))

    residuals = dataset.y - y_pred
    records = [
        PredictionRecord(i, float(t), float(p), float(r))
        for i, t, p, r in zip(dataset.ids, dataset.y, y_pred, residuals)
    ]

    refit = pls_fit(dataset.x, dataset.y, cfg)
    fitted = predict_matrix(refit, dataset.x)
    refit_records = [
        PredictionRecord(i, float(t), float(p), float(t - p))
        for i, t, p in zip(dataset.ids, dataset.y, fitted)
    ]
    config = {
        "n_components": cfg.n_components,
        "tol": cfg.tol,
        "max_iter": cfg.max_iter,
        "k": k,
        "seed": int(seed),
        "normalize": bool(dataset.normalize),
        "n_observations": n,
    }
    return CvReport(
        r2=r_squared(dataset.y, y_pred),
        rmse=_rmse(residuals),
        per_fold=per_fold,
        predictions=records,
        config=config,
        train_r2=r_squared(dataset.y, fitted),
        refit_predictions=refit_records,
    )


def residual_report(report, refit=False):
    """Prediction records sorted by ``y_true`` (stable), for plotting."""
    records = report.refit_predictions if refit else report.predictions
    return sorted(records, key=lambda r: r.y_true)


# --- report files -----------------------------------------------------------

def _fmt(v):
    return "" if v is None else format(float(v), ".17g")


def _header_comment(config):
    return "# " + " ".join(f"{k}={str(v).lower() if isinstance(v, bool) else v}" for k, v in config.items())


def write_predictions_csv(path, records, config=None):
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write(_header_comment(config) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "y_true", "y_pred", "residual"])
        for r in records:
            w.writerow([r.id, _fmt(r.y_true), _fmt(r.y_pred), _fmt(r.residual)])


def read_predictions_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(ln for ln in fh if not ln.startswith("#")))
    if not rows or rows[0] != ["id", "y_true", "y_pred", "residual"]:
        raise ValueError(f"{path}: expected header id,y_true,y_pred,residual")
    return [PredictionRecord(r[0], float(r[1]), float(r[2]), float(r[3])) for r in rows[1:]]


def write_folds_csv(path, per_fold, config=None):
    with open(path, "w", newline="") as fh:
        if config is not None:
            fh.write(_header_comment(config) + "\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fold", "n_test", "r2_advisory", "rmse", "test_ids"])
        for f in per_fold:
            w.writerow([f.fold, len(f.test_ids), _fmt(f.r2), _fmt(f.rmse), ";".join(f.test_ids)])


def report_to_dict(report):
    return {
        "pooled_out_of_fold": {"r2": report.r2, "rmse": report.rmse},
        "training_fit": {"r2": report.train_r2, "note": "refit on all observations; not a validation metric"},
        "config": report.config,
        "per_fold": [
            {**asdict(f), "r2_note": "advisory"} for f in report.per_fold
        ],
    }


def write_report(report, out_dir):
    """Write ``report.json``, ``predictions.csv`` (out-of-fold, sorted by
    y_true), ``predictions_refit.csv`` and ``folds.csv`` into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "report.json", "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
    write_predictions_csv(out / "predictions.csv", residual_report(report), report.config)
    write_predictions_csv(out / "predictions_refit.csv", residual_report(report, refit=True), report.config)
    write_folds_csv(out / "folds.csv", report.per_fold, report.config)
    return out
