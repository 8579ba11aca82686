"""Polarimetric features, quality metrics, and a small CV classification harness.

The five retained features per pixel are the three channel intensities
C11, C22, C33 plus the magnitude and phase of the co-pol correlation C13
(C12 and C23 are dropped as uninformative for vegetation state). The
classifiers are deliberately simple; the harness exists to compare
covariance estimators against each other, not to maximise accuracy.
"""

from __future__ import annotations

import csv
import json
import warnings

import numpy as np

from .core import as_covariance_field

FEATURE_NAMES = ("c11", "c22", "c33", "abs_c13", "arg_c13")


def extract_features(cov) -> np.ndarray:
    """Per-pixel feature vectors (..., 5) from a covariance field.

    arg C13 is defined as 0 when |C13| = 0.
    """
    cov = np.asarray(cov, dtype=np.complex128)
    if cov.shape[-2:] != (3, 3):
        raise ValueError(f"expected (..., 3, 3) matrices, got {cov.shape}")
    c13 = cov[..., 0, 2]
    out = np.empty(cov.shape[:-2] + (5,), dtype=np.float64)
    out[..., 0] = cov[..., 0, 0].real
    out[..., 1] = cov[..., 1, 1].real
    out[..., 2] = cov[..., 2, 2].real
    out[..., 3] = np.abs(c13)
    out[..., 4] = np.angle(c13)
    return out


def enl(intensities) -> float:
    """Equivalent number of looks: mean^2 / variance of an intensity sample.

    A region with zero variance reports the distinguished value +inf.
    """
    arr = np.asarray(intensities, dtype=np.float64).ravel()
    if arr.size < 2:
        raise ValueError("ENL needs at least 2 samples")
    mean = arr.mean()
    if not mean > 0.0:
        raise ValueError("ENL needs a positive mean intensity")
    var = arr.var()
    if var == 0.0:
        return float("inf")
    return float(mean * mean / var)


def matrix_error(estimate, sigmas, class_map) -> dict:
    """Mean relative Frobenius error against per-class truth matrices.

    Returns {"per_class": {class_id: error}, "overall": error} where the
    overall value is the mean over all pixels.
    """
    cov = as_covariance_field(estimate)
    sigmas = np.asarray(sigmas, dtype=np.complex128)
    class_map = np.asarray(class_map)
    if class_map.shape != cov.shape[:2]:
        raise ValueError(
            f"class map shape {class_map.shape} does not match field "
            f"{cov.shape[:2]}")
    if class_map.min() < 0 or class_map.max() >= len(sigmas):
        raise ValueError(
            f"class map contains ids outside [0, {len(sigmas)})")
    truth = sigmas[class_map]
    diff = cov - truth
    err = np.sqrt((diff.real ** 2 + diff.imag ** 2).sum((-2, -1)))
    norm = np.sqrt((truth.real ** 2 + truth.imag ** 2).sum((-2, -1)))
    rel = err / norm
    per_class = {}
    for k in np.unique(class_map):
        per_class[int(k)] = float(rel[class_map == k].mean())
    return {"per_class": per_class, "overall": float(rel.mean())}


def kfold_indices(n_samples, k, seed=0):
    """Deterministic shuffled k-fold split: list of (train_idx, test_idx)."""
    if k < 2:
        raise ValueError("k-fold needs k >= 2")
    if k > n_samples:
        raise ValueError(f"cannot split {n_samples} samples into {k} folds")
    perm = np.random.default_rng(seed).permutation(n_samples)
    parts = np.array_split(perm, k)
    splits = []
    for i in range(k):
        test = parts[i]
        train = np.concatenate([parts[j] for j in range(k) if j != i])
        splits.append((train, test))
    return splits


def group_kfold_indices(groups, k, seed=0):
    """k-fold split where no group spans folds.

    Groups are shuffled with the seed, then assigned greedily (largest
    first) to the currently smallest fold, which balances fold sizes while
    keeping the assignment deterministic.
    """
    groups = np.asarray(groups)
    uniq, inverse, counts = np.unique(groups, return_inverse=True,
                                      return_counts=True)
    if k < 2:
        raise ValueError("k-fold needs k >= 2")
    if k > len(uniq):
        raise ValueError(f"cannot split {len(uniq)} groups into {k} folds")
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(uniq))
    order = order[np.argsort(-counts[order], kind="stable")]
    fold_sizes = np.zeros(k, dtype=np.int64)
    fold_of_group = np.empty(len(uniq), dtype=np.int64)
    for g in order:
        f = int(np.argmin(fold_sizes))
        fold_of_group[g] = f
        fold_sizes[f] += counts[g]
    fold_of_sample = fold_of_group[inverse]
    splits = []
    for f in range(k):
        test = np.flatnonzero(fold_of_sample == f)
        train = np.flatnonzero(fold_of_sample != f)
        splits.append((train, test))
    return splits


def _standardize(train, test):
    mu = train.mean(axis=0)
    sd = train.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    return (train - mu) / sd, (test - mu) / sd


def _centroid_predict(x_train, y_train, x_test, classes):
    centroids = np.stack([x_train[y_train == c].mean(axis=0) for c in classes])
    d2 = ((x_test[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)
    return classes[np.argmin(d2, axis=1)]


def _knn_predict(x_train, y_train, x_test, classes, knn_k):
    knn_k = min(int(knn_k), len(x_train))
    d2 = ((x_test ** 2).sum(1)[:, None] + (x_train ** 2).sum(1)[None, :]
          - 2.0 * x_test @ x_train.T)
    nearest = np.argpartition(d2, knn_k - 1, axis=1)[:, :knn_k]
    class_index = np.searchsorted(classes, y_train[nearest])
    votes = np.apply_along_axis(
        lambda row: np.bincount(row, minlength=len(classes)), 1, class_index)
    # argmax breaks vote ties toward the smallest class label
    return classes[np.argmax(votes, axis=1)]


def crossval_classify(features, labels, k=4, grouped=False, groups=None,
                      classifier="centroid", knn_k=5, seed=0) -> dict:
    """k-fold (optionally group-k-fold) cross-validated classification.

    Features are z-scored with statistics from the training fold only.
    Folds whose training part misses a class are skipped with a warning.
    Returns a report dict with per-fold accuracies, mean/min/max, and an
    aggregated confusion matrix (rows true, columns predicted).
    """
    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels)
    if x.ndim != 2 or len(x) != len(y):
        raise ValueError("features must be (n, f) aligned with n labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise ValueError("classification needs at least 2 classes")
    if classifier not in ("centroid", "knn"):
        raise ValueError(f"unknown classifier {classifier!r}")
    if grouped:
        if groups is None:
            raise ValueError("grouped cross-validation requires group ids")
        splits = group_kfold_indices(np.asarray(groups), k, seed)
    else:
        splits = kfold_indices(len(y), k, seed)

    fold_accuracy = []
    evaluated = []
    skipped = []
    confusion = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for f, (train, test) in enumerate(splits):
        missing = [c for c in classes if not (y[train] == c).any()]
        if missing:
            warnings.warn(
                f"fold {f} skipped: classes {missing} absent from training set")
            skipped.append(f)
            continue
        x_train, x_test = _standardize(x[train], x[test])
        if classifier == "centroid":
            pred = _centroid_predict(x_train, y[train], x_test, classes)
        else:
            pred = _knn_predict(x_train, y[train], x_test, classes, knn_k)
        fold_accuracy.append(float((pred == y[test]).mean()))
        evaluated.append(f)
        ti = np.searchsorted(classes, y[test])
        pi = np.searchsorted(classes, pred)
        np.add.at(confusion, (ti, pi), 1)
    if not fold_accuracy:
        raise ValueError("every fold was skipped; no class-complete training set")

    return {
        "classifier": classifier,
        "k": int(k),
        "grouped": bool(grouped),
        "seed": int(seed),
        "n_samples": int(len(y)),
        "classes": [int(c) for c in classes],
        "evaluated_folds": evaluated,
        "skipped_folds": skipped,
        "fold_accuracy": fold_accuracy,
        "mean_accuracy": float(np.mean(fold_accuracy)),
        "min_accuracy": float(np.min(fold_accuracy)),
        "max_accuracy": float(np.max(fold_accuracy)),
        "confusion": confusion.tolist(),
    }


def write_fold_csv(report, path):
    """Per-fold accuracies as CSV rows (fold, accuracy)."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["fold", "accuracy"])
        for fold, acc in zip(report["evaluated_folds"], report["fold_accuracy"]):
            writer.writerow([fold, repr(acc)])


def write_report_json(obj, path):
    """JSON summary (single report or {method: report} mapping)."""
    with open(path, "w", encoding="ascii") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
