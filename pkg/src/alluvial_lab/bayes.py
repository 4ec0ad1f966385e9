"""Gaussian naive Bayes over (t, e, f, c) with weight-informed class priors.

Class priors blend the training class frequencies with the share of charts
that a weighted complexity model puts in each bin:

    prior = normalize(frequency + lam * weight_mass)

``lam = 1`` counts the weight-derived distribution as one extra corpus of
pseudo-observations. Classes without training charts have no likelihood
and receive zero posterior.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import _kernels
from .core import (
    S_A,
    ComplexityClass,
    FeatureVector,
    ModelWeights,
    classify_scores,
    score,
)
from .errors import InsufficientData

CLASSES = (ComplexityClass.EASY, ComplexityClass.MEDIUM, ComplexityClass.HARD)
# class positions on the normalized-score scale, used for RMSE
CLASS_LEVELS = np.array([0.0, 0.5, 1.0])


@dataclass(frozen=True)
class BayesModel:
    class_priors: np.ndarray  # (3,) over CLASSES
    means: np.ndarray  # (3, 4); rows of absent classes are NaN
    variances: np.ndarray  # (3, 4)
    present: np.ndarray  # (3,) bool
    weights: ModelWeights
    variance_floor: float = 1e-6


@dataclass(frozen=True)
class EvalReport:
    accuracy_mean: float
    accuracy_sd: float
    rmse_mean: float
    rmse_sd: float
    mosaic: dict[str, dict[str, float]]  # chart id -> class frequencies, charts by ascending S_a
    classification_counts: dict[str, int]
    fold_accuracy: list[float] = field(default_factory=list)
    fold_rmse: list[float] = field(default_factory=list)
    stratified: bool = True

    def to_dict(self) -> dict:
        return {
            "accuracy": {"mean": self.accuracy_mean, "sd": self.accuracy_sd},
            "rmse": {"mean": self.rmse_mean, "sd": self.rmse_sd},
            "stratified": self.stratified,
            "classification_counts": self.classification_counts,
            "mosaic": self.mosaic,
        }


def _as_matrix(features) -> np.ndarray:
    return np.array([FeatureVector(*fv) for fv in features], dtype=float).reshape(-1, 4)


def weight_mass(features, weights: ModelWeights) -> np.ndarray:
    """Share of charts the weighted score puts in each bin after min-max scaling."""
    scores = [score(FeatureVector(*fv), weights) for fv in features]
    labels = classify_scores(scores)
    counts = np.array([sum(lab is c for lab in labels) for c in CLASSES], dtype=float)
    return counts / counts.sum()


def train(
    features,
    labels,
    weights: ModelWeights,
    lam: float = 1.0,
    prior_mass=None,
    variance_floor: float = 1e-6,
) -> BayesModel:
    """Fit per-class Gaussian likelihoods and blended priors.

    ``prior_mass`` overrides the weight-derived bin shares when given.
    """
    X = _as_matrix(features)
    labels = [ComplexityClass(lab) for lab in labels]
    if len(X) == 0:
        raise InsufficientData("cannot train on an empty set")
    if len(labels) != len(X):
        raise ValueError("features and labels lengths differ")
    y = np.array([lab.index for lab in labels])
    counts = np.bincount(y, minlength=3).astype(float)
    freq = counts / counts.sum()
    mass = weight_mass(X, weights) if prior_mass is None else np.asarray(prior_mass, dtype=float)
    mass = mass / mass.sum()
    priors = (freq + lam * mass) / (1.0 + lam)

    means = np.full((3, 4), np.nan)
    variances = np.full((3, 4), np.nan)
    for c in range(3):
        rows = X[y == c]
        if len(rows):
            means[c] = rows.mean(axis=0)
            variances[c] = np.maximum(rows.var(axis=0), variance_floor)
    return BayesModel(priors, means, variances, counts > 0, weights, variance_floor)


def log_joint(model: BayesModel, X) -> np.ndarray:
    """(n, 3) unnormalized log posteriors; absent classes are -inf."""
    X = _as_matrix(X)
    out = np.full((len(X), 3), -np.inf)
    idx = np.flatnonzero(model.present)
    with np.errstate(divide="ignore"):
        log_priors = np.log(model.class_priors[idx])
    out[:, idx] = _kernels.joint_log_likelihood(X, model.means[idx], model.variances[idx], log_priors)
    return out


def posterior_from_log(log_joint_rows: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized posteriors and argmax class indices (ties go to the easier class)."""
    lj = np.atleast_2d(log_joint_rows)
    post = np.exp(lj - logsumexp(lj, axis=1, keepdims=True))
    return post, np.argmax(lj, axis=1)


def predict_many(model: BayesModel, X) -> tuple[list[ComplexityClass], np.ndarray]:
    post, idx = posterior_from_log(log_joint(model, X))
    return [CLASSES[i] for i in idx], post


def predict(model: BayesModel, features: FeatureVector) -> tuple[ComplexityClass, np.ndarray]:
    classes, post = predict_many(model, [features])
    return classes[0], post[0]


def stratified_folds(labels, k: int, rng: np.random.Generator) -> tuple[list[np.ndarray], bool]:
    """k test folds; stratified when every present class has at least k charts."""
    y = np.asarray([ComplexityClass(lab).index for lab in labels])
    n = len(y)
    present = [c for c in range(3) if (y == c).any()]
    if any((y == c).sum() < k for c in present):
        warnings.warn(
            "some class has fewer charts than folds; using unstratified folds",
            RuntimeWarning,
            stacklevel=3,
        )
        return [np.sort(f) for f in np.array_split(rng.permutation(n), k)], False
    folds = [[] for _ in range(k)]
    offset = 0
    for c in present:
        members = rng.permutation(np.flatnonzero(y == c))
        for i, m in enumerate(members):
            folds[(offset + i) % k].append(m)
        offset += len(members)
    return [np.sort(np.array(f, dtype=int)) for f in folds], True


def evaluate(
    features,
    chart_ids,
    weights: ModelWeights,
    k: int = 5,
    repeats: int = 10,
    seed: int = 0,
    labels=None,
    lam: float = 1.0,
) -> EvalReport:
    """Repeated stratified k-fold accuracy, RMSE and per-chart binning frequencies.

    Labels default to the tertile-style bins of the weighted score over the
    whole corpus; pass ``labels`` to evaluate against other ground truth.
    """
    X = _as_matrix(features)
    chart_ids = list(chart_ids)
    n = len(X)
    if n < k or k < 2:
        raise InsufficientData(f"{n} charts cannot be split into {k} folds")
    if labels is None:
        labels = classify_scores([score(FeatureVector(*fv), weights) for fv in X])
    labels = [ComplexityClass(lab) for lab in labels]
    y = np.array([lab.index for lab in labels])

    rng = np.random.default_rng(seed)
    counts = np.zeros((n, 3), dtype=int)
    accs, rmses = [], []
    stratified = True
    for _ in range(repeats):
        folds, strat = stratified_folds(labels, k, rng)
        stratified &= strat
        for test in folds:
            if len(test) == 0:
                continue
            train_idx = np.setdiff1d(np.arange(n), test)
            model = train(X[train_idx], [labels[i] for i in train_idx], weights, lam=lam)
            classes, _ = predict_many(model, X[test])
            pred = np.array([c.index for c in classes])
            counts[test, pred] += 1
            accs.append(float((pred == y[test]).mean()))
            rmses.append(float(np.sqrt(((CLASS_LEVELS[pred] - CLASS_LEVELS[y[test]]) ** 2).mean())))

    sa = [score(FeatureVector(*fv), S_A) for fv in X]
    order = sorted(range(n), key=lambda i: (sa[i], chart_ids[i]))
    mosaic = {}
    for i in order:
        total = counts[i].sum()
        mosaic[chart_ids[i]] = {c.value: (counts[i, c.index] / total if total else 0.0) for c in CLASSES}
    ddof = 1 if len(accs) > 1 else 0
    return EvalReport(
        float(np.mean(accs)),
        float(np.std(accs, ddof=ddof)),
        float(np.mean(rmses)),
        float(np.std(rmses, ddof=ddof)),
        mosaic,
        {chart_ids[i]: int(counts[i].sum()) for i in order},
        accs,
        rmses,
        stratified,
    )
