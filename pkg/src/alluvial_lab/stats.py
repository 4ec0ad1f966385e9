"""Regression, factor analysis and cross-validated weight fitting."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import betainc

from .core import FeatureVector, ModelWeights
from .errors import DegenerateVariable, InsufficientData, SingularDesign

FEATURE_NAMES = ("t", "e", "f", "c")


@dataclass(frozen=True)
class RegressionResult:
    coefficients: np.ndarray
    standardized_betas: np.ndarray
    intercept: float
    r_squared: float
    p_values: np.ndarray
    standard_errors: np.ndarray
    n: int

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        return self.intercept + X @ self.coefficients


def t_sf_two_sided(t, df):
    """P(|T| >= |t|) for Student's t, via the regularized incomplete beta."""
    t = np.asarray(t, dtype=float)
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def ols(y, X) -> RegressionResult:
    """Least squares with intercept, solved through a QR decomposition.

    ``X`` is (n, p) without the constant column. p-values are two-sided
    t-tests with n - p - 1 degrees of freedom.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if y.shape != (n,):
        raise ValueError(f"y has shape {y.shape}, expected ({n},)")
    if n <= p + 1:
        raise InsufficientData(f"{n} observations cannot support {p} predictors plus intercept")

    A = np.column_stack([np.ones(n), X])
    Q, R = np.linalg.qr(A)
    diag = np.abs(np.diag(R))
    if diag.min() <= 1e-10 * max(diag.max(), 1.0) * max(n, p + 1):
        raise SingularDesign("design matrix is rank deficient")
    beta = solve_triangular(R, Q.T @ y)
    resid = y - A @ beta
    ssr = float(resid @ resid)
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0.0:
        warnings.warn("target has zero variance; R^2 reported as 0", RuntimeWarning, stacklevel=2)
        r2 = 0.0
    else:
        r2 = float(min(max(1.0 - ssr / sst, 0.0), 1.0))

    df = n - p - 1
    sigma2 = ssr / df
    R_inv = solve_triangular(R, np.eye(p + 1))
    se = np.sqrt(sigma2 * (R_inv**2).sum(axis=1))
    coef = beta[1:]
    with np.errstate(divide="ignore", invalid="ignore"):
        tstat = coef / se[1:]
    pvals = np.where(
        se[1:] > 0,
        t_sf_two_sided(np.nan_to_num(tstat), df),
        np.where(coef == 0, 1.0, 0.0),
    )

    sd_y = y.std(ddof=1)
    std_betas = coef * X.std(axis=0, ddof=1) / sd_y if sd_y > 0 else np.zeros(p)
    return RegressionResult(coef, std_betas, float(beta[0]), r2, np.clip(pvals, 0.0, 1.0), se[1:], n)


@dataclass(frozen=True)
class FactorLoadings:
    loadings: np.ndarray  # variables x components
    explained_variance: np.ndarray
    components: np.ndarray  # unit eigenvectors, variables x components

    @property
    def explained_ratio(self) -> np.ndarray:
        return self.explained_variance / self.explained_variance.sum()


def pca_loadings(X, names=None) -> FactorLoadings:
    """Unrotated principal components of the correlation matrix.

    Loadings are eigenvectors scaled by sqrt(eigenvalue); each component is
    signed so its largest-magnitude entry is positive.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    if p < 2 or n < 3:
        raise InsufficientData(f"need >= 2 variables and >= 3 observations, got {p} and {n}")
    sd = X.std(axis=0, ddof=1)
    for j in range(p):
        if sd[j] == 0:
            name = names[j] if names is not None else j
            raise DegenerateVariable(f"variable {name} has zero variance", name)
    corr = np.corrcoef(X, rowvar=False)
    vals, vecs = np.linalg.eigh(corr)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    for k in range(p):
        j = np.argmax(np.abs(vecs[:, k]))
        if vecs[j, k] < 0:
            vecs[:, k] = -vecs[:, k]
    return FactorLoadings(vecs * np.sqrt(vals), vals, vecs)


@dataclass(frozen=True)
class FoldFit:
    repeat: int
    fold: int
    weights: ModelWeights
    importance: np.ndarray  # standardized betas normalized to sum to 1
    r_squared: float
    test_r_squared: float


@dataclass(frozen=True)
class CrossValReport:
    k: int
    repeats: int
    folds: list[FoldFit]
    weight_mean: np.ndarray
    weight_sd: np.ndarray
    importance_mean: np.ndarray
    importance_sd: np.ndarray
    r_squared_mean: float
    r_squared_sd: float
    test_r_squared_mean: float
    skipped: list[tuple[int, int, str]] = field(default_factory=list)
    label: str = "custom"

    @property
    def weights(self) -> ModelWeights:
        label = self.label if self.label in ("Acc3", "Acc4", "Svc") else "custom"
        return ModelWeights(*(float(w) for w in self.weight_mean), label=label)

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "weights": dict(zip(("w_t", "w_e", "w_f", "w_c"), map(float, self.weight_mean))),
            "weights_sd": dict(zip(("w_t", "w_e", "w_f", "w_c"), map(float, self.weight_sd))),
            "importance": dict(zip(FEATURE_NAMES, map(float, self.importance_mean))),
            "importance_sd": dict(zip(FEATURE_NAMES, map(float, self.importance_sd))),
            "r_squared": float(self.r_squared_mean),
            "r_squared_sd": float(self.r_squared_sd),
            "test_r_squared": float(self.test_r_squared_mean),
            "k": self.k,
            "repeats": self.repeats,
            "fits": len(self.folds),
            "skipped": [list(s) for s in self.skipped],
        }


def _normalized(v: np.ndarray) -> np.ndarray:
    s = v.sum()
    if s == 0:
        raise SingularDesign("fitted coefficients sum to zero; cannot normalize")
    return v / s


def kfold_indices(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    return np.array_split(rng.permutation(n), k)


def fit_weights(features, target, k: int = 5, repeats: int = 10, seed: int = 0, label: str = "custom") -> CrossValReport:
    """Repeated k-fold fit of ``target`` on (t, e, f, c).

    Each fold fits a multiple regression on the training part. The fold's
    ModelWeights are its raw coefficients rescaled to sum to 1, so they plug
    straight into ``core.score`` like the published equations; normalized
    standardized betas are kept as ``importance``. Folds with a singular
    design are skipped and listed in ``skipped``.
    """
    X = np.array([FeatureVector(*fv) for fv in features], dtype=float)
    y = np.asarray(target, dtype=float)
    n = len(X)
    if k < 2:
        raise InsufficientData("k must be at least 2")
    if n < k:
        raise InsufficientData(f"{n} charts cannot be split into {k} folds")
    if y.shape != (n,):
        raise ValueError("features and target lengths differ")

    rng = np.random.default_rng(seed)
    fits, skipped = [], []
    for r in range(repeats):
        for f, test in enumerate(kfold_indices(n, k, rng)):
            train = np.setdiff1d(np.arange(n), test)
            try:
                res = ols(y[train], X[train])
                w = _normalized(res.coefficients)
                imp = _normalized(res.standardized_betas)
            except (SingularDesign, InsufficientData) as exc:
                skipped.append((r, f, str(exc)))
                continue
            pred = res.predict(X[test])
            sst = ((y[test] - y[test].mean()) ** 2).sum()
            test_r2 = 1.0 - ((y[test] - pred) ** 2).sum() / sst if sst > 0 else 0.0
            fits.append(FoldFit(r, f, ModelWeights(*map(float, w)), imp, res.r_squared, float(test_r2)))
    if not fits:
        raise SingularDesign(f"every fold was singular: {skipped[0][2] if skipped else ''}")

    W = np.array([fit.weights.as_tuple() for fit in fits])
    I = np.array([fit.importance for fit in fits])
    r2 = np.array([fit.r_squared for fit in fits])
    ddof = 1 if len(fits) > 1 else 0
    return CrossValReport(
        k,
        repeats,
        fits,
        W.mean(axis=0),
        W.std(axis=0, ddof=ddof),
        I.mean(axis=0),
        I.std(axis=0, ddof=ddof),
        float(r2.mean()),
        float(r2.std(ddof=ddof)),
        float(np.mean([fit.test_r_squared for fit in fits])),
        skipped,
        label,
    )


def load_weights(data: dict) -> ModelWeights:
    """ModelWeights from a weights.json document (or a plain w_* mapping)."""
    w = data.get("weights", data)
    label = data.get("label", "custom")
    label = label if label in ModelWeights.LABELS else "custom"
    return ModelWeights(float(w["w_t"]), float(w["w_e"]), float(w["w_f"]), float(w["w_c"]), label)
