"""Regression estimators used to build cross residuals.

Any object with ``fit(dataset, rng) -> model`` where ``model.predict(x)``
returns a vector can be plugged into the test procedure. Three estimators
ship here: gradient-boosted trees with cross-validated round count, k
nearest neighbours and ordinary least squares.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import cdist

from . import _gbt
from .data import Dataset
from .errors import DimensionMismatch, SingularDesign, TooFewRows
from .rng import RngStream

KINDS = ("gbt", "knn", "linear")


@dataclass(frozen=True)
class GBTParams:
    learning_rate: float = 0.15
    max_depth: int = 3
    max_rounds: int = 1000
    early_stop_patience: int = 20
    cv_folds: int = 5
    min_leaf: int = 5
    tol: float = 1e-12

    def __post_init__(self):
        if not 0 < self.learning_rate <= 1:
            raise ValueError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.max_rounds < 0:
            raise ValueError("max_rounds must be >= 0")
        if self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")


@dataclass(frozen=True)
class RegressorSpec:
    kind: str = "gbt"
    gbt: GBTParams = field(default_factory=GBTParams)
    knn_k: int = 10
    seed: int = 0

    def __post_init__(self):
        kind = self.kind.lower()
        if kind not in KINDS:
            raise ValueError(f"unknown regressor kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.knn_k < 1:
            raise ValueError("knn_k must be >= 1")

    def build(self):
        if self.kind == "gbt":
            return GBTRegressor(self.gbt)
        if self.kind == "knn":
            return KNNRegressor(self.knn_k)
        return LinearRegressor()


def _check_x(x, p):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x.reshape(-1, p) if p == 1 else x.reshape(1, -1)
    if x.ndim != 2 or x.shape[1] != p:
        raise DimensionMismatch(f"model expects {p} covariates, got shape {x.shape}")
    return x


def _presort(XT):
    return np.ascontiguousarray(np.argsort(XT, axis=1, kind="stable"))


class GBTModel:
    def __init__(self, init, feats, thrs, vals, learning_rate, p, cv_curve=None):
        self.init = float(init)
        self.feats, self.thrs, self.vals = feats, thrs, vals
        self.learning_rate = learning_rate
        self.p = p
        self.cv_curve = cv_curve

    @property
    def n_rounds(self) -> int:
        return self.feats.shape[0]

    def predict(self, x) -> np.ndarray:
        XT = np.ascontiguousarray(_check_x(x, self.p).T)
        return _gbt.ensemble_predict(
            XT, self.init, self.feats, self.thrs, self.vals, self.learning_rate
        )


class GBTRegressor:
    """Squared-loss gradient boosting; the round count is chosen by k-fold CV.

    Folds come from a seeded shuffle cut into contiguous blocks. All folds
    are boosted in lock step and the mean validation MSE is tracked per
    round; boosting stops after ``early_stop_patience`` rounds without an
    improvement larger than ``tol``, or at ``max_rounds``. The round with
    the lowest CV error (earliest on ties, possibly zero) is then refit on
    all rows starting from the sample mean.
    """

    def __init__(self, params: Optional[GBTParams] = None):
        self.params = params or GBTParams()

    def fold_ids(self, n_rows: int, rng: RngStream) -> np.ndarray:
        perm = rng.generator().permutation(n_rows)
        ids = np.empty(n_rows, dtype=np.int64)
        for k, block in enumerate(np.array_split(perm, self.params.cv_folds)):
            ids[block] = k
        return ids

    def select_rounds(self, d: Dataset, rng: RngStream):
        prm = self.params
        if prm.max_rounds == 0:
            return 0, np.array([np.nan])
        XT = np.ascontiguousarray(d.x.T)
        best, curve = _gbt.cv_curve(
            XT, _presort(XT), np.ascontiguousarray(d.y), self.fold_ids(d.n_rows, rng),
            prm.cv_folds, prm.learning_rate, prm.max_depth, prm.min_leaf,
            prm.max_rounds, prm.early_stop_patience, prm.tol,
        )
        return int(best), curve

    def fit_rounds(self, d: Dataset, rounds: int, cv_curve=None) -> GBTModel:
        prm = self.params
        XT = np.ascontiguousarray(d.x.T)
        init, feats, thrs, vals, train_mse = _gbt.boost(
            XT, _presort(XT), np.ascontiguousarray(d.y), int(rounds),
            prm.learning_rate, prm.max_depth, prm.min_leaf,
        )
        model = GBTModel(init, feats, thrs, vals, prm.learning_rate, d.p, cv_curve)
        model.train_mse = train_mse
        return model

    def fit(self, d: Dataset, rng: Optional[RngStream] = None) -> GBTModel:
        if d.n_rows < self.params.cv_folds:
            raise TooFewRows(f"GBT with {self.params.cv_folds}-fold CV needs at least that many rows")
        rounds, curve = self.select_rounds(d, rng if rng is not None else RngStream(0))
        return self.fit_rounds(d, rounds, curve)


class KNNModel:
    def __init__(self, x, y, k):
        self.x, self.y, self.k = x, y, k
        self.p = x.shape[1]

    def predict(self, x) -> np.ndarray:
        x = _check_x(x, self.p)
        dist = cdist(x, self.x, "sqeuclidean")
        # stable sort: equal distances keep row-index order
        nearest = np.argsort(dist, axis=1, kind="stable")[:, : self.k]
        return self.y[nearest].mean(axis=1)


class KNNRegressor:
    def __init__(self, k: int = 10):
        self.k = int(k)

    def fit(self, d: Dataset, rng: Optional[RngStream] = None) -> KNNModel:
        if d.n_rows < self.k:
            raise TooFewRows(f"k={self.k} neighbours need at least {self.k} rows")
        return KNNModel(d.x, d.y, self.k)


class LinearModel:
    def __init__(self, intercept, coef):
        self.intercept = float(intercept)
        self.coef = coef
        self.p = coef.shape[0]

    def predict(self, x) -> np.ndarray:
        return _check_x(x, self.p) @ self.coef + self.intercept


class LinearRegressor:
    """OLS with intercept, solved by QR of the centred design."""

    def fit(self, d: Dataset, rng: Optional[RngStream] = None) -> LinearModel:
        n, p = d.x.shape
        if n < p + 1:
            raise TooFewRows(f"least squares with {p} covariates needs at least {p + 1} rows")
        xm = d.x.mean(axis=0)
        ym = d.y.mean()
        q, r = np.linalg.qr(d.x - xm)
        diag = np.abs(np.diag(r))
        if diag.max() == 0 or diag.min() <= max(n, p) * np.finfo(float).eps * diag.max():
            raise SingularDesign("design matrix is rank deficient after centring")
        coef = np.linalg.solve(r, q.T @ (d.y - ym))
        return LinearModel(ym - xm @ coef, coef)


def fit(spec: RegressorSpec, d: Dataset, rng: Optional[RngStream] = None):
    """Fit the estimator described by ``spec``; ``rng`` defaults to ``RngStream(spec.seed)``."""
    return spec.build().fit(d, rng if rng is not None else RngStream(spec.seed))


def predict(model, x) -> np.ndarray:
    out = np.asarray(model.predict(x), dtype=np.float64).reshape(-1)
    if not np.isfinite(out).all():
        raise ValueError("regressor produced non-finite predictions")
    return out
