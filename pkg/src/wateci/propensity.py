"""Data container and the logistic propensity-score model."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted

from . import linalg
from .exceptions import (
    DimensionMismatch,
    EmptyArm,
    ExtremePropensityWarning,
    NotPositiveDefinite,
    RankDeficient,
    Separation,
)

MAX_NEWTON_ITER = 100
MAX_HALVINGS = 30
BOUNDARY_TOL = 1e-12
EXTREME_SCORE = 1e-3


@dataclass(frozen=True)
class Dataset:
    """Observed sample: treatment, outcome and design matrix.

    ``covariates`` is the full design, intercept column included. Use
    :meth:`from_arrays` to have the intercept prepended.
    """

    treatment: np.ndarray
    outcome: np.ndarray
    covariates: np.ndarray
    binary_outcome: bool = False

    def __post_init__(self):
        t = np.asarray(self.treatment, dtype=float).ravel()
        y = np.asarray(self.outcome, dtype=float).ravel()
        X = np.asarray(self.covariates, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        n = t.shape[0]
        if n < 2:
            raise ValueError("need at least two units")
        if y.shape[0] != n or X.shape[0] != n:
            raise DimensionMismatch(
                f"treatment has {n} rows, outcome {y.shape[0]}, covariates {X.shape[0]}"
            )
        if not np.all((t == 0) | (t == 1)):
            raise ValueError("treatment must be coded 0/1")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise ValueError("outcome and covariates must be finite")
        if self.binary_outcome and not np.all((y == 0) | (y == 1)):
            raise ValueError("binary-outcome mode requires outcome in {0, 1}")
        for name, arr in (("treatment", t), ("outcome", y), ("covariates", X)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_arrays(cls, X, treatment, outcome, *, add_intercept=True, binary_outcome=False):
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if add_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
        return cls(treatment, outcome, X, binary_outcome=binary_outcome)

    @property
    def n(self) -> int:
        return self.treatment.shape[0]

    @property
    def p(self) -> int:
        return self.covariates.shape[1]

    def take(self, index) -> "Dataset":
        """Row subset / permutation / replication by integer index."""
        index = np.asarray(index)
        return Dataset(
            self.treatment[index],
            self.outcome[index],
            self.covariates[index],
            binary_outcome=self.binary_outcome,
        )


@dataclass(frozen=True)
class PropensityFit:
    alpha: np.ndarray
    fitted: np.ndarray
    iterations: int
    final_score_norm: float
    loglik_path: tuple = field(default=(), repr=False)

    @property
    def loglik(self) -> float:
        return self.loglik_path[-1]

    def diagnostics(self) -> dict:
        return {
            "alpha": [float(a) for a in self.alpha],
            "iterations": self.iterations,
            "final_score_norm": self.final_score_norm,
            "loglik": self.loglik,
            "min_score": float(self.fitted.min()),
            "max_score": float(self.fitted.max()),
        }


def _loglik(eta: np.ndarray, t: np.ndarray) -> float:
    # sum t*eta - log(1 + exp(eta)), overflow-safe
    return float(np.sum(t * eta - np.logaddexp(0.0, eta)))


def fit_logistic(data: Dataset) -> PropensityFit:
    """Maximum-likelihood logistic regression of treatment on covariates.

    Newton-Raphson from zero with step-halving; converged when the score
    sup-norm is at most ``1e-10 * n``.
    """
    X, t, n = data.covariates, data.treatment, data.n
    n_treated = int(t.sum())
    if n_treated == 0 or n_treated == n:
        raise EmptyArm("both treatment arms must be non-empty")
    tol = 1e-10 * n
    alpha = np.zeros(data.p)
    eta = X @ alpha
    ll = _loglik(eta, t)
    path = [ll]
    for it in range(1, MAX_NEWTON_ITER + 1):
        e = expit(eta)
        score = X.T @ (t - e)
        if np.max(np.abs(score)) <= tol:
            return _finish(alpha, e, it - 1, score, path)
        info = (X.T * (e * (1.0 - e))) @ X
        try:
            step = linalg.solve_spd(info, score)
        except NotPositiveDefinite as exc:
            raise RankDeficient(f"information matrix is singular: {exc}") from exc
        scale = 1.0
        # rounding slack: near the optimum the gain is below float resolution
        slack = 1e-12 * max(1.0, abs(ll))
        for _ in range(MAX_HALVINGS + 1):
            cand = alpha + scale * step
            cand_eta = X @ cand
            cand_ll = _loglik(cand_eta, t)
            if cand_ll >= ll - slack:
                break
            scale *= 0.5
        else:
            raise Separation("step-halving failed to increase the log-likelihood")
        alpha, eta, ll = cand, cand_eta, cand_ll
        path.append(ll)
    e = expit(eta)
    score = X.T @ (t - e)
    if np.max(np.abs(score)) <= tol:
        return _finish(alpha, e, MAX_NEWTON_ITER, score, path)
    raise Separation(
        f"no convergence in {MAX_NEWTON_ITER} Newton iterations "
        f"(score norm {np.max(np.abs(score)):.3e}); possible separation"
    )


def _finish(alpha, e, iterations, score, path) -> PropensityFit:
    edge = np.minimum(e, 1.0 - e)
    if np.min(edge) <= BOUNDARY_TOL:
        raise Separation("fitted propensity score within 1e-12 of 0 or 1")
    if np.min(edge) < EXTREME_SCORE:
        warnings.warn(
            f"extreme fitted propensity score (min distance to boundary {np.min(edge):.2e})",
            ExtremePropensityWarning,
            stacklevel=3,
        )
    alpha = np.array(alpha)
    alpha.setflags(write=False)
    e.setflags(write=False)
    return PropensityFit(alpha, e, iterations, float(np.max(np.abs(score))), tuple(path))


def predict(fit: PropensityFit, covariates) -> float | np.ndarray:
    """expit(x^T alpha) for one covariate row or a matrix of rows."""
    x = np.asarray(covariates, dtype=float)
    if x.shape[-1] != fit.alpha.shape[0]:
        raise DimensionMismatch(f"expected {fit.alpha.shape[0]} covariates, got {x.shape[-1]}")
    out = expit(x @ fit.alpha)
    return float(out) if x.ndim == 1 else out


class LogisticPropensity(ClassifierMixin, BaseEstimator):
    """Unpenalised logistic propensity model with an sklearn interface.

    Parameters
    ----------
    fit_intercept : bool, default=True
        Prepend a column of ones to ``X``.

    Attributes
    ----------
    coef_ : ndarray of shape (p,)
        Coefficients including the intercept (first) when ``fit_intercept``.
    fit_ : PropensityFit
    """

    def __init__(self, fit_intercept=True):
        self.fit_intercept = fit_intercept

    def _design(self, X):
        X = check_array(X, dtype=float)
        if self.fit_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
        return X

    def fit(self, X, t):
        X = self._design(X)
        t = np.asarray(t, dtype=float).ravel()
        self.fit_ = fit_logistic(Dataset(t, np.zeros_like(t), X))
        self.coef_ = self.fit_.alpha
        self.classes_ = np.array([0, 1])
        self.n_features_in_ = X.shape[1] - int(self.fit_intercept)
        return self

    def predict_proba(self, X):
        check_is_fitted(self, "fit_")
        e = predict(self.fit_, self._design(X))
        return np.column_stack([1.0 - e, e])

    def predict(self, X):
        return (self.predict_proba(X)[:, 1] > 0.5).astype(int)
