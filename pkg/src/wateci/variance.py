"""Sandwich variances for the IPW estimator.

The "simple" variance treats the fitted weights as known; the "exact" one
propagates propensity-score estimation through the stacked estimating
equation ``psi = (X(T - e), W T (Y - mu1), W (1 - T)(Y - mu0))``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from . import linalg
from .estimands import Estimand, WateEstimate, unit_weight, weight_derivative, weight_value
from .exceptions import InvalidLevel, SingularBread
from .propensity import Dataset

CONTRAST = np.array([1.0, -1.0])


@dataclass(frozen=True)
class VarianceComponents:
    """Empirical moment matrices (all means divide by ``n``).

    ``a1``/``a0`` are the per-arm Hajek normalisers ``mean(W T)`` and
    ``mean(W (1 - T))``; ``score_outer`` is ``mean((T - e)^2 X X^T)``. When
    left as ``None`` they default to ``a22`` and ``A11`` respectively, in which
    case :func:`exact_variance` is exactly the population-form expression
    ``(B22 + delta A11^-1 delta^T - B12 A11^-1 B12^T) / a22^2``.
    """

    A11: np.ndarray
    a22: float
    B12: np.ndarray
    B22: np.ndarray
    delta: np.ndarray
    n: int
    estimand: Estimand
    a1: float | None = None
    a0: float | None = None
    score_outer: np.ndarray | None = None

    @property
    def norm1(self) -> float:
        return self.a22 if self.a1 is None else self.a1

    @property
    def norm0(self) -> float:
        return self.a22 if self.a0 is None else self.a0

    @property
    def meat_alpha(self) -> np.ndarray:
        return self.A11 if self.score_outer is None else self.score_outer

    def to_dict(self) -> dict:
        def mat(m):
            return np.asarray(m).tolist()

        return {
            "estimand": self.estimand.value,
            "n": self.n,
            "A11": mat(self.A11),
            "a22": self.a22,
            "a1": self.norm1,
            "a0": self.norm0,
            "B12": mat(self.B12),
            "B22": mat(self.B22),
            "delta": mat(self.delta),
        }


@dataclass(frozen=True)
class CiResult:
    tau: float
    variance: float
    lower: float
    upper: float
    level: float
    method: str

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def excludes(self, value: float = 0.0) -> bool:
        return value < self.lower or value > self.upper

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "tau": self.tau,
            "variance": self.variance,
            "se": float(np.sqrt(self.variance)),
            "lower": self.lower,
            "upper": self.upper,
            "level": self.level,
        }


def estimate_components(data: Dataset, fitted, est: WateEstimate) -> VarianceComponents:
    e = np.asarray(fitted, dtype=float)
    t, y, X, n = data.treatment, data.outcome, data.covariates, data.n
    kind = est.estimand
    w = np.asarray(weight_value(kind, e))
    dw = np.asarray(weight_derivative(kind, e))
    W = np.asarray(unit_weight(kind, e, t))
    c = 1.0 - t
    r1 = t * (y - est.mu1)
    r0 = c * (y - est.mu0)

    A11 = (X.T * (e * (1.0 - e))) @ X / n
    S = (X.T * (t - e) ** 2) @ X / n
    b1 = X.T @ (w * r1 * (1.0 - e) / e) / n
    b2 = -X.T @ (w * r0 * e / (1.0 - e)) / n
    d1 = X.T @ (dw * r1 * (1.0 - e)) / n
    d2 = X.T @ (dw * r0 * e) / n
    B22 = np.diag(
        [
            np.sum(w**2 * r1**2 / e**2) / n,
            np.sum(w**2 * r0**2 / (1.0 - e) ** 2) / n,
        ]
    )
    return VarianceComponents(
        A11=A11,
        a22=float(np.mean(w)),
        B12=np.vstack([b1, b2]),
        B22=B22,
        delta=np.vstack([d1, d2]),
        n=n,
        estimand=kind,
        a1=float(np.sum(W * t) / n),
        a0=float(np.sum(W * c) / n),
        score_outer=S,
    )


def simple_variance(c: VarianceComponents) -> float:
    """Variance of tau-hat with the weights treated as fixed."""
    return float((c.B22[0, 0] / c.norm1**2 + c.B22[1, 1] / c.norm0**2) / c.n)


def exact_variance(c: VarianceComponents) -> float:
    """Variance of tau-hat accounting for the estimated propensity score."""
    b1, b2 = c.B12
    d1, d2 = c.delta
    # influence of alpha-hat on tau-hat, and covariance of the tau and alpha scores
    g = (d1 - b1) / c.norm1 - (d2 - b2) / c.norm0
    h = b1 / c.norm1 - b2 / c.norm0
    Ag = linalg.solve_spd(c.A11, g)
    total = (
        c.B22[0, 0] / c.norm1**2
        + c.B22[1, 1] / c.norm0**2
        + 2.0 * linalg.quadratic_form(h, Ag)
        + float(Ag @ c.meat_alpha @ Ag)
    )
    return float(total / c.n)


_Z_TABLE = {0.90: 1.644854, 0.95: 1.959964, 0.99: 2.575829}


def normal_quantile(level: float) -> float:
    """Two-sided critical value ``z_{(1 + level) / 2}``."""
    if not 0.0 < level < 1.0:
        raise InvalidLevel(f"confidence level must be in (0, 1), got {level}")
    if level in _Z_TABLE:
        return _Z_TABLE[level]
    return float(ndtri(0.5 * (1.0 + level)))


def confidence_interval(tau: float, variance: float, level: float = 0.95, method: str = "simple") -> CiResult:
    if not variance >= 0.0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    half = normal_quantile(level) * np.sqrt(variance)
    return CiResult(float(tau), float(variance), float(tau - half), float(tau + half), level, method)


# -- independent check: numerical-Jacobian M-estimation sandwich ------------


def stacked_scores(theta: np.ndarray, data: Dataset, estimand) -> np.ndarray:
    """Per-unit stacked estimating functions, shape ``(n, p + 2)``."""
    X, t, y = data.covariates, data.treatment, data.outcome
    p = data.p
    alpha, mu1, mu0 = theta[:p], theta[p], theta[p + 1]
    e = 1.0 / (1.0 + np.exp(-(X @ alpha)))
    W = np.asarray(unit_weight(estimand, e, t))
    return np.column_stack([X * (t - e)[:, None], W * t * (y - mu1), W * (1.0 - t) * (y - mu0)])


def _mean_score(theta, data, estimand):
    return stacked_scores(theta, data, estimand).mean(axis=0)


def _numerical_jacobian(theta, data, estimand, step=1e-6):
    k = theta.shape[0]
    J = np.empty((k, k))
    for j in range(k):
        hi, lo = theta.copy(), theta.copy()
        hi[j] += step
        lo[j] -= step
        J[:, j] = (_mean_score(hi, data, estimand) - _mean_score(lo, data, estimand)) / (2.0 * step)
    return J


def solve_stacked(data: Dataset, estimand, tol=1e-13, max_iter=100) -> np.ndarray:
    """Root of the averaged stacked estimating equation by damped Newton."""
    t, y = data.treatment, data.outcome
    theta = np.concatenate([np.zeros(data.p), [y[t == 1].mean(), y[t == 0].mean()]])
    f = _mean_score(theta, data, estimand)
    for _ in range(max_iter):
        if np.max(np.abs(f)) <= tol * max(1.0, np.max(np.abs(data.covariates))):
            return theta
        step = np.linalg.solve(_numerical_jacobian(theta, data, estimand), f)
        scale = 1.0
        while scale > 1e-8:
            cand = theta - scale * step
            fc = _mean_score(cand, data, estimand)
            if np.linalg.norm(fc) < np.linalg.norm(f):
                break
            scale *= 0.5
        theta, f = cand, fc
    if np.max(np.abs(f)) <= 1e-10:
        return theta
    raise SingularBread("stacked estimating equation did not converge")


def oracle_sandwich(data: Dataset, estimand) -> float:
    """Variance of tau-hat from ``bread^-1 meat bread^-T / n``.

    The bread is a central-difference Jacobian (step 1e-6) of the averaged
    stacked score; the meat is the average outer product of the scores.
    """
    kind = Estimand.parse(estimand)
    theta = solve_stacked(data, kind)
    bread = _numerical_jacobian(theta, data, kind)
    psi = stacked_scores(theta, data, kind)
    meat = psi.T @ psi / data.n
    if np.linalg.cond(bread) > 1e12:
        raise SingularBread("bread matrix is numerically singular")
    c = np.zeros(theta.shape[0])
    c[-2:] = CONTRAST
    u = np.linalg.solve(bread.T, c)
    return float(u @ meat @ u / data.n)
