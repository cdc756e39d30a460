"""Conservativeness diagnostics for the simple (fixed-weight) sandwich CI.

The correction term is the part of the variance due to propensity-score
estimation; a negative value means the simple CI is conservative. The
sufficient criteria compare ``gamma * u^T A11^-1 u`` against
``v^T A11^-1 v`` for estimand-specific moment vectors ``u`` and ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import linalg
from .estimands import Estimand, WateEstimate, _check_open_unit
from .exceptions import DimensionMismatch, OutOfDomain, UnsupportedEstimand
from .propensity import Dataset
from .variance import CONTRAST, VarianceComponents


class Hypothesis(str, Enum):
    """Null hypothesis the analyst cares about; fixes the constant gamma."""

    NN = "nn"
    OTHER = "other"

    @classmethod
    def parse(cls, value) -> "Hypothesis":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown hypothesis {value!r}; expected 'nn' or 'other'") from None

    @property
    def gamma(self) -> float:
        # Neyman null bounds |Y0 - Y1| by 1, anything else by 2; gamma = 4 * bound^2
        return 4.0 if self is Hypothesis.NN else 16.0


@dataclass(frozen=True)
class CriterionReport:
    estimand: Estimand
    gamma: float
    lhs: float
    rhs: float
    positivity_precondition_met: bool = True

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs

    def to_dict(self) -> dict:
        return {
            "estimand": self.estimand.value,
            "gamma": self.gamma,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "satisfied": self.satisfied,
            "positivity_precondition_met": self.positivity_precondition_met,
        }


def correction_term(c: VarianceComponents) -> float:
    """``(1, -1)(delta A11^-1 delta^T - B12 A11^-1 B12^T)(1, -1)^T``.

    Defined for every estimand; for the ATE ``delta`` vanishes and the value
    is ``-(b1 - b2)^T A11^-1 (b1 - b2) <= 0``.
    """
    d = CONTRAST @ c.delta
    b = CONTRAST @ c.B12
    return linalg.inv_quadratic(c.A11, d) - linalg.inv_quadratic(c.A11, b)


def _require_att_ato(estimand) -> Estimand:
    kind = Estimand.parse(estimand)
    if kind is Estimand.ATE:
        raise UnsupportedEstimand("criteria are defined for ATT and ATO only")
    return kind


def criterion_vectors(estimand, e, X, res1, res0):
    """Moment vectors ``(u, v)`` and ``A11`` from per-unit quantities.

    ``res1``/``res0`` are the per-unit contributions already identified
    through the observed arm (or taken from potential outcomes directly),
    i.e. such that ``v = mean(res1 * X) + mean(res0 * X)``.
    """
    kind = _require_att_ato(estimand)
    n = X.shape[0]
    A11 = (X.T * (e * (1.0 - e))) @ X / n
    if kind is Estimand.ATT:
        u = X.T @ (e * (1.0 - e)) / n
    else:
        u = X.T @ (e * (1.0 - e) * (1.0 - 2.0 * e)) / n
    v = X.T @ (res1 + res0) / n
    return u, v, A11


def evaluate_from_vectors(estimand, u, v, A11, gamma, positivity=True) -> CriterionReport:
    kind = _require_att_ato(estimand)
    lhs = gamma * linalg.inv_quadratic(A11, u)
    rhs = linalg.inv_quadratic(A11, v)
    return CriterionReport(kind, float(gamma), max(lhs, 0.0), max(rhs, 0.0), positivity)


def covariates_nonnegative(X) -> bool:
    X = np.asarray(X)
    return bool(np.all(X >= 0.0))


def evaluate_criterion(
    data: Dataset, fitted, est: WateEstimate, hypothesis=Hypothesis.OTHER
) -> CriterionReport:
    """Sufficient condition for the simple CI to be conservative (ATT/ATO).

    ATT: ``u = mean(e(1-e) X)``, ``v`` estimates ``E[e (Y0 - mu0) X]``.
    ATO: ``u = mean(e(1-e)(1-2e) X)``, ``v`` estimates
    ``E[e(1-e){e (Y1 - mu1) + (1-e)(Y0 - mu0)} X]``.
    """
    kind = _require_att_ato(est.estimand)
    gamma = Hypothesis.parse(hypothesis).gamma
    e = _check_open_unit(fitted)
    t, y, X = data.treatment, data.outcome, data.covariates
    if kind is Estimand.ATT:
        res1 = np.zeros_like(e)
        res0 = (1.0 - t) * e / (1.0 - e) * (y - est.mu0)
    else:
        res1 = t * e * (1.0 - e) * (y - est.mu1)
        res0 = (1.0 - t) * e * (1.0 - e) * (y - est.mu0)
    u, v, A11 = criterion_vectors(kind, e, X, res1, res0)
    return evaluate_from_vectors(kind, u, v, A11, gamma, covariates_nonnegative(X))


def shape_function(estimand, e):
    """``e(1-e)`` for ATT, ``e(1-e)(1-2e)`` for ATO."""
    kind = _require_att_ato(estimand)
    e = _check_open_unit(e)
    out = e * (1.0 - e)
    if kind is Estimand.ATO:
        out = out * (1.0 - 2.0 * e)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ConditionResult:
    holds: bool
    min_eig: float


def continuous_condition(A11, E_eXX, E_e2_1me_XX, estimand, gamma_het) -> ConditionResult:
    """Linear-outcome sufficient conditions under proportional heterogeneity.

    ATT: ``A11^-1 E[e XX^T] - 2(1 - gamma) I`` positive definite.
    ATO (``gamma > 1``): ``2(gamma-2)/(3(gamma-1)) I - A11^-1 E[e^2(1-e) XX^T]``
    positive definite. ``A11^-1 M`` is similar to the symmetric
    ``L^-1 M L^-T`` (``A11 = L L^T``), so its eigenvalues are real and the
    check is made on that whitened form.
    """
    kind = _require_att_ato(estimand)
    A11 = np.asarray(A11, dtype=float)
    p = A11.shape[0]
    if kind is Estimand.ATT:
        M = np.asarray(E_eXX, dtype=float)
        if M.shape != A11.shape:
            raise DimensionMismatch("moment matrices must share a shape")
        cond = linalg.whiten(A11, M) - 2.0 * (1.0 - gamma_het) * np.eye(p)
    else:
        if not gamma_het > 1.0:
            raise OutOfDomain("the ATO condition is only available for gamma > 1")
        M = np.asarray(E_e2_1me_XX, dtype=float)
        if M.shape != A11.shape:
            raise DimensionMismatch("moment matrices must share a shape")
        k = 2.0 * (gamma_het - 2.0) / (3.0 * (gamma_het - 1.0))
        cond = k * np.eye(p) - linalg.whiten(A11, M)
    lam = linalg.min_eig_sym(cond)
    return ConditionResult(lam > 0.0, lam)


def condition_moments(e, X) -> dict:
    """Empirical ``A11``, ``E[e XX^T]`` and ``E[e^2(1-e) XX^T]``."""
    e = _check_open_unit(e)
    X = np.asarray(X, dtype=float)
    n = X.shape[0]

    def m(weight):
        return (X.T * weight) @ X / n

    return {"A11": m(e * (1.0 - e)), "E_eXX": m(e), "E_e2_1me_XX": m(e**2 * (1.0 - e))}
