"""Scikit-learn style front end tying the pieces together."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .criteria import Hypothesis, correction_term, evaluate_criterion
from .estimands import Estimand, estimate_wate
from .propensity import Dataset, fit_logistic
from .variance import confidence_interval, estimate_components, exact_variance, simple_variance


class WATEEstimator(BaseEstimator):
    """IPW estimate of a weighted average treatment effect with simple and exact CIs.

    Parameters
    ----------
    estimand : {"ate", "att", "ato"}, default="ate"
    level : float, default=0.95
        Confidence level of both intervals.
    hypothesis : {"nn", "other"}, default="other"
        Null hypothesis of interest; selects gamma = 4 ("nn") or 16 in the
        conservativeness criterion.
    fit_intercept : bool, default=True
        Prepend an intercept column to ``X`` for the propensity model.

    Attributes
    ----------
    propensity_ : ndarray of shape (n_samples,)
        Scores used for weighting (fitted, or as supplied to :meth:`fit`).
    propensity_fit_ : PropensityFit or None
        ``None`` when scores were supplied.
    estimate_ : WateEstimate
    components_ : VarianceComponents
    simple_ci_, exact_ci_ : CiResult
    correction_ : float
        Propensity-estimation part of the variance (negative: simple CI is
        conservative).
    criterion_ : CriterionReport or None
        Only for ATT and ATO.

    Examples
    --------
    >>> import numpy as np
    >>> rng = np.random.default_rng(0)
    >>> X = rng.normal(size=(400, 2))
    >>> t = rng.binomial(1, 1 / (1 + np.exp(-X[:, 0])))
    >>> y = rng.binomial(1, 0.3 + 0.1 * t)
    >>> est = WATEEstimator(estimand="att").fit(X, t, y)
    >>> est.exact_ci_.lower < est.tau_ < est.exact_ci_.upper
    True
    """

    def __init__(self, estimand="ate", level=0.95, hypothesis="other", fit_intercept=True):
        self.estimand = estimand
        self.level = level
        self.hypothesis = hypothesis
        self.fit_intercept = fit_intercept

    def fit(self, X, treatment, y, propensity=None):
        X = check_array(X, dtype=float, ensure_min_samples=2)
        data = Dataset.from_arrays(X, treatment, y, add_intercept=self.fit_intercept)
        kind = Estimand.parse(self.estimand)
        if propensity is None:
            self.propensity_fit_ = fit_logistic(data)
            e = np.asarray(self.propensity_fit_.fitted)
        else:
            self.propensity_fit_ = None
            e = np.asarray(propensity, dtype=float).ravel()
        self.propensity_ = e
        self.estimate_ = estimate_wate(data, e, kind)
        self.components_ = estimate_components(data, e, self.estimate_)
        tau = self.estimate_.tau
        self.simple_ci_ = confidence_interval(tau, simple_variance(self.components_), self.level)
        self.exact_ci_ = confidence_interval(tau, exact_variance(self.components_), self.level, "exact")
        self.correction_ = correction_term(self.components_)
        self.criterion_ = (
            None
            if kind is Estimand.ATE
            else evaluate_criterion(data, e, self.estimate_, Hypothesis.parse(self.hypothesis))
        )
        self.n_features_in_ = X.shape[1]
        return self

    @property
    def tau_(self) -> float:
        check_is_fitted(self, "estimate_")
        return self.estimate_.tau

    def summary(self) -> dict:
        """Plain-dict report (JSON-serialisable)."""
        check_is_fitted(self, "estimate_")
        return {
            "estimate": self.estimate_.to_dict(),
            "simple_ci": self.simple_ci_.to_dict(),
            "exact_ci": self.exact_ci_.to_dict(),
            "correction_term": self.correction_,
            "simple_ci_conservative": self.correction_ <= 0.0,
            "criterion": None if self.criterion_ is None else self.criterion_.to_dict(),
            "propensity": (
                {"source": "supplied"}
                if self.propensity_fit_ is None
                else {"source": "fitted", **self.propensity_fit_.diagnostics()}
            ),
        }
