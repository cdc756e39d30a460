"""Weight functions for the WATE family and the Hajek-type IPW estimator."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .exceptions import EmptyArm, OutOfRange
from .propensity import Dataset


class Estimand(str, Enum):
    """Tilting function ``w(e)``: ATE -> 1, ATT -> e, ATO -> e(1 - e)."""

    ATE = "ATE"
    ATT = "ATT"
    ATO = "ATO"

    @classmethod
    def parse(cls, value) -> "Estimand":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).upper())
        except ValueError:
            raise ValueError(f"unknown estimand {value!r}; expected one of ate, att, ato") from None


def _check_open_unit(e) -> np.ndarray:
    e = np.asarray(e, dtype=float)
    if not np.all((e > 0.0) & (e < 1.0)):
        raise OutOfRange("propensity scores must lie strictly inside (0, 1)")
    return e


def _scalar_or_array(x):
    return float(x) if np.ndim(x) == 0 else x


def weight_value(estimand, e):
    e = _check_open_unit(e)
    kind = Estimand.parse(estimand)
    if kind is Estimand.ATE:
        out = np.ones_like(e)
    elif kind is Estimand.ATT:
        out = e.copy()
    else:
        out = e * (1.0 - e)
    return _scalar_or_array(out)


def weight_derivative(estimand, e):
    e = _check_open_unit(e)
    kind = Estimand.parse(estimand)
    if kind is Estimand.ATE:
        out = np.zeros_like(e)
    elif kind is Estimand.ATT:
        out = np.ones_like(e)
    else:
        out = 1.0 - 2.0 * e
    return _scalar_or_array(out)


def unit_weight(estimand, e, t):
    """Balancing weight ``w(e) / (t e + (1 - t)(1 - e))``."""
    e = _check_open_unit(e)
    t = np.asarray(t, dtype=float)
    w = np.asarray(weight_value(estimand, e))
    return _scalar_or_array(w / (t * e + (1.0 - t) * (1.0 - e)))


def _check_derivative(estimand: Estimand, h: float = 1e-6, tol: float = 1e-5) -> None:
    grid = np.linspace(0.05, 0.95, 19)
    fd = (np.asarray(weight_value(estimand, grid + h)) - np.asarray(weight_value(estimand, grid - h))) / (
        2.0 * h
    )
    assert np.max(np.abs(fd - weight_derivative(estimand, grid))) <= tol, estimand


for _kind in Estimand:
    _check_derivative(_kind)


@dataclass(frozen=True)
class WateEstimate:
    mu1: float
    mu0: float
    tau: float
    n: int
    estimand: Estimand

    def to_dict(self) -> dict:
        return {
            "estimand": self.estimand.value,
            "mu1": self.mu1,
            "mu0": self.mu0,
            "tau": self.tau,
            "n": self.n,
        }


def arm_means(weights, t, y) -> tuple[float, float]:
    t = np.asarray(t, dtype=float)
    w1 = weights * t
    w0 = weights * (1.0 - t)
    s1, s0 = w1.sum(), w0.sum()
    if not (s1 > 0.0 and s0 > 0.0):
        raise EmptyArm("a treatment arm has zero total weight")
    return float(w1 @ y / s1), float(w0 @ y / s0)


def estimate_wate(data: Dataset, fitted, estimand) -> WateEstimate:
    """Hajek IPW estimate of ``mu_w1``, ``mu_w0`` and ``tau_w``.

    Each arm is normalised by its own total weight.
    """
    kind = Estimand.parse(estimand)
    fitted = np.asarray(fitted, dtype=float)
    if fitted.shape != (data.n,):
        raise ValueError(f"expected {data.n} propensity scores, got shape {fitted.shape}")
    W = np.asarray(unit_weight(kind, fitted, data.treatment))
    mu1, mu0 = arm_means(W, data.treatment, data.outcome)
    return WateEstimate(mu1, mu0, mu1 - mu0, data.n, kind)
