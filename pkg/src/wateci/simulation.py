"""Monte Carlo study: binary confounder model, four preset scenarios.

Each replicate draws from its own RNG stream derived from ``(seed, index)``
so results do not depend on execution order or thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.special import expit

from .criteria import CriterionReport, Hypothesis, criterion_vectors, evaluate_from_vectors
from .estimands import Estimand, estimate_wate
from .exceptions import EstimationError
from .propensity import Dataset, fit_logistic
from .variance import confidence_interval, estimate_components, exact_variance, simple_variance

_REPLICATE_STREAM = 0
_POPULATION_STREAM = 1


@dataclass(frozen=True)
class ScenarioConfig:
    epsilon: float
    beta0: tuple
    beta1: tuple
    n: int = 2000
    iterations: int = 1000
    seed: int | None = None
    estimands: tuple = (Estimand.ATT, Estimand.ATO)
    level: float = 0.95
    hypothesis: str = "other"
    name: str = "custom"

    def __post_init__(self):
        object.__setattr__(self, "beta0", tuple(float(b) for b in self.beta0))
        object.__setattr__(self, "beta1", tuple(float(b) for b in self.beta1))
        object.__setattr__(self, "estimands", tuple(Estimand.parse(k) for k in self.estimands))
        if len(self.beta0) != 3 or len(self.beta1) != 3:
            raise ValueError("beta0 and beta1 need three coefficients (intercept, X1 - 50, X2 - 0.5)")
        if self.n < 10:
            raise ValueError("n must be at least 10")
        if self.iterations < 1:
            raise ValueError("iterations must be at least 1")
        if not math.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")
        if not 0.0 < self.level < 1.0:
            raise ValueError("level must be in (0, 1)")
        if any(k is Estimand.ATE for k in self.estimands):
            raise ValueError("the simulation reports ATT and/or ATO only")
        Hypothesis.parse(self.hypothesis)

    def with_overrides(self, **kw) -> "ScenarioConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})

    def to_dict(self) -> dict:
        d = asdict(self)
        d["estimands"] = [k.value for k in self.estimands]
        d["beta0"] = list(self.beta0)
        d["beta1"] = list(self.beta1)
        return d


PRESETS = {
    "scenario1": ScenarioConfig(1.0, (0, -0.2, 0.1), (0, -0.2, 0.1), hypothesis="nn", name="scenario1"),
    "scenario2": ScenarioConfig(3.0, (0, -0.2, 0.1), (0, -0.2, 0.1), hypothesis="nn", name="scenario2"),
    "scenario3": ScenarioConfig(
        1.0, (0, -0.25, 0.1), (0.01, -0.4, 4), estimands=(Estimand.ATO,), hypothesis="nn", name="scenario3"
    ),
    "scenario4": ScenarioConfig(
        3.0, (1, -0.5, -0.5), (1, 0.5, 0.5), estimands=(Estimand.ATO,), hypothesis="nn", name="scenario4"
    ),
}


def preset(name: str, **overrides) -> ScenarioConfig:
    try:
        cfg = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {', '.join(PRESETS)}") from None
    return cfg.with_overrides(**overrides)


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse ``key = value`` lines (``#`` comments). Vectors are comma separated."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key in ("beta0", "beta1"):
            values[key] = tuple(float(v) for v in val.replace("(", "").replace(")", "").split(","))
        elif key == "estimands":
            values[key] = tuple(v.strip() for v in val.split(",") if v.strip())
        elif key in ("n", "iterations", "seed"):
            values[key] = int(val)
        elif key in ("epsilon", "level"):
            values[key] = float(val)
        elif key in ("hypothesis", "name"):
            values[key] = val
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if base is not None:
        return replace(base, **values)
    missing = {"epsilon", "beta0", "beta1"} - values.keys()
    if missing:
        raise ValueError(f"config is missing {', '.join(sorted(missing))}")
    return ScenarioConfig(**values)


def rng_for(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


@dataclass(frozen=True)
class Sample:
    data: Dataset
    true_e: np.ndarray
    y1: np.ndarray
    y0: np.ndarray


def _draw(cfg: ScenarioConfig, rng: np.random.Generator, n: int, sharp_null: bool) -> Sample:
    x1 = rng.normal(50.0, 5.0, n)
    x2 = rng.binomial(1, 0.5, n).astype(float)
    e = expit(cfg.epsilon * (0.03 * (x1 - 50.0) + 0.3 * (x2 - 0.5)))
    t = (rng.random(n) < e).astype(float)
    Z = np.column_stack([np.ones(n), x1 - 50.0, x2 - 0.5])
    u0 = rng.random(n)
    u1 = rng.random(n)
    y0 = (u0 < expit(Z @ np.asarray(cfg.beta0))).astype(float)
    y1 = y0.copy() if sharp_null else (u1 < expit(Z @ np.asarray(cfg.beta1))).astype(float)
    y = t * y1 + (1.0 - t) * y0
    X = np.column_stack([np.ones(n), x1, x2])
    return Sample(Dataset(t, y, X, binary_outcome=True), e, y1, y0)


def generate_sample(cfg: ScenarioConfig, replicate_index: int, *, sharp_null: bool = False) -> Sample:
    """One replicate of size ``cfg.n``.

    ``sharp_null`` copies ``Y0`` into ``Y1`` unit by unit.
    """
    if cfg.seed is None:
        raise ValueError("a seed is required")
    return _draw(cfg, rng_for(cfg.seed, _REPLICATE_STREAM, replicate_index), cfg.n, sharp_null)


def draw_population(cfg: ScenarioConfig, m: int, *, index: int = 0, sharp_null: bool = False) -> Sample:
    if cfg.seed is None:
        raise ValueError("a seed is required")
    return _draw(cfg, rng_for(cfg.seed, _POPULATION_STREAM, index), m, sharp_null)


@dataclass(frozen=True)
class ReplicateResult:
    index: int
    failed: bool
    # estimand -> (tau_true, rej_simple_true, tau_est, rej_simple_est, rej_exact_est)
    values: dict = field(default_factory=dict)


def run_replicate(cfg: ScenarioConfig, index: int) -> ReplicateResult:
    sample = generate_sample(cfg, index)
    data = sample.data
    try:
        fit = fit_logistic(data)
    except EstimationError:
        return ReplicateResult(index, True)
    out = {}
    for kind in cfg.estimands:
        est_true = estimate_wate(data, sample.true_e, kind)
        v_true = simple_variance(estimate_components(data, sample.true_e, est_true))
        ci_true = confidence_interval(est_true.tau, v_true, cfg.level)

        est = estimate_wate(data, fit.fitted, kind)
        comps = estimate_components(data, fit.fitted, est)
        ci_simple = confidence_interval(est.tau, simple_variance(comps), cfg.level)
        ci_exact = confidence_interval(est.tau, exact_variance(comps), cfg.level, method="exact")
        out[kind] = (est_true.tau, ci_true.excludes(0.0), est.tau, ci_simple.excludes(0.0), ci_exact.excludes(0.0))
    return ReplicateResult(index, False, out)


@dataclass(frozen=True)
class SummaryRow:
    estimand: Estimand
    propensity: str
    mean: float
    ese: float
    alpha_simple: float
    alpha_exact: float | None
    replicates: int

    def to_dict(self) -> dict:
        return {
            "estimand": self.estimand.value,
            "propensity": self.propensity,
            "mean": self.mean,
            "ese": self.ese,
            "alpha_simple": self.alpha_simple,
            "alpha_exact": self.alpha_exact,
            "replicates": self.replicates,
        }


@dataclass(frozen=True)
class SimulationSummary:
    config: ScenarioConfig
    rows: tuple
    replicate_failures: int
    # ESE is reported as 0 when fewer than two replicates succeeded
    ese_undefined: bool

    def row(self, estimand, propensity: str) -> SummaryRow:
        kind = Estimand.parse(estimand)
        for r in self.rows:
            if r.estimand is kind and r.propensity == propensity:
                return r
        raise KeyError((kind, propensity))

    def to_dict(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "replicate_failures": self.replicate_failures,
            "ese_undefined": self.ese_undefined,
            "rows": [r.to_dict() for r in self.rows],
        }


def summarize(cfg: ScenarioConfig, results) -> SimulationSummary:
    ok = [r for r in sorted(results, key=lambda r: r.index) if not r.failed]
    failures = len(results) - len(ok)
    k = len(ok)
    rows = []
    for kind in cfg.estimands:
        vals = np.array([r.values[kind] for r in ok], dtype=float).reshape(k, 5)
        for source, tau_col, simple_col, exact_col in (("true", 0, 1, None), ("estimated", 2, 3, 4)):
            taus = vals[:, tau_col]
            rows.append(
                SummaryRow(
                    kind,
                    source,
                    float(np.mean(taus)) if k else math.nan,
                    float(np.std(taus, ddof=1)) if k > 1 else 0.0,
                    float(np.mean(vals[:, simple_col])) if k else math.nan,
                    None if exact_col is None else (float(np.mean(vals[:, exact_col])) if k else math.nan),
                    k,
                )
            )
    return SimulationSummary(cfg, tuple(rows), failures, k < 2)


def run_scenario(cfg: ScenarioConfig, threads: int = 1) -> SimulationSummary:
    """Run ``cfg.iterations`` replicates and summarise per estimand and score source.

    Deterministic for a fixed seed regardless of ``threads``.
    """
    if cfg.seed is None:
        raise ValueError("a seed is required")
    indices = range(cfg.iterations)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(lambda i: run_replicate(cfg, i), indices))
    else:
        results = [run_replicate(cfg, i) for i in indices]
    return summarize(cfg, results)


def population_criterion(
    cfg: ScenarioConfig, m: int = 1_000_000, estimand=Estimand.ATO, hypothesis=None
) -> CriterionReport:
    """Criterion sides from ``m`` draws using the true score and potential outcomes.

    ``hypothesis`` defaults to the config's; the weighted means ``mu_w1``,
    ``mu_w0`` come from the same draw.
    """
    if m < 100_000:
        raise ValueError("population_criterion needs m >= 1e5")
    kind = Estimand.parse(estimand)
    hyp = Hypothesis.parse(cfg.hypothesis if hypothesis is None else hypothesis)
    pop = draw_population(cfg, m)
    e, X = pop.true_e, pop.data.covariates
    if kind is Estimand.ATT:
        mu0 = float(np.sum(e * pop.y0) / np.sum(e))
        res1 = np.zeros(m)
        res0 = e * (pop.y0 - mu0)
    else:
        w = e * (1.0 - e)
        mu1 = float(np.sum(w * pop.y1) / np.sum(w))
        mu0 = float(np.sum(w * pop.y0) / np.sum(w))
        res1 = w * e * (pop.y1 - mu1)
        res0 = w * (1.0 - e) * (pop.y0 - mu0)
    u, v, A11 = criterion_vectors(kind, e, X, res1, res0)
    return evaluate_from_vectors(kind, u, v, A11, hyp.gamma, True)
