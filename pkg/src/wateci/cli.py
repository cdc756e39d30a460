"""Command-line interface: ``wateci {analyze,criteria,simulate,shape}``."""

from __future__ import annotations

import argparse
import sys
import warnings

import numpy as np

from . import io as wio
from .criteria import (
    Hypothesis,
    condition_moments,
    continuous_condition,
    correction_term,
    evaluate_criterion,
    shape_function,
)
from .estimands import Estimand, estimate_wate
from .estimator import WATEEstimator
from .exceptions import EstimationError, WateError
from .propensity import fit_logistic
from .simulation import PRESETS, parse_config, population_criterion, preset, run_scenario
from .variance import estimate_components

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3

POSITIVITY_CAVEAT = (
    "note: some covariates take negative values; the criterion is only "
    "guaranteed for non-negative covariate support"
)


class UsageError(Exception):
    pass


def _analyze(args) -> tuple[dict, str]:
    loaded = wio.read_csv(args.data)
    data = loaded.data
    model = WATEEstimator(estimand=args.estimand, level=args.level, hypothesis=args.hypothesis, fit_intercept=False)
    model.fit(data.covariates, data.treatment, data.outcome, propensity=loaded.propensity)
    report = model.summary()
    report["data"] = {
        "path": str(args.data),
        "n": data.n,
        "n_treated": int(data.treatment.sum()),
        "covariates": list(loaded.covariate_names),
    }
    lines = [
        f"estimand      {model.estimate_.estimand.value}   (n = {data.n}, treated = {int(data.treatment.sum())})",
        f"estimate      {model.tau_:.4f}   (mu1 = {model.estimate_.mu1:.4f}, mu0 = {model.estimate_.mu0:.4f})",
        f"simple CI     ({model.simple_ci_.lower:.4f}, {model.simple_ci_.upper:.4f})",
        f"exact CI      ({model.exact_ci_.lower:.4f}, {model.exact_ci_.upper:.4f})",
        f"correction    {model.correction_:.4e}  "
        + ("(simple CI conservative)" if model.correction_ <= 0 else "(simple CI may under-cover)"),
    ]
    if model.criterion_ is not None:
        lines.append(_criterion_line(model.criterion_))
    return report, "\n".join(lines)


def _criterion_line(rep) -> str:
    verdict = "satisfied" if rep.satisfied else "NOT satisfied"
    line = f"criterion     gamma = {rep.gamma:g}: lhs = {rep.lhs:.4e}, rhs = {rep.rhs:.4e} -> {verdict}"
    if not rep.positivity_precondition_met:
        line += "\n" + POSITIVITY_CAVEAT
    return line


def _criteria(args) -> tuple[dict, str]:
    loaded = wio.read_csv(args.data)
    data = loaded.data
    kind = Estimand.parse(args.estimand)
    e = fit_logistic(data).fitted if loaded.propensity is None else loaded.propensity
    est = estimate_wate(data, e, kind)
    rep = evaluate_criterion(data, e, est, Hypothesis.parse(args.hypothesis))
    corr = correction_term(estimate_components(data, e, est))
    report = {"criterion": rep.to_dict(), "correction_term": corr}
    lines = [_criterion_line(rep), f"correction    {corr:.4e}"]
    if args.gamma_het is not None:
        cond = continuous_condition(**condition_moments(e, data.covariates), estimand=kind, gamma_het=args.gamma_het)
        report["continuous_condition"] = {"gamma_het": args.gamma_het, "holds": cond.holds, "min_eig": cond.min_eig}
        lines.append(f"continuous    gamma_het = {args.gamma_het:g}: min eig = {cond.min_eig:.4e}, holds = {cond.holds}")
    return report, "\n".join(lines)


def _load_scenario(args):
    if args.config is not None:
        base = PRESETS.get(args.scenario) if args.scenario else None
        try:
            with open(args.config) as fh:
                cfg = parse_config(fh.read(), base)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from exc
    elif args.scenario:
        try:
            cfg = preset(args.scenario)
        except KeyError as exc:
            raise UsageError(exc.args[0]) from None
    else:
        raise UsageError("give a preset name or --config FILE")
    estimands = None
    if args.estimands:
        estimands = tuple(Estimand.parse(k) for k in args.estimands.split(","))
    return cfg.with_overrides(n=args.n, iterations=args.iterations, seed=args.seed, estimands=estimands)


SIM_HEADER = ["scenario", "estimand", "propensity", "mean", "ese", "alpha_simple", "alpha_exact", "replicates"]


def _simulate(args) -> tuple[dict, str, list]:
    cfg = _load_scenario(args)
    if args.criterion:
        kinds = cfg.estimands if args.estimands else (Estimand.ATO,)
        reps = [population_criterion(cfg, args.m, k, args.hypothesis) for k in kinds]
        report = {"config": cfg.to_dict(), "m": args.m, "criteria": [r.to_dict() for r in reps]}
        text = "\n".join(_criterion_line(r).replace("criterion    ", f"{r.estimand.value} criterion") for r in reps)
        rows = [[cfg.name, r.estimand.value, r.gamma, r.lhs, r.rhs, r.satisfied] for r in reps]
        return report, text, [["scenario", "estimand", "gamma", "lhs", "rhs", "satisfied"], rows]
    summary = run_scenario(cfg, threads=args.threads)
    rows = [
        [cfg.name, r.estimand.value, r.propensity, r.mean, r.ese, r.alpha_simple, r.alpha_exact, r.replicates]
        for r in summary.rows
    ]
    lines = [
        f"{cfg.name}: n = {cfg.n}, iterations = {cfg.iterations}, seed = {cfg.seed}, "
        f"failures = {summary.replicate_failures}",
        f"{'estimand':<9}{'propensity':<11}{'mean(e-2)':>10}{'ESE(e-2)':>10}{'simple%':>9}{'exact%':>8}",
    ]
    for r in summary.rows:
        exact = "--" if r.alpha_exact is None else f"{100 * r.alpha_exact:.1f}"
        lines.append(
            f"{r.estimand.value:<9}{r.propensity:<11}{100 * r.mean:>10.3f}{100 * r.ese:>10.3f}"
            f"{100 * r.alpha_simple:>9.1f}{exact:>8}"
        )
    if summary.ese_undefined:
        lines.append("note: fewer than two successful replicates; ESE reported as 0")
    return summary.to_dict(), "\n".join(lines), [SIM_HEADER, rows]


def _shape(args) -> tuple[dict, str, list]:
    e = np.linspace(0.0, 1.0, args.points + 2)[1:-1]
    att = shape_function(Estimand.ATT, e)
    ato = shape_function(Estimand.ATO, e)
    rows = [[float(a), float(b), float(c)] for a, b, c in zip(e, att, ato)]
    report = {"e": e.tolist(), "att": att.tolist(), "ato": ato.tolist()}
    return report, None, [["e", "att", "ato"], rows]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wateci", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_data_args(p, estimands):
        p.add_argument("data", help="CSV with treatment, outcome, optional e, covariates")
        p.add_argument("--estimand", choices=estimands, default=estimands[0])
        p.add_argument("--hypothesis", choices=["nn", "other"], default="other")

    p = sub.add_parser("analyze", help="estimate a WATE with simple and exact CIs")
    add_data_args(p, ["ate", "att", "ato"])
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--format", choices=["json", "csv", "table"], default="table")

    p = sub.add_parser("criteria", help="conservativeness criterion only")
    add_data_args(p, ["att", "ato"])
    p.add_argument("--gamma-het", type=float, default=None, help="also check the linear-outcome condition")
    p.add_argument("--format", choices=["json", "csv", "table"], default="table")

    p = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    p.add_argument("scenario", nargs="?", help=f"preset: {', '.join(PRESETS)}")
    p.add_argument("--config", help="key = value scenario file")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--estimands", help="comma separated subset of att,ato")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--criterion", action="store_true", help="population criterion instead of replicates")
    p.add_argument("--m", type=int, default=1_000_000, help="population draw size for --criterion")
    p.add_argument("--hypothesis", choices=["nn", "other"], default=None)
    p.add_argument("--format", choices=["json", "csv", "table"], default="table")

    p = sub.add_parser("shape", help="f(e) grid for ATT and ATO (plot-ready CSV)")
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--format", choices=["json", "csv"], default="csv")
    return parser


def _emit(fmt, report, text, table=None) -> str:
    if fmt == "json":
        return wio.to_json(report)
    if fmt == "csv":
        if table is None:
            table = [["key", "value"], [list(kv) for kv in wio.flatten(report)]]
        return wio.to_csv(table[0], table[1])
    return text


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "analyze":
                report, text = _analyze(args)
                out = _emit(args.format, report, text)
            elif args.command == "criteria":
                report, text = _criteria(args)
                out = _emit(args.format, report, text)
            elif args.command == "simulate":
                report, text, table = _simulate(args)
                out = _emit(args.format, report, text, table)
            else:
                report, text, table = _shape(args)
                out = _emit(args.format, report, text, table)
    except (UsageError, wio.CsvFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EstimationError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (WateError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    sys.stdout.write(out.rstrip("\n") + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
