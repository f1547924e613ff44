"""Experiment orchestration: seeded runs, CSV/JSON reports, subcommands.

Every experiment is driven by an ExperimentConfig (subcommand + parameter
table + seed) and produces a RunReport whose rows and summary are a pure
function of the config; rerunning a config reproduces the artifacts byte for
byte.  Wall-clock timing goes to stderr only, never into report files.

Exit status: 0 = pass verdict, 1 = fail verdict, 2 = error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from typing import Optional

from . import __version__
from .core import Domain, DiscreteDistribution, RandomSource
from .equivalence import (oblivious_extreme_pair_exact,
                          subsampled_adaptive_extreme_pair_exact)
from .hypercube import LowerBoundConfig, run_separation
from .noise_models import (NoiseKind, NoiseModel, verify_closed_under_mixtures)
from .sq_engine import (SqAlgorithm, StatisticalQuery,
                        sq_concentration_experiment,
                        single_query_exceedance_experiment)
from .subsampling import coupling_experiment, pair_collision_bound, tv_bound_check

import numpy as np

BUILD_ID = f"noiselab-{__version__}"


@dataclass
class ExperimentConfig:
    subcommand: str
    params: dict
    seed: int = 0
    trials: int = 1000
    output: Optional[str] = None

    def echo(self) -> dict:
        return {"subcommand": self.subcommand, "params": self.params,
                "seed": self.seed, "trials": self.trials,
                "build": BUILD_ID}


@dataclass
class RunReport:
    config: dict
    columns: list[str]
    rows: list[tuple]
    summary: dict
    verdict: Optional[bool]

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow(row)
        return buf.getvalue()

    def to_json_text(self) -> str:
        return json.dumps({"config": self.config, "columns": self.columns,
                           "rows": self.rows, "summary": self.summary,
                           "verdict": self.verdict}, default=float, indent=1)

    def write(self, prefix: str) -> None:
        with open(prefix + ".csv", "w", encoding="utf-8") as fh:
            fh.write(self.to_csv_text())
        with open(prefix + ".json", "w", encoding="utf-8") as fh:
            fh.write(self.to_json_text())


def emit_plot_data(report: RunReport, axes: list[str]) -> str:
    """Column-selected CSV for external plotting; an empty axes list passes
    the full report through."""
    if not report.rows:
        raise ValueError("report has no rows")
    if not axes:
        return report.to_csv_text()
    missing = [a for a in axes if a not in report.columns]
    if missing:
        raise ValueError(f"unknown axis name(s): {missing}")
    idx = [report.columns.index(a) for a in axes]
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(axes)
    for row in report.rows:
        writer.writerow([row[i] for i in idx])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Experiment implementations
# ---------------------------------------------------------------------------

def _run_coupling(cfg: ExperimentConfig) -> RunReport:
    p = cfg.params
    m, M = int(p.get("m", 2)), int(p.get("M", 4))
    domain_size = int(p.get("domain_size", 1000))
    d = DiscreteDistribution.uniform(Domain(domain_size))
    batch, collided, differs = coupling_experiment(
        d, m, M, cfg.trials, RandomSource(cfg.seed))
    rows = [(t, int(collided[t]), int(differs[t]), cfg.seed, BUILD_ID)
            for t in range(cfg.trials)]
    bound = pair_collision_bound(m, M)
    ok = batch.neq_rate <= bound + 3 * batch.neq_std_error
    exact_row = tv_bound_check(d, m, M, trials=1,
                               rng=RandomSource(cfg.seed, 1)) if p.get("exact") else None
    summary = {"m": m, "M": M, "bound": bound,
               "collided_rate": batch.collided_rate,
               "neq_rate": batch.neq_rate,
               "neq_std_error": batch.neq_std_error,
               "exact_tv": None if exact_row is None else exact_row.exact_tv}
    return RunReport(cfg.echo(), ["trial", "collided", "differs", "seed", "build"],
                     rows, summary, ok)


def _default_sq_instance(domain_size: int, tau: float):
    domain = Domain(domain_size)
    d = DiscreteDistribution.uniform(domain)
    phi = np.linspace(-1.0, 1.0, domain_size)
    return d, phi


def _run_sq_concentration(cfg: ExperimentConfig) -> RunReport:
    p = cfg.params
    eta = float(p.get("eta", 0.1))
    tau = float(p.get("tau", 0.2))
    domain_size = int(p.get("domain_size", 10))
    n_values = [int(x) for x in str(p.get("n_values", "250,500,1000,2000")).split(",")]
    mode = p.get("mode", "robust")
    d, phi = _default_sq_instance(domain_size, tau)
    rng = RandomSource(cfg.seed)
    if mode == "exceedance":
        report = single_query_exceedance_experiment(d, phi, tau, eta, n_values,
                                                    cfg.trials, rng)
    elif mode == "robust":
        alg = SqAlgorithm.fixed([StatisticalQuery(d.domain, phi, tau)])
        model = NoiseModel(NoiseKind(p.get("kind", "additive")), eta)
        report = sq_concentration_experiment(alg, d, model, n_values,
                                             cfg.trials, rng)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    rows = [(r.n, r.empirical_failure, r.theory_bound, r.trials, cfg.seed, BUILD_ID)
            for r in report.rows]
    summary = {"mode": mode, "eta": eta, "tau": tau,
               "passed": report.passed}
    return RunReport(cfg.echo(),
                     ["n", "empirical_failure", "theory_bound", "trials",
                      "seed", "build"],
                     rows, summary, report.passed)


def _run_additive_equiv(cfg: ExperimentConfig) -> RunReport:
    p = cfg.params
    eta = float(p.get("eta", 1.0 / 3.0))
    eps = float(p.get("eps", 0.3))
    M = int(p.get("M", 200))
    p_values = [float(x) for x in str(p.get("p_values", "0.1,0.3,0.5,0.7,0.9")).split(",")]
    rows = []
    all_ok = True
    for pv in p_values:
        for idx in range(16):
            table = tuple((idx >> b) & 1 for b in (3, 2, 1, 0))
            om = oblivious_extreme_pair_exact(table, pv, eta, True)
            omin = oblivious_extreme_pair_exact(table, pv, eta, False)
            am = subsampled_adaptive_extreme_pair_exact(table, pv, eta, M, True)
            amin = subsampled_adaptive_extreme_pair_exact(table, pv, eta, M, False)
            gap = max(abs(om - am), abs(omin - amin))
            ok = gap <= eps
            all_ok &= ok
            rows.append((pv, "".join(map(str, table)), om, am, omin, amin,
                         gap, int(ok), cfg.seed, BUILD_ID))
    per_table = {}
    for r in rows:
        per_table[r[1]] = max(per_table.get(r[1], 0.0), r[6])
    summary = {"eta": eta, "eps": eps, "M": M,
               "worst_gap": max(r[6] for r in rows),
               "per_table_worst_gap": {k: round(v, 6)
                                       for k, v in sorted(per_table.items())}}
    return RunReport(cfg.echo(),
                     ["p", "table", "oblivious_max", "adaptive_max",
                      "oblivious_min", "adaptive_min", "gap", "pass",
                      "seed", "build"],
                     rows, summary, all_ok)


def _run_lowerbound(cfg: ExperimentConfig) -> RunReport:
    p = cfg.params
    if p.get("sweep_m"):
        return _run_lowerbound_sweep(cfg)
    lb = LowerBoundConfig(n=int(p.get("n", 64)), m=int(p.get("m", 256)),
                          d=int(p.get("d", 8192)), eta=float(p.get("eta", 0.5)),
                          eps=float(p.get("eps", 0.2)), k=int(p.get("k", 63)),
                          trials=cfg.trials, seed=cfg.seed)
    report = run_separation(lb)
    rows = [(r.trial, r.clean_accept, report.oblivious_bound, r.adaptive_accept,
             cfg.seed, BUILD_ID) for r in report.rows]
    summary = {"n": lb.n, "m": lb.m, "d": lb.d, "k": lb.k, "t": lb.t,
               "eta": lb.eta, "eps": lb.eps,
               "clean_rate": report.clean_rate,
               "oblivious_rates": report.oblivious_rates,
               "oblivious_bound": report.oblivious_bound,
               "adaptive_rate": report.adaptive_rate,
               "separated": report.separated, "gap": report.gap}
    return RunReport(cfg.echo(),
                     ["trial", "clean_accept", "oblivious_bound",
                      "adaptive_accept", "seed", "build"],
                     rows, summary, report.separated)


def _run_lowerbound_sweep(cfg: ExperimentConfig) -> RunReport:
    from .hypercube import frontier_sweep
    p = cfg.params
    m_values = tuple(int(x) for x in str(p["sweep_m"]).split(","))
    rows_raw = frontier_sweep(n=int(p.get("n", 64)), eta=float(p.get("eta", 0.5)),
                              eps=float(p.get("eps", 0.2)),
                              d=int(p.get("d", 8192)), m_values=m_values,
                              trials=cfg.trials, seed=cfg.seed)
    rows = [(r.m, r.k, r.t, r.adaptive_rate, r.oblivious_bound, r.gap,
             int(r.separated), cfg.seed, BUILD_ID) for r in rows_raw]
    summary = {"sweep_m": list(m_values),
               "separated_below": [r.m for r in rows_raw if r.separated]}
    return RunReport(cfg.echo(),
                     ["m", "k", "t", "adaptive_rate", "oblivious_bound",
                      "gap", "separated", "seed", "build"],
                     rows, summary, None)


def _run_mixtures_check(cfg: ExperimentConfig) -> RunReport:
    p = cfg.params
    eta = float(p.get("eta", 0.2))
    domain_size = int(p.get("domain_size", 6))
    models = [NoiseModel(NoiseKind.ADDITIVE, eta),
              NoiseModel(NoiseKind.SUBTRACTIVE, eta),
              NoiseModel(NoiseKind.NASTY, eta),
              NoiseModel(NoiseKind.NASTY_CLASSIFICATION, eta, (3, 2)),
              NoiseModel(NoiseKind.MALICIOUS_ENCODED, eta)]
    rows = []
    ok = True
    for i, model in enumerate(models):
        rep = verify_closed_under_mixtures(model, cfg.trials,
                                           RandomSource(cfg.seed, i),
                                           domain_size=domain_size)
        ok &= rep.passed
        rows.append((model.kind.value, rep.trials, rep.violations,
                     rep.max_violation, cfg.seed, BUILD_ID))
    summary = {"eta": eta, "all_passed": ok}
    return RunReport(cfg.echo(),
                     ["model", "trials", "violations", "max_violation",
                      "seed", "build"],
                     rows, summary, ok)


_RUNNERS = {
    "coupling": _run_coupling,
    "sq-concentration": _run_sq_concentration,
    "additive-equiv": _run_additive_equiv,
    "lowerbound": _run_lowerbound,
    "mixtures-check": _run_mixtures_check,
}


def run(config: ExperimentConfig) -> RunReport:
    """Dispatch to the named experiment."""
    if config.subcommand not in _RUNNERS:
        raise ValueError(f"unknown subcommand {config.subcommand!r}")
    return _RUNNERS[config.subcommand](config)


# ---------------------------------------------------------------------------
# Config files and argument parsing
# ---------------------------------------------------------------------------

def parse_config_file(path: str) -> dict:
    """Flat ``key = value`` lines; values are parsed as JSON when they parse,
    kept as strings otherwise.  '#' starts a comment."""
    out: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            value = value.strip()
            try:
                out[key.strip()] = json.loads(value)
            except json.JSONDecodeError:
                out[key.strip()] = value
    return out


_COMMON_KEYS = {"seed", "trials", "out"}


def build_config(subcommand: str, file_params: dict, overrides: dict) -> ExperimentConfig:
    merged = dict(file_params)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    seed = int(merged.pop("seed", 0))
    trials = int(merged.pop("trials", 1000))
    output = merged.pop("out", None)
    return ExperimentConfig(subcommand, merged, seed, trials, output)


def _add_common(sp):
    sp.add_argument("--config", help="flat key=value config file")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--trials", type=int, default=None)
    sp.add_argument("--out", default=None,
                    help="report path prefix (.csv and .json)")
    sp.add_argument("--plot-axes", default=None,
                    help="comma-separated column names for a plot-data CSV")


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="noiselab",
        description="Adversarial-noise simulation experiments")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    sp = sub.add_parser("coupling", help="with/without-replacement coupling rates")
    _add_common(sp)
    sp.add_argument("--m", type=int, default=None)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--domain-size", dest="domain_size", type=int, default=None)
    sp.add_argument("--exact", action="store_const", const=1, default=None,
                    help="also compute the exact tuple-law TV")

    sp = sub.add_parser("sq-concentration",
                        help="failure rates of corrupted-sample certificates")
    _add_common(sp)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--tau", type=float, default=None)
    sp.add_argument("--mode", choices=["robust", "exceedance"], default=None)
    sp.add_argument("--n-values", dest="n_values", default=None)
    sp.add_argument("--domain-size", dest="domain_size", type=int, default=None)

    sp = sub.add_parser("additive-equiv",
                        help="exact two-element equivalence table")
    _add_common(sp)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--M", type=int, default=None)
    sp.add_argument("--p-values", dest="p_values", default=None)

    sp = sub.add_parser("lowerbound", help="hypercube separation experiment")
    _add_common(sp)
    for flag in ("n", "m", "d", "k"):
        sp.add_argument(f"--{flag}", type=int, default=None)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--eps", type=float, default=None)
    sp.add_argument("--sweep-m", dest="sweep_m", default=None,
                    help="comma-separated m values: frontier sweep at fixed d")

    sp = sub.add_parser("mixtures-check", help="mixture-closure spot checks")
    _add_common(sp)
    sp.add_argument("--eta", type=float, default=None)
    sp.add_argument("--domain-size", dest="domain_size", type=int, default=None)

    try:
        args = parser.parse_args(argv)
        file_params = parse_config_file(args.config) if args.config else {}
        overrides = {k: v for k, v in vars(args).items()
                     if k not in ("subcommand", "config", "plot_axes")}
        config = build_config(args.subcommand, file_params, overrides)
        started = time.monotonic()
        report = run(config)
        elapsed = time.monotonic() - started
    except (ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for key, value in report.summary.items():
        print(f"{key}: {value}")
    verdict_name = {True: "pass", False: "fail", None: "n/a"}[report.verdict]
    print(f"verdict: {verdict_name}")
    print(f"wall_clock_s: {elapsed:.2f}", file=sys.stderr)
    try:
        if config.output:
            report.write(config.output)
            print(f"wrote {config.output}.csv and {config.output}.json",
                  file=sys.stderr)
        if args.plot_axes is not None:
            axes = [a for a in args.plot_axes.split(",") if a]
            path = (config.output or "plot") + ".plot.csv"
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(emit_plot_data(report, axes))
            print(f"wrote {path}", file=sys.stderr)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if report.verdict is None:
        return 0
    return 0 if report.verdict else 1


if __name__ == "__main__":
    sys.exit(main())
