"""Batch front end: ingest long-format CSV, fit per feature, test, report.

Input schema (comma-delimited, header mandatory): one row per sample with
columns feature_id, batch_id, level, value and optional weight (one per
batch, first row wins, conflicts are errors) and covariate (one per level,
used by the linear method).  Duplicate (feature, batch) rows concatenate
samples in file order.

Outputs under --out: summary.csv (one row per feature), fitted.csv
(feature, level, p, value), residuals.csv (feature, batch, level, p,
residual), manifest.json (config, seed, grid, versions), plus an optional
single JSON document mirroring the tables.  Exit codes: 0 success, 1 some
features failed (their errors are reported and the rest proceed unless
--strict), 2 configuration or input-schema error.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np
import pandas as pd

from . import __version__
from .effect_stats import residual_table
from .errors import CoverageError, SchemaError, UnsupportedError
from .experiments import (
    _MODEL_ID,
    _SampleShuffleMachine,
    _TrendMachine,
    convergence_experiment,
    joint_permutation_pvalues,
    misspecification_experiment,
    power_experiment,
    pvalue_accuracy_experiment,
)
from .fitting import fit_linear_trends, fit_trends
from .grid import BatchObservation, default_grid
from .inference import ks_baseline, mi_baseline, permutation_test, smoothed_permutation_test
from .simulate import R_MODELS, S_MODELS, SimSpec, generate

THREADS_ENV = "TRENDFIT_THREADS"

METHODS = ("trends", "linear", "ks", "mi")
_REQUIRED_COLUMNS = ("feature_id", "batch_id", "level", "value")


@dataclass
class FeatureData:
    """Batches of one feature plus bookkeeping needed for output and dump."""

    batches: list
    batch_ids: list
    covariates: np.ndarray | None = None


def ingest(path, grid, estimator: str = "type7"):
    """Parse a long-format CSV into per-feature batch observations.

    Returns {feature_id: FeatureData} with batches ordered by first
    appearance.  Raises SchemaError (with the offending row number) for
    structural problems and CoverageError when a feature's levels have gaps.
    """
    by_feature: dict = {}
    weights: dict = {}
    levels: dict = {}
    covariates: dict = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError("empty file, expected a header row") from None
        header = [h.strip() for h in header]
        missing = [c for c in _REQUIRED_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"missing column(s) {missing}", row=1)
        col = {name: header.index(name) for name in header}
        has_weight = "weight" in col
        has_covariate = "covariate" in col
        for rownum, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise SchemaError(
                    f"expected {len(header)} fields, found {len(row)}", row=rownum)
            feature = row[col["feature_id"]].strip()
            batch = row[col["batch_id"]].strip()
            try:
                level = int(row[col["level"]])
                value = float(row[col["value"]])
            except ValueError as exc:
                raise SchemaError(f"non-numeric level or value ({exc})", row=rownum) from None
            if level < 1:
                raise SchemaError(f"levels must be positive integers, got {level}", row=rownum)
            key = (feature, batch)
            fmap = by_feature.setdefault(feature, {})
            if batch not in fmap:
                fmap[batch] = []
                levels[key] = level
            elif levels[key] != level:
                raise SchemaError(
                    f"batch {batch!r} of feature {feature!r} changed level "
                    f"{levels[key]} -> {level}", row=rownum)
            fmap[batch].append(value)
            if has_weight:
                raw = row[col["weight"]].strip()
                if raw:
                    try:
                        w = float(raw)
                    except ValueError:
                        raise SchemaError(f"non-numeric weight {raw!r}", row=rownum) from None
                    if key in weights and weights[key] != w:
                        raise SchemaError(
                            f"conflicting weights for batch {batch!r} of "
                            f"feature {feature!r}", row=rownum)
                    weights.setdefault(key, w)
            if has_covariate:
                raw = row[col["covariate"]].strip()
                if raw:
                    try:
                        t = float(raw)
                    except ValueError:
                        raise SchemaError(f"non-numeric covariate {raw!r}", row=rownum) from None
                    ckey = (feature, level)
                    if ckey in covariates and covariates[ckey] != t:
                        raise SchemaError(
                            f"conflicting covariates at level {level} of "
                            f"feature {feature!r}", row=rownum)
                    covariates.setdefault(ckey, t)
    out = {}
    for feature, batches in by_feature.items():
        L = max(levels[(feature, b)] for b in batches)
        present = {levels[(feature, b)] for b in batches}
        gaps = sorted(set(range(1, L + 1)) - present)
        if gaps:
            raise CoverageError(f"feature {feature!r} has no data at level(s) {gaps}")
        obs = []
        ids = []
        for batch, values in batches.items():
            key = (feature, batch)
            obs.append(BatchObservation.from_samples(
                levels[key], np.asarray(values), grid,
                weights.get(key, 1.0), estimator))
            ids.append(batch)
        cov = None
        if any((feature, l) in covariates for l in range(1, L + 1)):
            cov = np.array([covariates.get((feature, l), float(l))
                            for l in range(1, L + 1)])
        out[feature] = FeatureData(batches=obs, batch_ids=ids, covariates=cov)
    return out


def dump(features, path):
    """Write features back in the ingest schema (sample order preserved)."""
    has_cov = any(fd.covariates is not None for fd in features.values())
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["feature_id", "batch_id", "level", "value", "weight"]
        if has_cov:
            header.append("covariate")
        writer.writerow(header)
        for feature in sorted(features):
            fd = features[feature]
            for batch_id, b in zip(fd.batch_ids, fd.batches):
                for v in b.samples:
                    row = [feature, batch_id, b.level, repr(float(v)), repr(float(b.weight))]
                    if has_cov:
                        cov = "" if fd.covariates is None else repr(float(fd.covariates[b.level - 1]))
                        row.append(cov)
                    writer.writerow(row)


@dataclass
class AnalysisConfig:
    input: str
    out: str
    method: str = "trends"
    grid_size: int = 100
    estimator: str = "type7"
    perms: int = 0
    smoothed: bool = False
    min_null: int = 1000
    adjust: str = "none"
    alpha: float = 0.05
    seed: int = 0
    threads: int = 0
    tol: float = 1e-8
    max_iter: int = 10000
    strict: bool = False
    covariates: list | None = None
    json_path: str | None = None
    timestamp: bool = True


@dataclass
class SimulationConfig:
    out: str
    mode: str = "power"
    models: dict = field(default_factory=lambda: {"S1": 10, "S2": 10, "S3": 20})
    methods: tuple = ("trends", "ks")
    n: int = 1000
    n_per_level: int = 1
    sigma: float = 0.1
    perms: int = 200
    min_null: int = 1000
    oracle_perms: int = 10000
    plain_perms: int = 120
    reps: int = 20
    n_list: tuple = (100, 1000)
    nl_list: tuple = (1,)
    alpha: float = 0.05
    adjust: str = "minp"
    seed: int = 0
    grid_size: int = 100
    tol: float = 1e-8
    max_iter: int = 10000
    count: int = 50
    dump_data: str | None = None
    timestamp: bool = True


def _thread_count(requested):
    if requested and requested > 0:
        return requested
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _feature_seed(seed, index):
    return [int(seed), int(index)]


def _analyze_one(feature, index, fd, cfg, joint):
    method = cfg.method
    row = {
        "feature": feature, "method": method,
        "r2": np.nan, "delta": np.nan,
        "p_raw": np.nan, "p_adj": np.nan,
        "L": int(max(b.level for b in fd.batches)),
        "N": len(fd.batches),
        "n_total": int(sum(b.samples.size for b in fd.batches)),
        "statistic": np.nan,
    }
    fitted_rows = None
    residual_rows = None
    if method in ("trends", "linear"):
        if method == "trends":
            fit = fit_trends(fd.batches, tol=cfg.tol, max_iter=cfg.max_iter)
        else:
            cov = np.asarray(cfg.covariates, dtype=float) if cfg.covariates else fd.covariates
            fit = fit_linear_trends(fd.batches, covariates=cov,
                                    tol=cfg.tol, max_iter=cfg.max_iter)
        row["r2"] = fit.r_squared
        row["delta"] = fit.delta_stat
        row["statistic"] = fit.r_squared
        probs = fit.grid.probs
        fitted_rows = pd.DataFrame({
            "feature": feature,
            "level": np.repeat(np.arange(1, fit.n_levels + 1), probs.size),
            "p": np.tile(probs, fit.n_levels),
            "value": fit.fitted_matrix().ravel(),
        })
        resid = residual_table(fit)
        resid.insert(0, "feature", feature)
        resid["batch"] = [fd.batch_ids[i] for i in resid["batch"]]
        residual_rows = resid
        if not joint:
            fitter = "trends" if method == "trends" else "linear_trends"
            cov = None if method == "trends" else (
                np.asarray(cfg.covariates, dtype=float) if cfg.covariates else fd.covariates)
            if cfg.smoothed:
                res = smoothed_permutation_test(
                    fd.batches, fitter=fitter, min_null=cfg.min_null,
                    rng_seed=_feature_seed(cfg.seed, index), covariates=cov,
                    estimator=cfg.estimator, tol=cfg.tol, max_iter=cfg.max_iter)
                row["p_raw"] = res.p_raw
            elif cfg.perms > 0:
                res = permutation_test(
                    fd.batches, fitter=fitter, n_perm=cfg.perms,
                    rng_seed=_feature_seed(cfg.seed, index), covariates=cov,
                    tol=cfg.tol, max_iter=cfg.max_iter)
                row["p_raw"] = res.p_raw
    else:
        n_perm = cfg.perms if cfg.perms > 0 else 1000
        if joint:
            machine = _SampleShuffleMachine(fd.batches, method)
            row["statistic"] = machine.observed
        elif method == "ks":
            res = ks_baseline(fd.batches, n_perm=n_perm,
                              rng_seed=_feature_seed(cfg.seed, index))
            row["statistic"], row["p_raw"] = res.statistic, res.p_raw
        else:
            res = mi_baseline(fd.batches, n_perm=n_perm,
                              rng_seed=_feature_seed(cfg.seed, index))
            row["statistic"], row["p_raw"] = res.statistic, res.p_raw
    return row, fitted_rows, residual_rows


def _joint_minp(features, order, cfg, rows):
    """Shared-shuffle permutation p-values plus step-down minP across features."""
    n_perm = cfg.perms
    rng = np.random.default_rng([int(cfg.seed), 77])
    if cfg.method in ("trends", "linear"):
        fitter = "trends" if cfg.method == "trends" else "linear_trends"
        machines = []
        for feature in order:
            fd = features[feature]
            cov = None if cfg.method == "trends" else (
                np.asarray(cfg.covariates, dtype=float) if cfg.covariates else fd.covariates)
            machines.append(_TrendMachine(fd.batches, fd.batches[0].empirical_qf.grid,
                                          fitter, covariates=cov,
                                          tol=cfg.tol, max_iter=cfg.max_iter))
        template = machines[0].levels
        if any(m.levels.shape != template.shape for m in machines):
            raise UnsupportedError("minP adjustment needs the same batch layout in every feature")
        perms = [rng.permutation(template) for _ in range(n_perm)]
        obs = np.array([m.r2() for m in machines])
        null = np.array([[m.r2(levels=p) for p in perms] for m in machines])
    else:
        machines = [_SampleShuffleMachine(features[f].batches, cfg.method) for f in order]
        n_total = machines[0].flat.size
        if any(m.flat.size != n_total for m in machines):
            raise UnsupportedError("minP adjustment needs equal sample counts in every feature")
        perms = [rng.permutation(n_total) for _ in range(n_perm)]
        obs = np.array([m.observed for m in machines])
        null = np.array([[m.stat_of(p) for p in perms] for m in machines])
    p_raw, p_adj = joint_permutation_pvalues(obs, null)
    for feature, praw, padj in zip(order, p_raw, p_adj):
        rows[feature]["p_raw"] = praw
        rows[feature]["p_adj"] = padj


def _write_manifest(path, cfg, extra=None):
    manifest = {
        "config": {k: (list(v) if isinstance(v, tuple) else v)
                   for k, v in vars(cfg).items()},
        "versions": {
            "trendfit": __version__,
            "numpy": np.__version__,
            "pandas": pd.__version__,
        },
    }
    if extra:
        manifest.update(extra)
    if cfg.timestamp:
        manifest["timestamp"] = datetime.now(timezone.utc).isoformat()
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def run_analysis(cfg: AnalysisConfig) -> int:
    """Fit and test every feature of a long-format CSV; write result tables."""
    if cfg.method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if cfg.adjust not in ("none", "minp"):
        raise ValueError("adjust must be 'none' or 'minp'")
    if cfg.adjust == "minp" and cfg.smoothed:
        raise ValueError("minP adjustment requires plain permutation p-values, not --smoothed")
    if cfg.adjust == "minp" and cfg.perms < 1:
        raise ValueError("minP adjustment needs --perms >= 1")
    grid = default_grid(cfg.grid_size)
    features = ingest(cfg.input, grid, cfg.estimator)
    os.makedirs(cfg.out, exist_ok=True)
    order = sorted(features)
    if not order:
        warnings.warn("no features found in input; writing empty outputs")
    joint = cfg.adjust == "minp" and bool(order)

    rows = {}
    fitted_parts = []
    residual_parts = []
    failures = {}

    def work(item):
        idx, feature = item
        try:
            return feature, _analyze_one(feature, idx, features[feature], cfg, joint), None
        except Exception as exc:  # per-feature isolation; reported at the end
            if cfg.strict:
                raise
            return feature, None, f"{type(exc).__name__}: {exc}"

    threads = _thread_count(cfg.threads)
    items = list(enumerate(order))
    try:
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                results = list(ex.map(work, items))
        else:
            results = [work(it) for it in items]
    except Exception as exc:
        if not cfg.strict:
            raise
        print(f"error (strict mode): {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for feature, payload, err in results:
        if err is not None:
            failures[feature] = err
            continue
        row, fitted_df, resid_df = payload
        rows[feature] = row
        if fitted_df is not None:
            fitted_parts.append(fitted_df)
        if resid_df is not None:
            residual_parts.append(resid_df)

    if joint:
        ok_order = [f for f in order if f in rows]
        if ok_order:
            _joint_minp(features, ok_order, cfg, rows)

    summary = pd.DataFrame(
        [rows[f] for f in order if f in rows],
        columns=["feature", "method", "r2", "delta", "p_raw", "p_adj",
                 "L", "N", "n_total", "statistic"],
    )
    if len(summary):
        key = "delta" if cfg.method in ("trends", "linear") else "statistic"
        summary = summary.sort_values([key, "feature"], ascending=[False, True],
                                      kind="mergesort").reset_index(drop=True)
    fitted = (pd.concat(fitted_parts, ignore_index=True) if fitted_parts
              else pd.DataFrame(columns=["feature", "level", "p", "value"]))
    residuals = (pd.concat(residual_parts, ignore_index=True) if residual_parts
                 else pd.DataFrame(columns=["feature", "batch", "level", "p", "residual"]))
    summary.to_csv(os.path.join(cfg.out, "summary.csv"), index=False)
    fitted.to_csv(os.path.join(cfg.out, "fitted.csv"), index=False)
    residuals.to_csv(os.path.join(cfg.out, "residuals.csv"), index=False)
    _write_manifest(os.path.join(cfg.out, "manifest.json"), cfg,
                    extra={"failures": failures} if failures else None)
    if cfg.json_path:
        doc = {
            "summary": summary.to_dict(orient="records"),
            "fitted": fitted.to_dict(orient="records"),
            "residuals": residuals.to_dict(orient="records"),
        }
        with open(cfg.json_path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=float)
            fh.write("\n")
    for feature, err in failures.items():
        print(f"feature {feature!r} failed: {err}", file=sys.stderr)
    return 1 if failures else 0


def run_simulation(cfg: SimulationConfig) -> int:
    """Run one of the canned simulation studies and write metric tables."""
    os.makedirs(cfg.out, exist_ok=True)
    if cfg.dump_data:
        grid = default_grid(cfg.grid_size)
        feats = {}
        for model, count in sorted(cfg.models.items()):
            for i in range(count):
                spec = SimSpec(model, n=cfg.n, n_per_level=cfg.n_per_level,
                               sigma=cfg.sigma, rng_seed=[cfg.seed, _MODEL_ID[model], i])
                batches, _ = generate(spec, grid)
                feats[f"{model}_{i:04d}"] = FeatureData(
                    batches=batches,
                    batch_ids=[f"b{b.level}_{j}" for j, b in enumerate(batches)])
        dump(feats, cfg.dump_data)
    if cfg.mode == "power":
        metrics, details = power_experiment(
            cfg.models, n=cfg.n, sigma=cfg.sigma, n_per_level=cfg.n_per_level,
            methods=cfg.methods, n_perm=cfg.perms, alpha=cfg.alpha,
            adjust=cfg.adjust, seed=cfg.seed, grid_size=cfg.grid_size,
            tol=cfg.tol, max_iter=cfg.max_iter)
        metrics.to_csv(os.path.join(cfg.out, "metrics.csv"), index=False)
        details.to_csv(os.path.join(cfg.out, "details.csv"), index=False)
    elif cfg.mode == "convergence":
        table = convergence_experiment(
            model=next(iter(sorted(cfg.models))), n_list=cfg.n_list,
            nl_list=cfg.nl_list, reps=cfg.reps, sigma=cfg.sigma, seed=cfg.seed,
            grid_size=cfg.grid_size, tol=cfg.tol, max_iter=cfg.max_iter)
        table.to_csv(os.path.join(cfg.out, "metrics.csv"), index=False)
    elif cfg.mode == "pvalue-accuracy":
        summary, details = pvalue_accuracy_experiment(
            cfg.models, n=cfg.n, sigma=cfg.sigma, n_per_level=cfg.n_per_level,
            min_null=cfg.min_null, plain_perms=cfg.plain_perms,
            oracle_perms=cfg.oracle_perms, seed=cfg.seed,
            grid_size=cfg.grid_size, tol=cfg.tol, max_iter=cfg.max_iter)
        summary.to_csv(os.path.join(cfg.out, "metrics.csv"), index=False)
        details.to_csv(os.path.join(cfg.out, "details.csv"), index=False)
    elif cfg.mode == "misspecification":
        table = misspecification_experiment(
            model=next(iter(sorted(cfg.models))), count=cfg.count, n=cfg.n,
            sigma=cfg.sigma, seed=cfg.seed, grid_size=cfg.grid_size,
            tol=cfg.tol, max_iter=cfg.max_iter)
        table.to_csv(os.path.join(cfg.out, "metrics.csv"), index=False)
    else:
        raise ValueError(f"unknown simulation mode {cfg.mode!r}")
    _write_manifest(os.path.join(cfg.out, "manifest.json"), cfg)
    return 0


def _parse_models(text):
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "=" in part:
            name, count = part.split("=", 1)
            out[name.strip()] = int(count)
        else:
            out[part] = 1
    bad = set(out) - set(S_MODELS + R_MODELS)
    if bad:
        raise ValueError(f"unknown model(s) {sorted(bad)}")
    return out


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="trendfit",
        description="Trend-constrained regression on ordered sequences of distributions.")
    sub = parser.add_subparsers(dest="command", required=True)

    pa = sub.add_parser("analyze", help="fit and test every feature of a CSV file")
    pa.add_argument("--input", required=True)
    pa.add_argument("--out", required=True)
    pa.add_argument("--method", choices=METHODS, default="trends")
    pa.add_argument("--grid-size", type=int, default=100)
    pa.add_argument("--quantile-estimator", choices=("type7", "ecdf_inf"), default="type7")
    pa.add_argument("--perms", type=int, default=0,
                    help="permutations for p-values (0 disables testing)")
    pa.add_argument("--smoothed", action="store_true",
                    help="use the smoothed enumeration/bootstrap test")
    pa.add_argument("--min-null", type=int, default=1000)
    pa.add_argument("--adjust", choices=("none", "minp"), default="none")
    pa.add_argument("--alpha", type=float, default=0.05)
    pa.add_argument("--seed", type=int, default=0)
    pa.add_argument("--threads", type=int, default=0,
                    help=f"worker threads (default 1 or ${THREADS_ENV})")
    pa.add_argument("--tol", type=float, default=1e-8)
    pa.add_argument("--max-iter", type=int, default=10000)
    pa.add_argument("--strict", action="store_true",
                    help="abort on the first feature failure")
    pa.add_argument("--covariates", default=None,
                    help="comma-separated per-level covariates for --method linear")
    pa.add_argument("--json", dest="json_path", default=None,
                    help="also write one JSON document mirroring the tables")
    pa.add_argument("--no-timestamp", action="store_true",
                    help="omit the timestamp from the manifest (byte-stable output)")

    ps = sub.add_parser("simulate", help="run a canned simulation study")
    ps.add_argument("--out", required=True)
    ps.add_argument("--mode", choices=("power", "convergence", "pvalue-accuracy",
                                       "misspecification"), default="power")
    ps.add_argument("--models", default="S1=10,S2=10,S3=20",
                    help="comma list like S1=50,S2=50,S3=100")
    ps.add_argument("--methods", default="trends,ks",
                    help="comma list from trends,linear,ks,mi (power mode)")
    ps.add_argument("--n", type=int, default=1000)
    ps.add_argument("--n-per-level", type=int, default=1)
    ps.add_argument("--sigma", type=float, default=0.1)
    ps.add_argument("--perms", type=int, default=200)
    ps.add_argument("--min-null", type=int, default=1000)
    ps.add_argument("--plain-perms", type=int, default=120)
    ps.add_argument("--oracle-perms", type=int, default=10000)
    ps.add_argument("--reps", type=int, default=20)
    ps.add_argument("--n-list", default="100,1000")
    ps.add_argument("--nl-list", default="1")
    ps.add_argument("--count", type=int, default=50)
    ps.add_argument("--alpha", type=float, default=0.05)
    ps.add_argument("--adjust", choices=("none", "minp"), default="minp")
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--grid-size", type=int, default=100)
    ps.add_argument("--tol", type=float, default=1e-8)
    ps.add_argument("--max-iter", type=int, default=10000)
    ps.add_argument("--dump-data", default=None,
                    help="also write the generated datasets in the ingest schema")
    ps.add_argument("--no-timestamp", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "analyze":
            cov = None
            if args.covariates:
                cov = [float(x) for x in args.covariates.split(",")]
            cfg = AnalysisConfig(
                input=args.input, out=args.out, method=args.method,
                grid_size=args.grid_size, estimator=args.quantile_estimator,
                perms=args.perms, smoothed=args.smoothed, min_null=args.min_null,
                adjust=args.adjust, alpha=args.alpha, seed=args.seed,
                threads=args.threads, tol=args.tol, max_iter=args.max_iter,
                strict=args.strict, covariates=cov, json_path=args.json_path,
                timestamp=not args.no_timestamp)
            return run_analysis(cfg)
        cfg = SimulationConfig(
            out=args.out, mode=args.mode, models=_parse_models(args.models),
            methods=tuple(m.strip() for m in args.methods.split(",") if m.strip()),
            n=args.n, n_per_level=args.n_per_level, sigma=args.sigma,
            perms=args.perms, min_null=args.min_null,
            oracle_perms=args.oracle_perms, plain_perms=args.plain_perms,
            reps=args.reps,
            n_list=tuple(int(x) for x in args.n_list.split(",")),
            nl_list=tuple(int(x) for x in args.nl_list.split(",")),
            count=args.count, alpha=args.alpha, adjust=args.adjust,
            seed=args.seed, grid_size=args.grid_size, tol=args.tol,
            max_iter=args.max_iter, dump_data=args.dump_data,
            timestamp=not args.no_timestamp)
        return run_simulation(cfg)
    except (SchemaError, CoverageError, UnsupportedError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
