"""Reusable simulation experiments behind the CLI's ``simulate`` command.

Three shapes: a power study (false/true positive rates and AUROC of the
trend test against the omnibus baselines, with joint minP correction), an
estimator-convergence study (Wasserstein error of fits vs raw empirical
distributions over sample sizes and replication), and a p-value accuracy
study (smoothed vs plain permutation p-values scored against a long-run
oracle built from freshly simulated label-permuted datasets).
"""
from __future__ import annotations

import numpy as np
import pandas as pd

from .effect_stats import delta_emp
from .errors import UnsupportedError
from .fitting import _r_squared_parts, _stack_batches, fit_trends
from .grid import default_grid
from .inference import (
    _max_pairwise_ks,
    _mi_statistic,
    _pooled_by_level,
    _r2_statistic,
    _silverman_bw,
    permutation_test,
    smoothed_permutation_test,
    stepdown_minp,
)
from .simulate import (
    R_MODELS,
    S_MODELS,
    SimSpec,
    classification_metrics,
    delta_true,
    generate,
    wasserstein_error,
)
from .wasserstein import wasserstein_mean

_MODEL_ID = {m: i + 1 for i, m in enumerate(S_MODELS + R_MODELS)}
_NULL_MODELS = {"S3", "R1"}


def _seed_material(seed, *parts):
    return [int(seed if seed is not None else 0), *[int(p) for p in parts]]


def joint_permutation_pvalues(observed, null_matrix):
    """Raw and step-down minP-adjusted p-values from a shared null matrix.

    ``null_matrix[j, b]`` is feature j's statistic under shared shuffle b.
    Raw p-values use the add-one convention; the per-permutation p-value
    matrix fed to the step-down adjustment ranks each permuted statistic
    within its own row (count including itself, add-one).
    """
    obs = np.asarray(observed, dtype=float)
    null = np.asarray(null_matrix, dtype=float)
    m, B = null.shape
    p_raw = np.empty(m)
    p_matrix = np.empty((m, B))
    for j in range(m):
        row = np.sort(null[j])
        # #{b' : null[j, b'] >= v} = B - searchsorted(row, v, 'left')
        p_raw[j] = (1 + B - np.searchsorted(row, obs[j], side="left")) / (1 + B)
        ge = B - np.searchsorted(row, null[j], side="left")
        p_matrix[j] = (1.0 + ge) / (1.0 + B)
    p_adj = stepdown_minp(p_matrix, p_raw)
    return p_raw, p_adj


class _TrendMachine:
    """Precomputed pieces for refitting one dataset under permuted labels."""

    def __init__(self, batches, grid, fitter="trends", covariates=None,
                 tol=1e-8, max_iter=10000):
        self.qf, self.levels, self.weights, self.grid = _stack_batches(batches, grid)
        self.fitter = fitter
        self.covariates = covariates
        self.tol = tol
        self.max_iter = max_iter
        self.denom = _r_squared_parts(self.qf, self.weights, self.grid.quad_weights)

    def r2(self, levels=None, qf=None):
        return _r2_statistic(
            self.qf if qf is None else qf,
            self.levels if levels is None else levels,
            self.weights,
            self.grid,
            self.fitter,
            self.covariates,
            self.tol,
            self.max_iter,
            self.denom if qf is None else None,
        )


class _SampleShuffleMachine:
    """Pooled-sample statistics for one dataset under shared index shuffles."""

    def __init__(self, batches, statistic, grid_points=256):
        pooled = _pooled_by_level(batches)
        self.sizes = np.array([p.size for p in pooled])
        self.bounds = np.concatenate(([0], np.cumsum(self.sizes)))
        self.flat = np.concatenate(pooled)
        if statistic == "ks":
            self._stat = lambda levels: _max_pairwise_ks([np.sort(s) for s in levels])
        else:
            lo, hi = float(self.flat.min()), float(self.flat.max())
            if hi == lo:
                self._stat = lambda levels: 0.0
            else:
                bw_floor = max(1e-3 * (hi - lo), 1e-12)
                pad = max(4.0 * _silverman_bw(self.flat), 4.0 * bw_floor)
                centers = np.linspace(lo - pad, hi + pad, grid_points)
                dx = centers[1] - centers[0]
                self._stat = lambda levels: _mi_statistic(levels, centers, dx, bw_floor)
        self.observed = self.stat_of(np.arange(self.flat.size))

    def stat_of(self, index_perm):
        shuffled = self.flat[index_perm]
        levels = [shuffled[self.bounds[l]:self.bounds[l + 1]]
                  for l in range(self.sizes.size)]
        return self._stat(levels)


def _parse_model_counts(model_counts):
    items = sorted(model_counts.items(), key=lambda kv: _MODEL_ID[kv[0]])
    datasets = []
    for model, count in items:
        if count < 1:
            raise ValueError(f"count for {model} must be positive")
        datasets.extend((model, i) for i in range(count))
    return datasets


def power_experiment(model_counts, n=1000, sigma=0.1, n_per_level=1,
                     methods=("trends", "ks", "mi"), n_perm=1000, alpha=0.05,
                     adjust="minp", seed=0, grid_size=100, tol=1e-8,
                     max_iter=10000):
    """FPR/TPR/AUROC of each method over datasets drawn from several models.

    One dataset plays the role of one feature: p-values are corrected
    jointly across all datasets with shared shuffles (step-down minP) when
    ``adjust='minp'``.  Rates use adjusted p-values at ``alpha``; the AUROC
    ranks raw p-values with statistic tie-breaks, trending models against
    null models (S3, R1).
    """
    datasets = _parse_model_counts(model_counts)
    Ls = {SimSpec(m, n=1).L for m, _ in datasets}
    if len(Ls) > 1:
        raise UnsupportedError("power study needs a single shared level count")
    grid = default_grid(grid_size)
    data = [generate(SimSpec(m, n=n, n_per_level=n_per_level, sigma=sigma,
                             rng_seed=_seed_material(seed, _MODEL_ID[m], i)), grid)[0]
            for m, i in datasets]
    labels = np.array(["null" if m in _NULL_MODELS else "trending" for m, _ in datasets])
    details = pd.DataFrame({
        "model": [m for m, _ in datasets],
        "dataset": [i for _, i in datasets],
        "label": labels,
    })
    rows = []
    for method_index, method in enumerate(methods):
        rng = np.random.default_rng(_seed_material(seed, 91, method_index))
        if method in ("trends", "linear"):
            fitter = "trends" if method == "trends" else "linear_trends"
            machines = [_TrendMachine(b, grid, fitter, tol=tol, max_iter=max_iter)
                        for b in data]
            template = machines[0].levels
            perms = [rng.permutation(template) for _ in range(n_perm)]
            obs = np.array([mc.r2() for mc in machines])
            null = np.array([[mc.r2(levels=p) for p in perms] for mc in machines])
        elif method in ("ks", "mi"):
            machines = [_SampleShuffleMachine(b, method) for b in data]
            n_total = machines[0].flat.size
            if any(mc.flat.size != n_total for mc in machines):
                raise UnsupportedError("shared shuffles need equal sample counts")
            perms = [rng.permutation(n_total) for _ in range(n_perm)]
            obs = np.array([mc.observed for mc in machines])
            null = np.array([[mc.stat_of(p) for p in perms] for mc in machines])
        else:
            raise ValueError(f"unknown method {method!r}")
        p_raw, p_adj = joint_permutation_pvalues(obs, null)
        p_eff = p_adj if adjust == "minp" else p_raw
        _, _, auroc = classification_metrics(p_raw, labels, alpha, statistics=obs)
        fpr = float(np.mean(p_eff[labels == "null"] <= alpha))
        tpr = float(np.mean(p_eff[labels == "trending"] <= alpha))
        rows.append({"method": method, "FPR": fpr, "TPR": tpr, "AUROC": auroc})
        details[f"stat_{method}"] = obs
        details[f"p_raw_{method}"] = p_raw
        details[f"p_adj_{method}"] = p_adj
    return pd.DataFrame(rows), details


def convergence_experiment(model="S1", n_list=(100, 1000), nl_list=(1,),
                           reps=20, sigma=0.1, seed=0, grid_size=100,
                           tol=1e-8, max_iter=10000):
    """Wasserstein error of trend fits vs empirical distributions.

    The empirical estimate of a level is its batch quantile function (the
    per-level Wasserstein mean when a level has several batches).
    """
    grid = default_grid(grid_size)
    rows = []
    for n in n_list:
        for nl in nl_list:
            fit_err = np.empty(reps)
            emp_err = np.empty(reps)
            for rep in range(reps):
                spec = SimSpec(model, n=int(n), n_per_level=int(nl), sigma=sigma,
                               rng_seed=_seed_material(seed, _MODEL_ID[model],
                                                       int(n), int(nl), rep))
                batches, truth = generate(spec, grid)
                fit = fit_trends(batches, grid, tol=tol, max_iter=max_iter)
                fit_err[rep] = wasserstein_error(fit.fitted, truth)
                empirical = [
                    wasserstein_mean([b.empirical_qf for b in batches if b.level == l + 1])
                    for l in range(spec.L)
                ]
                emp_err[rep] = wasserstein_error(empirical, truth)
            rows.append({
                "model": model, "n": int(n), "n_per_level": int(nl), "reps": reps,
                "fit_error_mean": float(fit_err.mean()),
                "fit_error_sd": float(fit_err.std(ddof=1)) if reps > 1 else 0.0,
                "empirical_error_mean": float(emp_err.mean()),
                "empirical_error_sd": float(emp_err.std(ddof=1)) if reps > 1 else 0.0,
            })
    return pd.DataFrame(rows)


def pvalue_accuracy_experiment(model_counts, n=100, sigma=0.1, n_per_level=1,
                               min_null=1000, plain_perms=120,
                               oracle_perms=10000, seed=0, grid_size=100,
                               tol=1e-8, max_iter=10000):
    """Smoothed vs plain permutation p-values against a long-run oracle.

    The oracle p-value of each dataset counts how often the fit statistic of
    a freshly simulated, label-permuted dataset from the same model reaches
    the observed one (add-one convention over ``oracle_perms`` draws).
    """
    grid = default_grid(grid_size)
    detail_rows = []
    for model, count in sorted(model_counts.items(), key=lambda kv: _MODEL_ID[kv[0]]):
        mid = _MODEL_ID[model]
        for i in range(count):
            spec = SimSpec(model, n=n, n_per_level=n_per_level, sigma=sigma,
                           rng_seed=_seed_material(seed, mid, i))
            batches, _ = generate(spec, grid)
            smoothed = smoothed_permutation_test(
                batches, min_null=min_null, rng_seed=_seed_material(seed, mid, i, 1),
                grid=grid, tol=tol, max_iter=max_iter)
            plain = permutation_test(
                batches, n_perm=plain_perms, rng_seed=_seed_material(seed, mid, i, 2),
                grid=grid, tol=tol, max_iter=max_iter)
            obs = smoothed.statistic
            rng = np.random.default_rng(_seed_material(seed, mid, i, 3))
            exceed = 0
            for j in range(oracle_perms):
                fresh_spec = SimSpec(model, n=n, n_per_level=n_per_level, sigma=sigma,
                                     rng_seed=_seed_material(seed, mid, i, 4, j))
                fresh, _ = generate(fresh_spec, grid)
                machine = _TrendMachine(fresh, grid, tol=tol, max_iter=max_iter)
                if machine.r2(levels=rng.permutation(machine.levels)) >= obs:
                    exceed += 1
            p_oracle = (1 + exceed) / (1 + oracle_perms)
            detail_rows.append({
                "model": model, "dataset": i, "r2": obs,
                "p_smoothed": smoothed.p_raw, "p_plain": plain.p_raw,
                "p_oracle": p_oracle,
            })
    details = pd.DataFrame(detail_rows)
    rows = []
    groups = [("all", details)]
    groups += [(m, details[details["model"] == m]) for m in sorted(model_counts, key=_MODEL_ID.get)]
    for name, part in groups:
        rows.append({
            "model": name,
            "datasets": len(part),
            "mean_oracle_p": float(part["p_oracle"].mean()),
            "mse_smoothed": float(((part["p_smoothed"] - part["p_oracle"]) ** 2).mean()),
            "mse_plain": float(((part["p_plain"] - part["p_oracle"]) ** 2).mean()),
        })
    return pd.DataFrame(rows), details


def misspecification_experiment(model="R3", count=50, n=100, sigma=0.3,
                                seed=0, grid_size=100, tol=1e-8, max_iter=10000):
    """Squared error of fitted vs empirical total-change estimates.

    Compares the L1 distance between the first and last fitted distributions
    (the total change of a trending sequence) and the sum of adjacent-level
    empirical distances, both against the exact underlying total change.
    """
    grid = default_grid(grid_size)
    target = delta_true(model)
    rows = []
    for i in range(count):
        spec = SimSpec(model, n=n, n_per_level=1, sigma=sigma,
                       rng_seed=_seed_material(seed, _MODEL_ID[model], i))
        batches, _ = generate(spec, grid)
        fit = fit_trends(batches, grid, tol=tol, max_iter=max_iter)
        fitted_total = fit.delta_stat * fit.n_levels
        emp_total = delta_emp(batches, grid)
        rows.append({
            "model": model, "dataset": i, "delta_true": target,
            "delta_fit_total": fitted_total, "delta_emp_total": emp_total,
            "sqerr_fit": (fitted_total - target) ** 2,
            "sqerr_emp": (emp_total - target) ** 2,
        })
    return pd.DataFrame(rows)
