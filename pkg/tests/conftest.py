"""Shared brute-force oracles and data helpers for the test suite.

The oracles deliberately avoid the production code paths: monotone fits are
checked against exhaustive enumeration of contiguous pooling partitions,
and projections against a dense constrained quadratic solve.
"""
import itertools

import numpy as np

import trendfit as tf


def partition_pava_oracle(values, weights, increasing=True):
    """Least-squares monotone fit by enumerating contiguous pooling partitions.

    Every monotone least-squares fit is piecewise constant on contiguous
    blocks with block values equal to weighted block means; the optimum is
    the cheapest partition whose block means are monotone.
    """
    y = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = y.size
    best_cost = np.inf
    best_fit = None
    for splits in itertools.product([False, True], repeat=n - 1):
        bounds = [0] + [i + 1 for i, s in enumerate(splits) if s] + [n]
        means = np.array([np.average(y[a:b], weights=w[a:b])
                          for a, b in zip(bounds[:-1], bounds[1:])])
        diffs = np.diff(means)
        ok = np.all(diffs >= 0) if increasing else np.all(diffs <= 0)
        if not ok:
            continue
        fit = np.concatenate([np.full(b - a, m)
                              for (a, b), m in zip(zip(bounds[:-1], bounds[1:]), means)])
        cost = np.sum(w * (y - fit) ** 2)
        if cost < best_cost:
            best_cost = cost
            best_fit = fit
    return best_fit


def qp_projection_oracle(x, nondecreasing_mask, level_weights, quad_weights):
    """Dense constrained QP for the projection onto {QF rows, monotone columns}."""
    import cvxpy as cp

    L, P = x.shape
    v = cp.Variable((L, P))
    cons = []
    if P > 1:
        cons.append(v[:, 1:] >= v[:, :-1])
    if L > 1:
        for k in range(P):
            if nondecreasing_mask[k]:
                cons.append(v[1:, k] >= v[:-1, k])
            else:
                cons.append(v[1:, k] <= v[:-1, k])
    wl = np.asarray(level_weights, dtype=float)
    qw = np.asarray(quad_weights, dtype=float)
    obj = cp.sum(cp.multiply(np.outer(wl, qw), cp.square(v - x)))
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL)
    if v.value is None:  # pragma: no cover - solver fallback
        prob.solve(solver=cp.SCS, eps=1e-10)
    return np.asarray(v.value)


def lattice_trend_oracle(x, level_weights, quad_weights, lattice):
    """Best trending fit whose values all come from a finite lattice.

    Enumerates monotone per-column candidates for each single-split
    direction assignment and minimises over row-feasible combinations by
    dynamic programming over adjacent columns.  Restricted to L x 3 inputs.
    """
    x = np.asarray(x, dtype=float)
    L, P = x.shape
    assert P == 3, "oracle implemented for exactly three grid columns"
    wl = np.asarray(level_weights, dtype=float)
    qw = np.asarray(quad_weights, dtype=float)
    inc = np.array(list(itertools.combinations_with_replacement(sorted(lattice), L)))
    dec = inc[:, ::-1]
    best = np.inf
    for split in range(P + 1):
        for first_dec in (True, False):
            cols = []
            for k in range(P):
                below = k < split
                use_dec = below if first_dec else not below
                cols.append(dec if use_dec else inc)
            costs = [((x[:, k][None, :] - cols[k]) ** 2 @ wl) * qw[k] for k in range(P)]
            ok01 = np.all(cols[0][:, None, :] <= cols[1][None, :, :], axis=2)
            ok12 = np.all(cols[1][:, None, :] <= cols[2][None, :, :], axis=2)
            c0 = np.where(ok01, costs[0][:, None], np.inf).min(axis=0)
            c2 = np.where(ok12, costs[2][None, :], np.inf).min(axis=1)
            total = np.min(c0 + costs[1] + c2)
            best = min(best, float(total))
    return best


def make_batches(rng, grid, level_means, n=40, n_per_level=1, weight_spread=0.0,
                 estimator="type7"):
    """Gaussian batches with per-level means; optional non-uniform weights."""
    batches = []
    for level, mu in enumerate(level_means, start=1):
        for _ in range(n_per_level):
            w = 1.0 if weight_spread == 0 else float(rng.uniform(1 - weight_spread,
                                                                 1 + weight_spread))
            samples = rng.normal(mu, 1.0, n)
            batches.append(tf.BatchObservation.from_samples(level, samples, grid, w,
                                                            estimator))
    return batches


def random_qf(rng, grid, scale=1.0):
    return tf.QuantileFunction(grid, np.sort(rng.normal(0.0, scale, grid.size)))
