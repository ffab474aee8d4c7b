"""Trend-constrained Wasserstein least-squares fitting.

Given batches of empirical quantile functions tagged with ordinal levels
1..L, this module finds the sequence of fitted quantile functions minimising
the weighted sum of squared quadrature L2 distances to the observations,
subject to the trend constraint: every quantile path over levels is
monotone, with at most one contiguous split between nonincreasing and
nondecreasing quantiles.

For a fixed direction assignment the feasible set is the intersection of
two convex sets -- matrices with nondecreasing rows (valid quantile
functions) and matrices whose columns are monotone in the assigned
direction -- and the projection onto each is a weighted PAVA pass.  Dykstra
alternating projections with residual carriers therefore converge to the
exact constrained optimum.  The outer search tries the 2P single-split
direction assignments and keeps the best.

Two implementation notes:

* For an assignment whose per-column unconstrained PAVA solutions already
  form nondecreasing rows, that assembled matrix *is* the projection onto
  the intersection, so Dykstra can be skipped.  Within a direction block
  the rows are automatically fine (isotonic fits are monotone in their
  data, and the input rows are nondecreasing), so feasibility reduces to
  one check at the direction seam.  Assignments failing the seam check are
  solved iteratively in ascending order of their column-relaxation lower
  bound, which stops after exactly the assignments whose bound undercuts
  the incumbent optimum.  ``exhaustive=True`` disables pruning and records
  every assignment's objective.
* Converged iterates can sit a few ulps outside the constraint sets, so the
  returned matrix is finalised: a row-PAVA pass restores exact row
  monotonicity, then a direction-aware running min/max over levels restores
  exact column monotonicity without breaking the rows (it only selects
  among existing values, and a pointwise min/max of nondecreasing rows is
  nondecreasing).
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import (
    ConvergenceError,
    CoverageError,
    GridMismatchError,
    PreconditionError,
)
from .grid import QuantileFunction, QuantileGrid
from .isotonic import _pava_core

ORIENTATIONS = ("increasing_above", "decreasing_above")


@dataclass(frozen=True, eq=False)
class DirectionConfig:
    """Per-quantile monotonicity directions with a single split at ``split_prob``.

    ``nondecreasing[k]`` is True where the quantile path over levels must be
    nondecreasing: above the split for ``increasing_above``, at or below it
    for ``decreasing_above``.
    """

    split_prob: float
    orientation: str
    nondecreasing: np.ndarray

    def __post_init__(self):
        if self.orientation not in ORIENTATIONS:
            raise ValueError(f"orientation must be one of {ORIENTATIONS}")
        mask = np.array(self.nondecreasing, dtype=bool, copy=True)
        mask.flags.writeable = False
        object.__setattr__(self, "nondecreasing", mask)

    @classmethod
    def from_grid(cls, grid: QuantileGrid, split_prob: float, orientation: str):
        if split_prob != 0.0 and not np.any(grid.probs == split_prob):
            raise ValueError("split_prob must be 0 or one of the grid probabilities")
        above = grid.probs > split_prob
        mask = above if orientation == "increasing_above" else ~above
        return cls(float(split_prob), orientation, mask)


@dataclass(eq=False)
class TrendFit:
    """Result of a trend fit: fitted quantile functions plus summary statistics.

    ``residuals[i]`` is the observed-minus-fitted quantile vector for the
    i-th input batch (same order as passed in).
    """

    fitted: list
    config: DirectionConfig | None
    objective: float
    r_squared: float
    delta_stat: float
    residuals: np.ndarray
    levels: np.ndarray
    weights: np.ndarray
    grid: QuantileGrid

    @property
    def n_levels(self) -> int:
        return len(self.fitted)

    def fitted_matrix(self) -> np.ndarray:
        return np.stack([f.values for f in self.fitted])


# ---------------------------------------------------------------------------
# numba kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _dykstra_trend(x0, nondecr, wl, qw, tol, max_iter):
    """Dykstra projections between the row- and column-monotone sets.

    Returns (y, iterations, converged) where y is the column-step iterate.
    Stops when the max absolute change of y between outer iterations drops
    below tol, or immediately if the input is already a fixed point.
    Internally works on the transpose so the per-quantile projections (the
    hot loop) touch contiguous memory.
    """
    L, P = x0.shape
    xT = np.empty((P, L))
    for l in range(L):
        for k in range(P):
            xT[k, l] = x0[l, k]
    rT = np.zeros((P, L))
    sT = np.zeros((P, L))
    yT = np.empty((P, L))
    yT_prev = np.empty((P, L))
    colbuf = np.empty(L)
    rowbuf = np.empty(P)
    rowout = np.empty(P)
    nb = max(L, P)
    bvals = np.empty(nb)
    bwts = np.empty(nb)
    bcnts = np.empty(nb, np.int64)
    converged = False
    iters = 0
    for t in range(max_iter):
        iters = t + 1
        for k in range(P):
            for l in range(L):
                colbuf[l] = xT[k, l] + rT[k, l]
            _pava_core(colbuf, wl, nondecr[k], yT[k], bvals, bwts, bcnts)
            for l in range(L):
                rT[k, l] = colbuf[l] - yT[k, l]
        if t == 0:
            same = True
            for k in range(P):
                for l in range(L):
                    if yT[k, l] != xT[k, l]:
                        same = False
                        break
                if not same:
                    break
            if same:
                converged = True
                break
        else:
            delta = 0.0
            for k in range(P):
                for l in range(L):
                    d = abs(yT[k, l] - yT_prev[k, l])
                    if d > delta:
                        delta = d
            if delta < tol:
                converged = True
                break
        for k in range(P):
            for l in range(L):
                yT_prev[k, l] = yT[k, l]
        for l in range(L):
            for k in range(P):
                rowbuf[k] = yT[k, l] + sT[k, l]
            _pava_core(rowbuf, qw, True, rowout, bvals, bwts, bcnts)
            for k in range(P):
                sT[k, l] = rowbuf[k] - rowout[k]
                xT[k, l] = rowout[k]
    y = np.empty((L, P))
    for k in range(P):
        for l in range(L):
            y[l, k] = yT[k, l]
    return y, iters, converged


@njit(cache=True, nogil=True)
def _column_sweep(y, nondecr, top_anchor):
    # Running min/max over levels: selects among existing values only, so it
    # never breaks exact row monotonicity (a pointwise min or max of
    # nondecreasing rows is nondecreasing).  The anchor keeps the low-index
    # block on the min side of the seam and the high-index block on the max
    # side, so the repaired seam inherits row monotonicity too.
    L, P = y.shape
    if top_anchor:
        for k in range(P):
            if nondecr[k]:
                for l in range(1, L):
                    if y[l, k] < y[l - 1, k]:
                        y[l, k] = y[l - 1, k]
            else:
                for l in range(1, L):
                    if y[l, k] > y[l - 1, k]:
                        y[l, k] = y[l - 1, k]
    else:
        for k in range(P):
            if nondecr[k]:
                for l in range(L - 2, -1, -1):
                    if y[l, k] > y[l + 1, k]:
                        y[l, k] = y[l + 1, k]
            else:
                for l in range(L - 2, -1, -1):
                    if y[l, k] < y[l + 1, k]:
                        y[l, k] = y[l + 1, k]


@njit(cache=True, nogil=True)
def _finalize_feasible(y, nondecr, top_anchor, qw):
    """Make y exactly feasible in place: row-PAVA, then column min/max sweeps.

    ``top_anchor`` selects the sweep direction (downward from level 1 for a
    nonincreasing-then-nondecreasing direction layout, upward from level L
    for the reverse) so that the two direction blocks stay consistent across
    their seam.
    """
    L, P = y.shape
    nb = max(L, P)
    bvals = np.empty(nb)
    bwts = np.empty(nb)
    bcnts = np.empty(nb, np.int64)
    for l in range(L):
        _pava_core(y[l], qw, True, y[l], bvals, bwts, bcnts)
    _column_sweep(y, nondecr, top_anchor)


@njit(cache=True, nogil=True)
def _column_pava_both(x, wl):
    """Per-column weighted PAVA in both directions, with squared-error costs."""
    L, P = x.shape
    sol_inc = np.empty((L, P))
    sol_dec = np.empty((L, P))
    cost_inc = np.empty(P)
    cost_dec = np.empty(P)
    colbuf = np.empty(L)
    out = np.empty(L)
    bvals = np.empty(L)
    bwts = np.empty(L)
    bcnts = np.empty(L, np.int64)
    for k in range(P):
        for l in range(L):
            colbuf[l] = x[l, k]
        _pava_core(colbuf, wl, True, out, bvals, bwts, bcnts)
        c = 0.0
        for l in range(L):
            sol_inc[l, k] = out[l]
            d = x[l, k] - out[l]
            c += wl[l] * d * d
        cost_inc[k] = c
        _pava_core(colbuf, wl, False, out, bvals, bwts, bcnts)
        c = 0.0
        for l in range(L):
            sol_dec[l, k] = out[l]
            d = x[l, k] - out[l]
            c += wl[l] * d * d
        cost_dec[k] = c
    return sol_inc, sol_dec, cost_inc, cost_dec


@njit(cache=True, nogil=True)
def _dykstra_linear(x0, H, wl, qw, tol, max_iter):
    """Dykstra projections between affine columns (hat matrix H) and QF rows.

    Returns the row-step iterate, so the output rows are exactly
    nondecreasing while the columns are affine within tol.
    """
    L, P = x0.shape
    x = x0.copy()
    r = np.zeros((L, P))
    s = np.zeros((L, P))
    y = np.empty((L, P))
    y_prev = np.empty((L, P))
    z = np.empty((L, P))
    rowbuf = np.empty(P)
    nb = max(L, P)
    bvals = np.empty(nb)
    bwts = np.empty(nb)
    bcnts = np.empty(nb, np.int64)
    converged = False
    iters = 0
    for t in range(max_iter):
        iters = t + 1
        for l in range(L):
            for k in range(P):
                z[l, k] = x[l, k] + r[l, k]
        for l in range(L):
            for k in range(P):
                acc = 0.0
                for m in range(L):
                    acc += H[l, m] * z[m, k]
                y[l, k] = acc
        for l in range(L):
            for k in range(P):
                r[l, k] = z[l, k] - y[l, k]
        if t > 0:
            delta = 0.0
            for l in range(L):
                for k in range(P):
                    d = abs(y[l, k] - y_prev[l, k])
                    if d > delta:
                        delta = d
            if delta < tol:
                converged = True
        for l in range(L):
            for k in range(P):
                y_prev[l, k] = y[l, k]
        for l in range(L):
            for k in range(P):
                rowbuf[k] = y[l, k] + s[l, k]
            _pava_core(rowbuf, qw, True, x[l], bvals, bwts, bcnts)
            for k in range(P):
                s[l, k] = rowbuf[k] - x[l, k]
        if converged:
            break
    return x, iters, converged


# ---------------------------------------------------------------------------
# public solver
# ---------------------------------------------------------------------------

def alternating_projections(x, delta: DirectionConfig, level_weights, grid: QuantileGrid,
                            tol: float = 1e-8, max_iter: int = 10000) -> np.ndarray:
    """Project an L x (P-1) matrix onto {QF rows} intersect {delta-monotone columns}.

    Rows of ``x`` must already be nondecreasing.  The result is exactly
    feasible and within ``tol`` of the metric projection (level weights over
    rows, quadrature weights over columns).
    """
    x = np.ascontiguousarray(x, dtype=float)
    if x.ndim != 2:
        raise PreconditionError("x must be a 2-D matrix of quantile values")
    if not np.all(np.isfinite(x)):
        raise PreconditionError("x must be finite")
    if np.any(x[:, 1:] < x[:, :-1]):
        raise PreconditionError("every row of x must be nondecreasing")
    L, P = x.shape
    wl = np.ascontiguousarray(level_weights, dtype=float)
    if wl.shape != (L,) or np.any(wl <= 0):
        raise PreconditionError("level_weights must be positive, one per row")
    if P != grid.size:
        raise GridMismatchError(f"matrix has {P} columns but grid has {grid.size} probabilities")
    mask = np.ascontiguousarray(delta.nondecreasing, dtype=np.bool_)
    if mask.shape != (P,):
        raise GridMismatchError("direction mask length must match the grid")
    y, iters, converged = _dykstra_trend(x, mask, wl, grid.quad_weights, tol, max_iter)
    if not converged:
        raise ConvergenceError(
            f"alternating projections did not converge within {max_iter} iterations",
            last_iterate=y,
        )
    _finalize_feasible(y, mask, delta.orientation == "increasing_above", grid.quad_weights)
    return y


def follows_trend(qfs) -> bool:
    """Direct trend check: monotone quantile paths with one contiguous split."""
    values = np.stack([f.values for f in qfs])
    d = np.diff(values, axis=0)
    inc_ok = np.all(d >= 0, axis=0)
    dec_ok = np.all(d <= 0, axis=0)
    if not np.all(inc_ok | dec_ok):
        return False
    forced = np.where(inc_ok & dec_ok, 0, np.where(inc_ok, 1, -1))
    seq = forced[forced != 0]
    return bool(np.count_nonzero(np.diff(seq) != 0) <= 1)


def _stack_batches(batches, grid=None):
    batches = list(batches)
    if not batches:
        raise ValueError("need at least one batch")
    if grid is None:
        grid = batches[0].empirical_qf.grid
    for b in batches:
        if not grid.same_as(b.empirical_qf.grid):
            raise GridMismatchError("batches live on different grids")
    qf = np.ascontiguousarray(np.stack([b.empirical_qf.values for b in batches]))
    levels = np.array([b.level for b in batches], dtype=np.int64)
    weights = np.array([b.weight for b in batches], dtype=float)
    return qf, levels, weights, grid


def _pool_matrix(qf, levels, weights):
    """Per-level weighted means of the quantile rows; checks level coverage."""
    L = int(levels.max())
    lev0 = levels - 1
    wl = np.bincount(lev0, weights=weights, minlength=L)
    if np.any(wl == 0):
        missing = (np.nonzero(wl == 0)[0] + 1).tolist()
        raise CoverageError(f"no batch at level(s) {missing}")
    member = (lev0[None, :] == np.arange(L)[:, None]).astype(float)
    x = (member * weights) @ qf / wl[:, None]
    return np.ascontiguousarray(x), wl


def _solve_trend_matrix(qf, levels, weights, grid, tol=1e-8, max_iter=10000,
                        exhaustive=False, want_y=True):
    """Direction search over the 2P single-split assignments.

    Returns (y, split_index, orientation, objective, per_config_W), where
    per_config_W is populated only when ``exhaustive``.  Scan order is split
    index ascending with increasing_above first; ties keep the earliest.
    ``want_y=False`` skips materialising the fitted matrix (y is None unless
    the winner came from the iterative solver) for objective-only callers.
    """
    N, P = qf.shape
    qw = grid.quad_weights
    x, wl = _pool_matrix(qf, levels, weights)
    L = x.shape[0]

    resid = qf - x[levels - 1]
    base = float(np.dot(weights, (resid * resid) @ qw))

    sol_inc, sol_dec, cost_inc, cost_dec = _column_pava_both(x, wl)
    qwc_inc = qw * cost_inc
    qwc_dec = qw * cost_dec
    pre_inc = np.concatenate(([0.0], np.cumsum(qwc_inc)))
    pre_dec = np.concatenate(([0.0], np.cumsum(qwc_dec)))
    js = np.arange(P)
    # increasing_above at split j: columns < j nonincreasing, >= j nondecreasing
    lb_inc_above = base + pre_dec[js] + (pre_inc[P] - pre_inc[js])
    # decreasing_above at split j: columns < j nondecreasing, >= j nonincreasing
    lb_dec_above = base + pre_inc[js] + (pre_dec[P] - pre_dec[js])
    # the assembled per-column solutions are row-feasible within a direction
    # block (isotonic fits are monotone in their data), so feasibility -- and
    # with it exactness of the lower bound -- hinges on the one seam
    seam_inc_above = np.ones(P, dtype=bool)
    seam_dec_above = np.ones(P, dtype=bool)
    if P > 1:
        seam_inc_above[1:] = np.all(sol_dec[:, :-1] <= sol_inc[:, 1:], axis=0)
        seam_dec_above[1:] = np.all(sol_inc[:, :-1] <= sol_dec[:, 1:], axis=0)

    def lb_of(c):
        j, orient_idx = divmod(c, 2)
        return lb_inc_above[j] if orient_idx == 0 else lb_dec_above[j]

    # scan-order config index c = 2j (increasing_above) or 2j+1 (decreasing_above);
    # ties keep the smallest c, matching the enumeration order of the outer loop
    best_W = np.inf
    best_c = -1
    best_y = None  # only set when the winner came from the iterative solver
    per_config = np.full(2 * P, np.nan) if exhaustive else None
    unsolved = []

    for c in range(2 * P):
        j, orient_idx = divmod(c, 2)
        feasible = seam_inc_above[j] if orient_idx == 0 else seam_dec_above[j]
        if not feasible:
            unsolved.append(c)
            continue
        W = lb_of(c)
        if per_config is not None:
            per_config[c] = W
        if W < best_W:
            best_W, best_c, best_y = W, c, None

    if unsolved:
        # Solve seam-violating splits cheapest lower bound first: once the
        # next lower bound reaches the incumbent, no remaining split can win
        # (their optima only exceed their bounds), so the loop short-circuits
        # after exactly the splits whose bound undercuts the global optimum.
        unsolved.sort(key=lambda c: (lb_of(c), c))
        for c in unsolved:
            lb = lb_of(c)
            if not exhaustive:
                if lb > best_W:
                    break
                if lb == best_W and c > best_c:
                    continue
            j, orient_idx = divmod(c, 2)
            mask = (js >= j) if orient_idx == 0 else (js < j)
            y, _, converged = _dykstra_trend(x, mask, wl, qw, tol, max_iter)
            if not converged:
                raise ConvergenceError(
                    f"alternating projections did not converge within {max_iter} iterations",
                    last_iterate=y,
                )
            _finalize_feasible(y, mask, orient_idx == 0, qw)
            dy = x - y
            W = base + float(np.dot(qw, wl @ (dy * dy)))
            if per_config is not None:
                per_config[c] = W
            if W < best_W or (W == best_W and c < best_c):
                best_W, best_c, best_y = W, c, y

    j_star, orient_idx = divmod(best_c, 2)
    orientation = ORIENTATIONS[orient_idx]
    if best_y is None:
        if not want_y:
            return None, j_star, orientation, best_W, per_config
        mask = (js >= j_star) if orientation == "increasing_above" else (js < j_star)
        y = np.where(mask[None, :], sol_inc, sol_dec)
        y = np.ascontiguousarray(y)
        _finalize_feasible(y, mask, orientation == "increasing_above", qw)
    else:
        y = best_y
    dy = x - y
    objective = base + float(np.dot(qw, wl @ (dy * dy)))
    return y, j_star, orientation, objective, per_config


def _r_squared_parts(qf, weights, qw):
    """Total weighted squared deviation from the weighted Wasserstein mean."""
    fbar = weights @ qf / weights.sum()
    dev = qf - fbar
    return float(np.dot(weights, (dev * dev) @ qw))


def _r2_from_objective(objective, denom):
    if denom == 0.0:
        warnings.warn(
            "all batches identical: total Wasserstein variance is zero, R^2 set to 1",
            RuntimeWarning,
            stacklevel=3,
        )
        return 1.0
    if objective > denom * (1 + 1e-9) + 1e-12:
        raise AssertionError(
            f"fit objective {objective} exceeds total variance {denom}; "
            "the constant sequence should never be beaten by less than the optimum"
        )
    r2 = 1.0 - objective / denom
    # guard against float dust just outside [0, 1]; real violations raise above
    return min(max(r2, 0.0), 1.0)


def _delta_from_matrix(y, qw):
    L = y.shape[0]
    return float(np.dot(qw, np.abs(y[0] - y[L - 1]))) / L


def _build_fit(qf, levels, weights, grid, y, config, objective):
    denom = _r_squared_parts(qf, weights, grid.quad_weights)
    r2 = _r2_from_objective(objective, denom)
    fitted = [QuantileFunction(grid, y[l]) for l in range(y.shape[0])]
    residuals = qf - y[levels - 1]
    return TrendFit(
        fitted=fitted,
        config=config,
        objective=objective,
        r_squared=r2,
        delta_stat=_delta_from_matrix(y, grid.quad_weights),
        residuals=residuals,
        levels=levels.copy(),
        weights=weights.copy(),
        grid=grid,
    )


def fit_trends(batches, grid=None, tol: float = 1e-8, max_iter: int = 10000) -> TrendFit:
    """Fit the trend-constrained Wasserstein least-squares model to batches.

    Every level 1..L must have at least one batch.  Ties at a level are
    pooled to their weighted mean with summed weights before fitting.
    """
    qf, levels, weights, grid = _stack_batches(batches, grid)
    y, j_star, orientation, objective, _ = _solve_trend_matrix(
        qf, levels, weights, grid, tol, max_iter
    )
    split_prob = 0.0 if j_star == 0 else float(grid.probs[j_star - 1])
    config = DirectionConfig.from_grid(grid, split_prob, orientation)
    return _build_fit(qf, levels, weights, grid, y, config, objective)


def _linear_hat_matrix(t, wl):
    L = t.size
    if L <= 2:
        return np.eye(L)
    A = np.stack([np.ones(L), t], axis=1)
    AtW = A.T * wl
    return A @ np.linalg.solve(AtW @ A, AtW)


def _solve_linear_matrix(qf, levels, weights, covariates, grid, tol=1e-8, max_iter=10000):
    N, P = qf.shape
    qw = grid.quad_weights
    x, wl = _pool_matrix(qf, levels, weights)
    L = x.shape[0]
    t = np.asarray(covariates, dtype=float)
    if t.shape != (L,):
        raise ValueError(f"need one covariate per level, got {t.size} for L={L}")
    if np.any(np.diff(t) <= 0):
        raise ValueError("covariates must be strictly increasing")
    H = np.ascontiguousarray(_linear_hat_matrix(t, wl))
    y, _, converged = _dykstra_linear(x, H, wl, qw, tol, max_iter)
    if not converged:
        raise ConvergenceError(
            f"alternating projections did not converge within {max_iter} iterations",
            last_iterate=y,
        )
    resid = qf - x[levels - 1]
    base = float(np.dot(weights, (resid * resid) @ qw))
    dy = x - y
    objective = base + float(np.dot(qw, wl @ (dy * dy)))
    return y, objective


def fit_linear_trends(batches, covariates=None, grid=None, tol: float = 1e-8,
                      max_iter: int = 10000) -> TrendFit:
    """Variant where each quantile evolves affinely in a per-level covariate.

    The column projection becomes weighted simple linear regression on the
    covariates (default 1..L) and there is no direction search.  Fitted rows
    are exact quantile functions; columns are affine within tol.
    """
    qf, levels, weights, grid = _stack_batches(batches, grid)
    L = int(levels.max())
    if covariates is None:
        covariates = np.arange(1, L + 1, dtype=float)
    y, objective = _solve_linear_matrix(qf, levels, weights, covariates, grid, tol, max_iter)
    return _build_fit(qf, levels, weights, grid, y, None, objective)
