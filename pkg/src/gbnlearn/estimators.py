"""Coefficient and variance estimators for linear-Gaussian networks.

Every coefficient method works node by node: regress a node's column on
its parents' columns. The methods differ in how they turn rows into a
coefficient vector:

* ``least_squares``: one ordinary least-squares solve over all rows.
* ``batch_avg`` / ``batch_med``: split the rows into disjoint batches of
  size ``p + batch_extra``, solve each batch by least squares, then
  aggregate with the mean or the coordinate-wise median. The median
  variant trades a constant factor of accuracy for robustness to grossly
  corrupted rows.
* ``cauchy_est_tree``: square batches of exactly ``p`` rows, solved
  directly; the batch errors are heavy-tailed (Cauchy-like) but their
  coordinate-wise median concentrates.
* ``cauchy_est``: same square batches, but the median is taken in a
  whitened coordinate system derived from the Cholesky factor of the
  empirical parent covariance, which handles correlated parents.

``fit`` drives a full model estimate: the first ``floor(split * m)`` rows
feed the coefficient method and the remaining rows feed variance
recovery (mean of squared residuals, or a median-absolute-deviation
estimate for contaminated data).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .dag import Dag
from .errors import (
    BatchTooSmall,
    CholeskyFailed,
    ConfigInvalid,
    DimensionMismatch,
    InsufficientSamples,
    InvalidParameter,
    RankDeficient,
)
from .gbn import GaussianBayesNet

COEFFICIENT_METHODS = ("least_squares", "batch_avg", "batch_med", "cauchy_est", "cauchy_est_tree")
METHODS = COEFFICIENT_METHODS + ("empirical_mle",)
VARIANCE_METHODS = ("empirical", "mad")

# Consistency factor relating the median absolute deviation to the
# standard deviation of a Gaussian (1 / Phi^-1(3/4), rounded as is
# conventional).
MAD_SCALE = 1.4826

# Relative threshold on the Gram matrix X^T X below which a design is
# declared rank deficient. lstsq's cutoff acts on singular values of X,
# so the equivalent value there is the square root.
RANK_TOLERANCE = 1e-12
_LSTSQ_RCOND = 1e-6

# A variance estimate at or below this floor is degenerate: the value is
# substituted so the model stays constructible, and the node is flagged.
DEGENERATE_VARIANCE = 1e-300


@dataclass(frozen=True)
class FitConfig:
    """Estimator selection and its knobs.

    ``batch_extra`` is the number of rows beyond the parent count in each
    batch for the batch_* methods (ignored elsewhere). ``split_fraction``
    sets the share of rows used for coefficients; the rest recover
    variances on disjoint rows. ``seed`` is reserved for randomized
    partitioning schemes; the current partitions are deterministic.
    """

    method: str
    batch_extra: int = 20
    split_fraction: float = 0.5
    variance_method: str = "empirical"
    seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigInvalid(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.variance_method not in VARIANCE_METHODS:
            raise ConfigInvalid(
                f"unknown variance method {self.variance_method!r}; expected one of {VARIANCE_METHODS}"
            )
        if not (0.0 < self.split_fraction < 1.0):
            raise ConfigInvalid(f"split_fraction must lie in (0, 1), got {self.split_fraction}")
        if not isinstance(self.batch_extra, int) or self.batch_extra < 0:
            raise ConfigInvalid(f"batch_extra must be a nonnegative integer, got {self.batch_extra!r}")
        if self.method in ("batch_avg", "batch_med") and self.batch_extra < 1:
            raise ConfigInvalid("batch_extra must be >= 1 for batch methods")


@dataclass(frozen=True)
class FitOutcome:
    """A fitted model plus the nodes whose variance estimate degenerated."""

    model: GaussianBayesNet
    degenerate_nodes: tuple[int, ...]


# --------------------------------------------------------------------------
# per-node coefficient estimators


def least_squares_node(parent_block: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Ordinary least squares of ``target`` on ``parent_block``.

    Raises RankDeficient when the Gram matrix is numerically singular at
    the relative threshold ``RANK_TOLERANCE``.
    """
    x = np.asarray(parent_block, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"incompatible shapes {x.shape} and {y.shape}")
    p = x.shape[1]
    sol, _, rank, _ = np.linalg.lstsq(x, y, rcond=_LSTSQ_RCOND)
    if rank < p:
        raise RankDeficient(f"design matrix has numerical rank {rank} < {p}")
    return sol


def batch_least_squares(parent_block: np.ndarray, target: np.ndarray, k: int, aggregator: str) -> np.ndarray:
    """Disjoint consecutive batches of ``k`` rows, least squares per batch.

    ``k`` must exceed the parent count; ``floor(m / k)`` batches are used
    and trailing rows are discarded. A rank-deficient batch is skipped;
    if every batch is skipped the whole call raises RankDeficient.
    ``aggregator`` selects ``"mean"`` or coordinate-wise ``"median"``
    (an even solution count yields the average of the two central order
    statistics per coordinate).
    """
    x = np.asarray(parent_block, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"incompatible shapes {x.shape} and {y.shape}")
    if aggregator not in ("mean", "median"):
        raise InvalidParameter(f"aggregator must be 'mean' or 'median', got {aggregator!r}")
    m, p = x.shape
    if k <= p:
        raise BatchTooSmall(f"batch size {k} must exceed parent count {p}")
    b = m // k
    if b < 1:
        raise InsufficientSamples(f"{m} rows cannot form a batch of {k}")
    solutions = []
    skipped = 0
    for s in range(b):
        rows = slice(s * k, (s + 1) * k)
        try:
            solutions.append(least_squares_node(x[rows], y[rows]))
        except RankDeficient:
            skipped += 1
    if not solutions:
        raise RankDeficient(f"all {b} batches were rank deficient")
    stacked = np.asarray(solutions)
    if aggregator == "mean":
        return stacked.mean(axis=0)
    return np.median(stacked, axis=0)


def batch_solve(square_block: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Solve the square linear system of one p-sample batch.

    Singular systems (or solves that overflow to non-finite values) fall
    back to the minimum-norm least-squares solution, so the caller always
    gets a finite vector to feed into a median.
    """
    x = np.asarray(square_block, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or x.shape[0] != x.shape[1] or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"need a square system, got {x.shape} and {y.shape}")
    try:
        sol = np.linalg.solve(x, y)
        if np.all(np.isfinite(sol)):
            return sol
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(x, y, rcond=None)[0]


def _batch_solve_stack(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    # Vectorized solve over a (b, p, p) stack with per-batch fallback on
    # singular or non-finite outcomes; bitwise identical to looping
    # batch_solve since the same LAPACK routine runs per matrix.
    try:
        sols = np.linalg.solve(xs, ys[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return np.stack([batch_solve(x, y) for x, y in zip(xs, ys)])
    bad = ~np.all(np.isfinite(sols), axis=1)
    if bad.any():
        for idx in np.flatnonzero(bad):
            sols[idx] = batch_solve(xs[idx], ys[idx])
    return sols


def cauchy_est_tree_node(parent_block: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Coordinate-wise median of square-batch solutions.

    Rows are split into ``floor(m / p)`` disjoint batches of exactly
    ``p`` rows; each batch is solved as a square system. For a polytree
    the per-batch errors are independent scaled Cauchy variables, so the
    median concentrates even with heavy tails and corrupted rows.
    """
    x = np.asarray(parent_block, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"incompatible shapes {x.shape} and {y.shape}")
    m, p = x.shape
    if p < 1:
        raise DimensionMismatch("node must have at least one parent")
    b = m // p
    if b < 1:
        raise InsufficientSamples(f"{m} rows cannot form a batch of {p}")
    xs = x[: b * p].reshape(b, p, p)
    ys = y[: b * p].reshape(b, p)
    sols = _batch_solve_stack(xs, ys)
    return np.median(sols, axis=0)


def cauchy_est_node(parent_block: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Median of square-batch solutions in a whitened coordinate system.

    The empirical parent second-moment matrix ``Mhat = X^T X / m`` (all
    rows) is Cholesky-factored as ``L L^T``; batch solutions are mapped
    through ``L^T``, the coordinate-wise median is taken there, and the
    result is mapped back by ``(L^T)^-1``. Requires ``m >= p + 1``. A
    failed factorization raises CholeskyFailed; it is never silently
    regularized.
    """
    x = np.asarray(parent_block, dtype=float)
    y = np.asarray(target, dtype=float)
    if x.ndim != 2 or y.shape != (x.shape[0],):
        raise DimensionMismatch(f"incompatible shapes {x.shape} and {y.shape}")
    m, p = x.shape
    if p < 1:
        raise DimensionMismatch("node must have at least one parent")
    if m < p + 1:
        raise InsufficientSamples(f"need at least {p + 1} rows, got {m}")
    mhat = x.T @ x / m
    try:
        ell = np.linalg.cholesky(mhat)
    except np.linalg.LinAlgError as exc:
        raise CholeskyFailed(f"empirical parent covariance is not positive definite: {exc}") from exc
    b = m // p
    xs = x[: b * p].reshape(b, p, p)
    ys = y[: b * p].reshape(b, p)
    sols = _batch_solve_stack(xs, ys)
    whitened_median = np.median(sols @ ell, axis=0)
    return scipy.linalg.solve_triangular(ell.T, whitened_median, lower=False)


def empirical_mle(data: np.ndarray) -> np.ndarray:
    """Empirical second-moment matrix ``X^T X / m`` (zero-mean MLE baseline)."""
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatch(f"need a nonempty 2-d sample array, got shape {x.shape}")
    return x.T @ x / x.shape[0]


# --------------------------------------------------------------------------
# variance recovery


def _residual_columns(dag: Dag, data: np.ndarray, coeffs) -> np.ndarray:
    out = np.empty_like(data)
    for i in range(dag.n):
        pa = dag.parents[i]
        if pa:
            out[:, i] = data[:, i] - data[:, pa] @ coeffs[i]
        else:
            out[:, i] = data[:, i]
    return out


def variance_recovery(dag: Dag, data: np.ndarray, coeffs) -> np.ndarray:
    """Mean squared residual per node given coefficient estimates.

    A parentless node's residual is its raw value. The rows passed here
    should be disjoint from the rows that produced ``coeffs``; ``fit``
    arranges that split.
    """
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != dag.n:
        raise DimensionMismatch(f"expected (m, {dag.n}) samples, got shape {x.shape}")
    if x.shape[0] < 1:
        raise InsufficientSamples("variance recovery needs at least one row")
    resid = _residual_columns(dag, x, coeffs)
    return (resid**2).mean(axis=0)


def mad_variance(residuals: np.ndarray) -> float:
    """Robust variance via the median absolute deviation.

    ``sigma_hat = 1.4826 * median(|x - median(x)|)``; returns the square.
    Invariant to up to half the entries being arbitrarily corrupted.
    """
    r = np.asarray(residuals, dtype=float).reshape(-1)
    if r.size < 1:
        raise InsufficientSamples("mad_variance needs at least one value")
    center = float(np.median(r))
    sigma = MAD_SCALE * float(np.median(np.abs(r - center)))
    return sigma * sigma


# --------------------------------------------------------------------------
# full-model fitting


def _required_m1(method: str, p: int, config: FitConfig) -> int:
    if method == "least_squares":
        return max(p, 1)
    if method in ("batch_avg", "batch_med"):
        return p + config.batch_extra
    if method == "cauchy_est_tree":
        return p
    return p + 1  # cauchy_est


def _coefficients_one_node(method: str, x: np.ndarray, y: np.ndarray, config: FitConfig) -> np.ndarray:
    if method == "least_squares":
        return least_squares_node(x, y)
    if method == "batch_avg":
        return batch_least_squares(x, y, x.shape[1] + config.batch_extra, "mean")
    if method == "batch_med":
        return batch_least_squares(x, y, x.shape[1] + config.batch_extra, "median")
    if method == "cauchy_est_tree":
        return cauchy_est_tree_node(x, y)
    return cauchy_est_node(x, y)


def fit_detailed(dag: Dag, data: np.ndarray, config: FitConfig) -> FitOutcome:
    """Two-phase fit returning the model plus degenerate-variance flags.

    Phase one runs the configured coefficient method on the first
    ``floor(split_fraction * m)`` rows, node by node in ascending order.
    Phase two recovers noise variances from the remaining rows' residuals
    (``empirical`` mean square or robust ``mad``). A variance estimate of
    zero is floored at ``DEGENERATE_VARIANCE`` and the node is reported
    in ``degenerate_nodes`` so callers can exclude the fit from scoring.
    """
    if config.method == "empirical_mle":
        raise ConfigInvalid(
            "empirical_mle is not a per-node coefficient method; call empirical_mle() "
            "and score it with gaussian_kl"
        )
    x = np.asarray(data, dtype=float)
    if x.ndim != 2 or x.shape[1] != dag.n:
        raise DimensionMismatch(f"expected (m, {dag.n}) samples, got shape {x.shape}")
    if np.isnan(x).any():
        raise InvalidParameter("samples contain NaN")
    m = x.shape[0]
    m1 = int(config.split_fraction * m)
    m2 = m - m1
    if m1 < 1 or m2 < 1:
        raise InsufficientSamples(
            f"split {config.split_fraction} of {m} rows leaves ({m1}, {m2}); both phases need rows"
        )
    coeffs: list[np.ndarray] = []
    for i in range(dag.n):
        pa = dag.parents[i]
        if not pa:
            coeffs.append(np.zeros(0))
            continue
        need = _required_m1(config.method, len(pa), config)
        if m1 < need:
            raise InsufficientSamples(
                f"node {i}: method {config.method} needs m1 >= {need}, got {m1}"
            )
        coeffs.append(_coefficients_one_node(config.method, x[:m1, pa], x[:m1, i], config))
    tail = x[m1:]
    if config.variance_method == "empirical":
        variances = variance_recovery(dag, tail, coeffs)
    else:
        resid = _residual_columns(dag, tail, coeffs)
        variances = np.array([mad_variance(resid[:, i]) for i in range(dag.n)])
    degenerate = tuple(
        i for i in range(dag.n) if not np.isfinite(variances[i]) or variances[i] <= DEGENERATE_VARIANCE
    )
    for i in degenerate:
        variances[i] = DEGENERATE_VARIANCE
    model = GaussianBayesNet(dag=dag, coeffs=tuple(coeffs), variances=variances)
    return FitOutcome(model=model, degenerate_nodes=degenerate)


def fit(dag: Dag, data: np.ndarray, config: FitConfig) -> GaussianBayesNet:
    """Fit a full model; see :func:`fit_detailed` for the split semantics."""
    return fit_detailed(dag, data, config).model
