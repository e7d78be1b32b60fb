"""Linear-Gaussian network model on a known DAG.

A model assigns each node ``i`` the structural equation

    X_i = sum_j a[i<-j] * X_j + eta_i,    eta_i ~ N(0, sigma2_i)

over its parents ``j``, so the joint law is a zero-mean multivariate
Gaussian. This module holds the parameter container, forward sampling,
exact covariance algebra, and the evaluation machinery that scores a
learned model against the truth via the per-node decomposition of the
KL divergence between the two joint distributions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.linalg

from .dag import Dag, build_dag
from .errors import (
    DimensionMismatch,
    FileFormatError,
    InvalidIndex,
    InvalidParameter,
    InvalidRange,
    NonPositiveVariance,
    NoParents,
    NotPositiveDefinite,
    StructureMismatch,
)

# Evaluation reports clamp tiny negative rounding residue in the total
# KL at this floor before applying the total-variation bound.
KL_NEGATIVE_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class GaussianBayesNet:
    """Parameters of a linear-Gaussian network on a fixed DAG.

    ``coeffs[i]`` holds the edge coefficients of node ``i`` aligned with
    ``dag.parents[i]`` (ascending parent order); ``variances`` holds the
    strictly positive noise variances. Instances are immutable after
    construction.
    """

    dag: Dag
    coeffs: tuple[np.ndarray, ...]
    variances: np.ndarray

    def __post_init__(self):
        coeffs = tuple(np.asarray(c, dtype=float) for c in self.coeffs)
        variances = np.asarray(self.variances, dtype=float)
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "variances", variances)
        n = self.dag.n
        if len(coeffs) != n:
            raise DimensionMismatch(f"expected {n} coefficient vectors, got {len(coeffs)}")
        if variances.shape != (n,):
            raise DimensionMismatch(f"expected {n} variances, got shape {variances.shape}")
        for i, c in enumerate(coeffs):
            want = len(self.dag.parents[i])
            if c.shape != (want,):
                raise DimensionMismatch(
                    f"node {i}: expected {want} coefficients, got shape {c.shape}"
                )
            if not np.all(np.isfinite(c)):
                raise InvalidParameter(f"node {i}: coefficients must be finite")
        if not np.all(np.isfinite(variances)) or np.any(variances <= 0):
            raise NonPositiveVariance("noise variances must be finite and > 0")


@dataclass(frozen=True, eq=False)
class EvalReport:
    """Result of comparing a learned model against the truth.

    ``per_node_dcp[i]`` is node i's conditional KL contribution,
    ``kl_total`` their sum (ascending node order), and ``tv_upper`` the
    total-variation bound ``min(1, sqrt(max(kl, 0) / 2))``. When an error
    budget ``eps`` was supplied, the two per-node predicate arrays record
    whether each node meets its share of the budget (coefficient error
    and variance bracket respectively); otherwise they are None.
    """

    per_node_dcp: np.ndarray
    kl_total: float
    tv_upper: float
    condition1_satisfied: np.ndarray | None = None
    condition2_satisfied: np.ndarray | None = None


# --------------------------------------------------------------------------
# variance specifications for random model generation


@dataclass(frozen=True)
class UnitVariances:
    """Every node gets noise variance 1."""


@dataclass(frozen=True)
class UniformVariances:
    """Noise variances drawn i.i.d. uniform from [low, high)."""

    low: float
    high: float


@dataclass(frozen=True)
class IllConditionedVariances:
    """Listed nodes get a near-degenerate variance, all others get 1."""

    nodes: tuple[int, ...]
    sigma2: float = 1e-20


def random_gbn(dag: Dag, weight_range, variance_spec, rng: np.random.Generator) -> GaussianBayesNet:
    """Random model: coefficients are (uniform sign) * Uniform[lo, hi).

    ``weight_range`` gives the magnitude interval ``(lo, hi)`` with
    ``0 < lo < hi``; each coefficient's sign is an independent fair coin.
    ``variance_spec`` is one of :class:`UnitVariances`,
    :class:`UniformVariances`, or :class:`IllConditionedVariances`.
    Nodes are processed in ascending index so a fixed seed fixes the model.
    """
    lo, hi = float(weight_range[0]), float(weight_range[1])
    if not (0 < lo < hi):
        raise InvalidRange(f"weight magnitude range must satisfy 0 < lo < hi, got ({lo}, {hi})")
    coeffs = []
    for i in range(dag.n):
        p = len(dag.parents[i])
        mags = rng.uniform(lo, hi, size=p)
        signs = np.where(rng.integers(0, 2, size=p) == 0, -1.0, 1.0)
        coeffs.append(signs * mags)
    variances = _draw_variances(dag.n, variance_spec, rng)
    return GaussianBayesNet(dag=dag, coeffs=tuple(coeffs), variances=variances)


def _draw_variances(n: int, spec, rng: np.random.Generator) -> np.ndarray:
    if isinstance(spec, UnitVariances):
        return np.ones(n)
    if isinstance(spec, UniformVariances):
        if not (0 < spec.low <= spec.high):
            raise InvalidRange(f"variance range must satisfy 0 < low <= high, got {spec}")
        return rng.uniform(spec.low, spec.high, size=n)
    if isinstance(spec, IllConditionedVariances):
        if spec.sigma2 <= 0:
            raise NonPositiveVariance("ill-conditioned variance must be > 0")
        out = np.ones(n)
        for node in spec.nodes:
            if not (0 <= node < n):
                raise InvalidIndex(f"ill-conditioned node {node} outside [0, {n})")
            out[node] = spec.sigma2
        return out
    raise InvalidParameter(f"unknown variance spec {spec!r}")


# --------------------------------------------------------------------------
# sampling


def sample(model: GaussianBayesNet, m: int, rng: np.random.Generator, contamination=None) -> np.ndarray:
    """Draw ``m`` i.i.d. samples; returns an ``(m, n)`` float array.

    Nodes are filled in topological order, each from its structural
    equation, so a fixed seed yields a bit-identical matrix. When a
    contamination spec is given the designated (row, node) noise draws
    are replaced by draws from the contaminating law (see
    :func:`gbnlearn.datagen.contaminated_sample`), and the corruption
    propagates to descendants through the structural equations.
    """
    if contamination is not None:
        from .datagen import contaminated_sample

        return contaminated_sample(model, m, contamination, rng)
    return _forward_sample(model, m, rng, None, None, None)


def _forward_sample(model, m, rng, target_rows, target_nodes, contam_draw) -> np.ndarray:
    if not isinstance(m, int) or m < 1:
        raise InvalidParameter(f"sample count must be a positive integer, got {m!r}")
    dag = model.dag
    x = np.empty((m, dag.n))
    sigmas = np.sqrt(model.variances)
    for i in dag.order:
        # The clean draw always happens first so that, for a fixed seed,
        # untargeted noise is unchanged by contamination.
        eta = rng.normal(0.0, sigmas[i], size=m)
        if target_nodes is not None and i in target_nodes and len(target_rows) > 0:
            eta[target_rows] = contam_draw(len(target_rows))
        pa = dag.parents[i]
        if pa:
            x[:, i] = x[:, pa] @ model.coeffs[i] + eta
        else:
            x[:, i] = eta
    return x


# --------------------------------------------------------------------------
# covariance algebra


def covariance(model: GaussianBayesNet) -> np.ndarray:
    """Exact model covariance, computed by triangular forward substitution.

    Writing the coefficient matrix C (in topological coordinates, strictly
    lower triangular) and D = diag(variances), the joint satisfies
    ``(I - C) X = eta`` and hence ``Sigma = (I - C)^-1 D (I - C)^-T``.
    """
    dag = model.dag
    n = dag.n
    pos = np.empty(n, dtype=int)
    for k, node in enumerate(dag.order):
        pos[node] = k
    w = np.eye(n)
    for i in range(n):
        for j, a in zip(dag.parents[i], model.coeffs[i]):
            w[pos[i], pos[j]] = -a
    linv = scipy.linalg.solve_triangular(w, np.eye(n), lower=True, unit_diagonal=True)
    d = np.asarray(model.variances)[list(dag.order)]
    s_topo = (linv * d) @ linv.T
    s_topo = (s_topo + s_topo.T) / 2.0
    out = np.empty((n, n))
    out[np.ix_(dag.order, dag.order)] = s_topo
    return out


def parent_covariance(model: GaussianBayesNet, i: int) -> np.ndarray:
    """Covariance of node ``i``'s parent vector under ``model``."""
    if not (0 <= i < model.dag.n):
        raise InvalidIndex(f"node {i} outside [0, {model.dag.n})")
    pa = model.dag.parents[i]
    if not pa:
        raise NoParents(f"node {i} has no parents")
    return covariance(model)[np.ix_(pa, pa)]


# --------------------------------------------------------------------------
# evaluation


def dcp(true_coeffs, true_var: float, est_coeffs, est_var: float, parent_cov=None) -> float:
    """Single node's conditional KL contribution.

    For truth ``(A, sigma2)`` and estimate ``(Ahat, sigma2hat)`` with the
    true parent covariance ``M``:

        ln(sigmahat / sigma) + (sigma2 - sigma2hat) / (2 sigma2hat)
            + (Ahat - A)^T M (Ahat - A) / (2 sigma2hat)

    The quadratic term vanishes for a node without parents (pass
    ``parent_cov=None`` or an empty matrix).
    """
    true_var = float(true_var)
    est_var = float(est_var)
    if true_var <= 0 or est_var <= 0:
        raise NonPositiveVariance("dcp needs strictly positive variances")
    a = np.asarray(true_coeffs, dtype=float).reshape(-1)
    ahat = np.asarray(est_coeffs, dtype=float).reshape(-1)
    if a.shape != ahat.shape:
        raise DimensionMismatch(f"coefficient shapes differ: {a.shape} vs {ahat.shape}")
    p = a.size
    if p == 0:
        quad = 0.0
    else:
        m = np.asarray(parent_cov, dtype=float)
        if m.shape != (p, p):
            raise DimensionMismatch(f"parent covariance must be {p}x{p}, got {m.shape}")
        delta = ahat - a
        quad = float(delta @ m @ delta)
    return 0.5 * math.log(est_var / true_var) + (true_var - est_var) / (2.0 * est_var) + quad / (
        2.0 * est_var
    )


def kl_divergence(truth: GaussianBayesNet, estimate: GaussianBayesNet, condition_eps: float | None = None) -> EvalReport:
    """Exact KL(truth || estimate) decomposed into per-node terms.

    Both models must share the same DAG. Parent covariances come from the
    true model's exact covariance, so the total equals the closed-form
    Gaussian KL between the two joint distributions. Pass
    ``condition_eps`` to also evaluate the per-node error-budget
    predicates (see :func:`condition_predicates`).
    """
    if truth.dag != estimate.dag:
        raise StructureMismatch("models must share the same DAG")
    dag = truth.dag
    cov_true = covariance(truth)
    per_node = np.empty(dag.n)
    quads = np.empty(dag.n)
    for i in range(dag.n):
        pa = dag.parents[i]
        m_i = cov_true[np.ix_(pa, pa)] if pa else None
        per_node[i] = dcp(truth.coeffs[i], truth.variances[i], estimate.coeffs[i], estimate.variances[i], m_i)
        if pa:
            delta = estimate.coeffs[i] - truth.coeffs[i]
            quads[i] = float(delta @ m_i @ delta)
        else:
            quads[i] = 0.0
    kl_total = float(np.sum(per_node))
    if kl_total < -KL_NEGATIVE_TOLERANCE:
        # Each term is a KL of conditionals, so the sum is nonnegative up
        # to rounding; anything below the floor is clamped, not hidden.
        kl_total = -KL_NEGATIVE_TOLERANCE
    tv_upper = min(1.0, math.sqrt(max(kl_total, 0.0) / 2.0))
    cond1 = cond2 = None
    if condition_eps is not None:
        cond1, cond2 = condition_predicates(truth, estimate, condition_eps, quads=quads)
    return EvalReport(
        per_node_dcp=per_node,
        kl_total=kl_total,
        tv_upper=tv_upper,
        condition1_satisfied=cond1,
        condition2_satisfied=cond2,
    )


def condition_predicates(truth: GaussianBayesNet, estimate: GaussianBayesNet, eps: float, quads=None):
    """Per-node error-budget predicates for a total budget ``eps``.

    Node i's share of the budget is ``eps * p_i / (n * d_avg)``. The
    first predicate bounds the coefficient error quadratic form by
    ``sigma2_i`` times that share (trivially satisfied at parentless
    nodes, whose share is zero). The second brackets the estimated
    variance within ``(1 +- sqrt(share)) * sigma2_i``; parentless nodes
    use an effective parent count of one there, since a zero-width
    bracket would be unsatisfiable by any finite-sample estimate. A
    graph with no edges falls back to ``n`` as the normalizer for the
    same reason.
    """
    if eps <= 0:
        raise InvalidParameter(f"error budget must be positive, got {eps}")
    if truth.dag != estimate.dag:
        raise StructureMismatch("models must share the same DAG")
    dag = truth.dag
    if quads is None:
        cov_true = covariance(truth)
        quads = np.zeros(dag.n)
        for i in range(dag.n):
            pa = dag.parents[i]
            if pa:
                delta = estimate.coeffs[i] - truth.coeffs[i]
                quads[i] = float(delta @ cov_true[np.ix_(pa, pa)] @ delta)
    total_edges = dag.num_edges
    denom = total_edges if total_edges > 0 else dag.n
    cond1 = np.empty(dag.n, dtype=bool)
    cond2 = np.empty(dag.n, dtype=bool)
    for i in range(dag.n):
        p = len(dag.parents[i])
        sigma2 = float(truth.variances[i])
        share1 = eps * p / denom
        cond1[i] = abs(quads[i]) <= sigma2 * share1
        half_width = math.sqrt(eps * max(p, 1) / denom)
        est_var = float(estimate.variances[i])
        cond2[i] = (1.0 - half_width) * sigma2 <= est_var <= (1.0 + half_width) * sigma2
    return cond1, cond2


def gaussian_kl(sigma_p: np.ndarray, sigma_q: np.ndarray) -> float:
    """Closed-form KL between zero-mean Gaussians N(0, sigma_p), N(0, sigma_q).

        KL = (tr(sigma_q^-1 sigma_p) - n + ln det sigma_q - ln det sigma_p) / 2

    Log-determinants and the trace term go through Cholesky factors; a
    failed factorization raises NotPositiveDefinite rather than being
    regularized away.
    """
    p = np.asarray(sigma_p, dtype=float)
    q = np.asarray(sigma_q, dtype=float)
    if p.ndim != 2 or p.shape[0] != p.shape[1] or p.shape != q.shape:
        raise DimensionMismatch(f"need two square matrices of equal size, got {p.shape} and {q.shape}")
    n = p.shape[0]
    for name, mat in (("first", p), ("second", q)):
        if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
            raise NotPositiveDefinite(f"{name} matrix is not symmetric")
    try:
        lp = np.linalg.cholesky(p)
        lq = np.linalg.cholesky(q)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"covariance is not positive definite: {exc}") from exc
    logdet_p = 2.0 * float(np.sum(np.log(np.diag(lp))))
    logdet_q = 2.0 * float(np.sum(np.log(np.diag(lq))))
    half = scipy.linalg.solve_triangular(lq, p, lower=True)
    whitened = scipy.linalg.solve_triangular(lq, half.T, lower=True)
    trace = float(np.trace(whitened))
    return 0.5 * (trace - n + logdet_q - logdet_p)


# --------------------------------------------------------------------------
# file formats

_FLOAT_FMT = "%.17g"


def save_model(model: GaussianBayesNet, path) -> None:
    """Write ``node i sigma2 v`` and ``coef i j v`` lines (17 significant digits)."""
    lines = []
    for i in range(model.dag.n):
        lines.append(f"node {i} sigma2 {_FLOAT_FMT % model.variances[i]}")
        for j, a in zip(model.dag.parents[i], model.coeffs[i]):
            lines.append(f"coef {i} {j} {_FLOAT_FMT % a}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_model(path) -> GaussianBayesNet:
    """Parse a model file written by :func:`save_model`.

    The DAG is reconstructed from the ``coef`` lines, so the file is
    self-contained.
    """
    variances: dict[int, float] = {}
    coef_map: dict[tuple[int, int], float] = {}
    for ln in Path(path).read_text().splitlines():
        ln = ln.strip()
        if not ln:
            continue
        parts = ln.split()
        try:
            if parts[0] == "node" and len(parts) == 4 and parts[2] == "sigma2":
                variances[int(parts[1])] = float(parts[3])
            elif parts[0] == "coef" and len(parts) == 4:
                coef_map[(int(parts[1]), int(parts[2]))] = float(parts[3])
            else:
                raise ValueError(f"unrecognized line {ln!r}")
        except ValueError as exc:
            raise FileFormatError(f"{path}: {exc}") from exc
    n = len(variances)
    if sorted(variances) != list(range(n)):
        raise FileFormatError(f"{path}: node lines must cover 0..n-1 exactly once")
    edges = [(j, i) for (i, j) in coef_map]
    try:
        dag = build_dag(n, edges)
    except Exception as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    coeffs = tuple(
        np.array([coef_map[(i, j)] for j in dag.parents[i]], dtype=float) for i in range(n)
    )
    var = np.array([variances[i] for i in range(n)])
    try:
        return GaussianBayesNet(dag=dag, coeffs=coeffs, variances=var)
    except Exception as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def save_samples(data: np.ndarray, path) -> None:
    """Headerless CSV, one sample per row, 17 significant digits."""
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2:
        raise DimensionMismatch(f"samples must be a 2-d array, got shape {arr.shape}")
    np.savetxt(path, arr, fmt=_FLOAT_FMT, delimiter=",")


def load_samples(path) -> np.ndarray:
    """Read a samples CSV written by :func:`save_samples`."""
    try:
        arr = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc
    if np.isnan(arr).any():
        raise FileFormatError(f"{path}: samples contain NaN")
    return arr
