"""Minibatch optimal transport over squared-L2 cost matrices.

Exact solutions are assignments (one noise chunk per data chunk); approximate
solutions are entropy-regularized transport plans computed with log-domain
Sinkhorn iterations. Marginals are always uniform (1/M on both sides).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import ShapeError, ValidationError

__all__ = [
    "CostMatrix",
    "Assignment",
    "TransportPlan",
    "cost_matrix",
    "solve_exact",
    "solve_sinkhorn",
    "plan_to_pairs",
    "transport_cost",
]


@dataclass(frozen=True)
class CostMatrix:
    """Square matrix of pairwise squared Euclidean distances."""

    values: np.ndarray

    def __post_init__(self):
        v = self.values
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ShapeError(f"cost matrix must be square, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValidationError("cost matrix has non-finite entries")
        if np.any(v < 0):
            raise ValidationError("cost matrix has negative entries")

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class Assignment:
    """Hard coupling: row i is paired with column sigma[i]; sigma is a bijection."""

    sigma: np.ndarray

    def __post_init__(self):
        s = self.sigma
        m = s.shape[0]
        if s.ndim != 1 or np.any(np.sort(s) != np.arange(m)):
            raise ValidationError("sigma must be a permutation of 0..M-1")


@dataclass(frozen=True)
class TransportPlan:
    """Soft coupling with uniform marginals.

    ``pi`` always satisfies the marginal constraints (the solver projects its
    final iterate onto the uniform-marginal polytope); ``converged`` and
    ``residual`` report whether and how closely the Sinkhorn iterations
    themselves met the requested tolerance before that projection.
    """

    pi: np.ndarray
    epsilon: float
    converged: bool = True
    residual: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        p = self.pi
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ShapeError(f"transport plan must be square, got shape {p.shape}")
        if np.any(p < 0):
            raise ValidationError("transport plan has negative entries")

    @property
    def m(self) -> int:
        return self.pi.shape[0]


def cost_matrix(a: np.ndarray, b: np.ndarray) -> CostMatrix:
    """Pairwise squared Euclidean distances between two equal-sized point sets.

    C[i, j] = ||a[i] - b[j]||^2 for a, b of shape (M, d).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"expected 2-D point arrays, got {a.shape} and {b.shape}")
    if a.shape != b.shape:
        raise ShapeError(f"point sets must match in count and dimension: {a.shape} vs {b.shape}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise ValidationError("input points have non-finite entries")
    # ||a-b||^2 = ||a||^2 + ||b||^2 - 2 a.b; clip tiny negatives from cancellation
    sq_a = np.sum(a * a, axis=1)[:, None]
    sq_b = np.sum(b * b, axis=1)[None, :]
    c = sq_a + sq_b - 2.0 * (a @ b.T)
    np.maximum(c, 0.0, out=c)
    return CostMatrix(c)


def solve_exact(c: CostMatrix) -> Assignment:
    """Minimum-cost assignment by shortest augmenting paths (Jonker-Volgenant).

    With uniform marginals the EMD problem reduces to an assignment problem;
    ties resolve to the lowest column index, so the result is deterministic.
    """
    _, cols = linear_sum_assignment(c.values)
    return Assignment(cols)


def solve_sinkhorn(
    c: CostMatrix,
    epsilon: float,
    max_iter: int = 1000,
    tol: float = 1e-6,
) -> TransportPlan:
    """Entropy-regularized transport plan via log-domain Sinkhorn iterations.

    Runs with an epsilon-scaling warm start (annealing the regularizer down
    from max(C)), checks the row-marginal residual every few iterations, and
    stops once it drops below ``tol`` or ``max_iter`` is spent. The final
    iterate is then rounded onto the uniform-marginal polytope, so the
    returned plan is always feasible; non-convergence of the iterations is
    reported through the ``converged`` flag, never raised.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be positive, got {epsilon}")
    if max_iter < 1:
        raise ValidationError(f"max_iter must be >= 1, got {max_iter}")
    cv = c.values
    m = c.m
    log_marg = -np.log(m)
    f = np.zeros(m)
    g = np.zeros(m)

    def lse_rows(x):
        mx = x.max(axis=1)
        return mx + np.log(np.exp(x - mx[:, None]).sum(axis=1))

    def lse_cols(x):
        mx = x.max(axis=0)
        return mx + np.log(np.exp(x - mx[None, :]).sum(axis=0))

    def sweep(eps):
        # One row update then one column update on the dual potentials.
        nonlocal f, g
        f = eps * (log_marg - lse_rows((g[None, :] - cv) / eps))
        g = eps * (log_marg - lse_cols((f[:, None] - cv) / eps))

    cmax = float(cv.max())
    if cmax > epsilon:
        # Geometric annealing from max(C) down to the target epsilon.
        n_stages = int(np.ceil(np.log2(cmax / epsilon)))
        for s in range(n_stages):
            eps_s = cmax * (epsilon / cmax) ** ((s + 1) / (n_stages + 1))
            for _ in range(15):
                sweep(eps_s)

    def plan():
        return np.exp((f[:, None] + g[None, :] - cv) / epsilon)

    residual = np.inf
    iterations = 0
    converged = False
    while iterations < max_iter:
        sweep(epsilon)
        iterations += 1
        if iterations % 10 == 0 or iterations == max_iter:
            # Column sums are exact after a g update; rows carry the error.
            residual = float(np.abs(plan().sum(axis=1) - 1.0 / m).max())
            if residual < tol:
                converged = True
                break

    pi = _round_to_uniform(plan(), m)
    return TransportPlan(pi, epsilon, converged=converged, residual=residual, iterations=iterations)


def _round_to_uniform(pi: np.ndarray, m: int) -> np.ndarray:
    """Project a near-feasible plan onto exact uniform marginals (AWR rounding)."""
    target = 1.0 / m
    rows = pi.sum(axis=1)
    pi = pi * np.minimum(target / np.where(rows > 0, rows, 1.0), 1.0)[:, None]
    cols = pi.sum(axis=0)
    pi = pi * np.minimum(target / np.where(cols > 0, cols, 1.0), 1.0)[None, :]
    err_r = np.maximum(target - pi.sum(axis=1), 0.0)
    err_c = np.maximum(target - pi.sum(axis=0), 0.0)
    missing = err_r.sum()
    if missing > 0:
        pi = pi + np.outer(err_r, err_c) / missing
    np.maximum(pi, 0.0, out=pi)
    return pi


def plan_to_pairs(
    plan: TransportPlan,
    rng: np.random.Generator,
    mode: str = "sample",
) -> np.ndarray:
    """Extract a hard pairing from a soft plan.

    For each row i, draw column j from the categorical distribution
    proportional to pi[i, :] (``mode="sample"``), or take the row argmax
    (``mode="argmax"``, deterministic, for tests). Columns may repeat, so the
    result is a pairing, not necessarily a bijection.
    """
    if mode not in ("sample", "argmax"):
        raise ValidationError(f"unknown pairing mode {mode!r}")
    pi = plan.pi
    row_sums = pi.sum(axis=1)
    if np.any(row_sums <= 0):
        raise ValidationError("transport plan has an all-zero row")
    if mode == "argmax":
        return np.argmax(pi, axis=1)
    probs = pi / row_sums[:, None]
    # Inverse-CDF draw per row; vectorized and reproducible under the rng.
    u = rng.random(plan.m)
    cdf = np.cumsum(probs, axis=1)
    cols = (u[:, None] > cdf).sum(axis=1)
    return np.minimum(cols, plan.m - 1)


def transport_cost(c: CostMatrix, solution: Assignment | TransportPlan | np.ndarray) -> float:
    """Objective value of a coupling on assignment scale.

    Assignments (or raw pairing index arrays) score sum_i C[i, sigma(i)];
    plans score <pi, C> * M so both are directly comparable.
    """
    cv = c.values
    if isinstance(solution, TransportPlan):
        if solution.m != c.m:
            raise ShapeError(f"plan size {solution.m} != cost matrix size {c.m}")
        return float(np.sum(solution.pi * cv) * c.m)
    sigma = solution.sigma if isinstance(solution, Assignment) else np.asarray(solution)
    if sigma.shape != (c.m,):
        raise ShapeError(f"pairing length {sigma.shape} != cost matrix size {c.m}")
    return float(cv[np.arange(c.m), sigma].sum())
